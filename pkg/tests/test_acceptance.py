"""End-to-end acceptance suite.

Each test states its own tolerance and wall-clock budget. The training
studies at the bottom are the expensive ones; everything else runs in
seconds.
"""

import dataclasses
import json
import math
import time

import numpy as np
import pytest

from cotrack.env import CoTrackEnv, EnvConfig, PointMassEnv
from cotrack.env.config import config_from_dict
from cotrack.env.cotrack_env import apply_action
from cotrack.env.observation import build_observation
from cotrack.env.rewards import interaction_reward
from cotrack.env.termination import check_termination
from cotrack.learn import (PPOConfig, TrainConfig, compute_gae, init_policy,
                           train)
from cotrack.learn.nets import gaussian_logp, mlp_backward, mlp_forward, policy_mean
from cotrack.learn.ppo import _flatten_params, ppo_loss_and_grads
from cotrack.refmotion import (Keyframe, KeyframeScript, ReferenceFrame,
                               ValidationError, corrupt_reference,
                               generate_from_keyframes, parse_motion, sample,
                               serialize_motion)
from cotrack.sim_core import (ContactReport, build_world, initial_state, step)
from cotrack.sim_core.engine import Contact
from cotrack.tasks import TASK_NAMES, load_task

from helpers import box_object, chain_robot, free_ball, pendulum_object

DT = 1.0 / 120.0


class Budget:
    """Asserts the enclosed block finished inside a wall-clock budget."""

    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.monotonic()
        return self

    def __exit__(self, *exc):
        if exc[0] is None:
            elapsed = time.monotonic() - self.t0
            assert elapsed < self.seconds, (
                f"ran {elapsed:.1f}s, budget {self.seconds}s")


# ------------------------------------------------------------ physics oracles


def test_physics_oracles():
    with Budget(30):
        # ballistic flight matches the per-step closed form of the
        # symplectic-Euler integrator
        world = build_world(free_ball(), None)
        state = initial_state(world, root_pos=(0.0, 50.0),
                              root_vel=(1.5, 2.0, 0.3))
        v, z, x = 2.0, 50.0, 0.0
        g = world.gravity
        for _ in range(200):
            state, _ = step(world, state, [], DT)
            v = v + g * DT
            z = z + v * DT
            x = x + 1.5 * DT
            assert abs(state.vz[0] - v) <= 1e-12
            assert abs(state.z[0] - z) <= 1e-12
            assert abs(state.x[0] - x) <= 1e-12

        # small-amplitude pendulum period within 2% of 2*pi*sqrt(L/g)
        length = 0.5
        obj, pos, amp = pendulum_object(length=length)
        world = build_world(free_ball(), obj)
        state = initial_state(world, root_pos=(30.0, 0.11),
                              object_pos=pos, object_ori=amp)
        analytic = 2.0 * math.pi * math.sqrt(length / 9.81)
        prev = state.theta[1]
        crossings = []
        for _ in range(int(11 * analytic / DT)):
            state, _ = step(world, state, [], DT)
            cur = state.theta[1]
            if prev > 0 >= cur or prev < 0 <= cur:
                crossings.append(state.time)
            prev = cur
        assert len(crossings) >= 21
        period = (crossings[20] - crossings[0]) / 10.0
        assert abs(period - analytic) / analytic < 0.02

        # linear momentum conserved without gravity or contact
        robot = chain_robot(n_links=2, kp=0.0, kd=0.0)
        world = build_world(robot, None, gravity=0.0)
        state = initial_state(world, root_pos=(0.0, 5.0),
                              root_vel=(0.4, 0.2, 1.0), joint_vel=[2.0, -3.0])
        masses = np.array([b.mass for b in world.bodies])
        p0 = np.array([np.dot(masses, state.vx), np.dot(masses, state.vz)])
        for _ in range(200):
            state, report = step(world, state, [0.0, 0.0], DT)
            assert not report.contacts
            p = np.array([np.dot(masses, state.vx),
                          np.dot(masses, state.vz)])
            assert np.all(np.abs(p - p0) <= 1e-9)


# ------------------------------------------------- interaction reward formula


def _direct_formula(dist, force, cfg):
    pos_term = math.exp(-dist / cfg.sigma_pos)
    frc_term = min(math.exp((force - cfg.f_thres) / cfg.sigma_frc), 1.0)
    return pos_term * frc_term


def test_interaction_reward_matches_direct_formula():
    with Budget(5):
        cfg = EnvConfig()

        # saturation: on target with force at/above threshold -> exactly 1
        for f in (cfg.f_thres, cfg.f_thres + 1.0, 500.0):
            assert interaction_reward([(0.0, 0.0)], [(0.0, 0.0)], [f], [1],
                                      cfg) == 1.0

        # force cap: raising force above the threshold changes nothing
        a = interaction_reward([(0.2, 0.0)], [(0.0, 0.0)], [cfg.f_thres], [1],
                               cfg)
        b = interaction_reward([(0.2, 0.0)], [(0.0, 0.0)], [10 * cfg.f_thres],
                               [1], cfg)
        assert a == b

        # gating: all flags zero -> exactly 0
        assert interaction_reward([(0.0, 0.0)], [(0.0, 0.0)], [100.0], [0],
                                  cfg) == 0.0

        # exhaustive grid against the direct formula, exact to 1e-12,
        # plus bounds and monotonicity along both axes
        dists = np.linspace(0.0, 1.0, 20)
        forces = np.linspace(0.0, 2.0 * cfg.f_thres, 20)
        vals = np.zeros((20, 20))
        for i, d in enumerate(dists):
            for j, f in enumerate(forces):
                got = interaction_reward([(d, 0.0)], [(0.0, 0.0)], [f], [1],
                                         cfg)
                assert abs(got - _direct_formula(d, f, cfg)) <= 1e-12
                assert 0.0 <= got <= 1.0
                vals[i, j] = got
        assert np.all(np.diff(vals, axis=0) <= 1e-15)  # farther never better
        assert np.all(np.diff(vals, axis=1) >= -1e-15)  # more force never worse


# --------------------------------------------------------- termination table


def _term_world():
    robot = chain_robot(n_links=2, kp=30.0, kd=1.0, limits=(-2.5, 2.5))
    obj = box_object(anchors=[("a0", (-0.15, 0.0))])
    return build_world(robot, obj), (0.8, 0.4)


def _frame(root=(0.0, 1.0), ori=0.0, joints=(0.0, 0.0), opos=(0.8, 0.4),
           oori=0.0, flags=(0,), anchors=(None,)):
    return ReferenceFrame(robot_root_pos=root, robot_root_ori=ori,
                          joint_pos=joints, object_pos=opos, object_ori=oori,
                          object_joint=None, contact_flags=flags,
                          contact_anchor_ids=anchors)


def test_termination_table_branches():
    with Budget(5):
        cfg = EnvConfig()
        world, obj_pos = _term_world()
        empty = ContactReport(contacts=[])

        def term(state, frame, report=empty, step_no=30):
            return check_termination(world, state, frame, report, step_no,
                                     cfg, phase=0.5)

        aligned = initial_state(world, root_pos=(0.0, 1.0),
                                object_pos=obj_pos)
        ref = _frame(opos=obj_pos)

        # no error-based termination before the minimum step count, however
        # large the error
        far = initial_state(world, root_pos=(40.0, 9.0), object_pos=obj_pos)
        for s in range(cfg.term_min_steps):
            r = check_termination(world, far, ref, empty, s, cfg, phase=0.5)
            assert not r.terminated
        assert term(far, ref, step_no=cfg.term_min_steps).terminated

        # clean pass at matching pose
        assert not term(aligned, ref).terminated

        # root position boundary at 0.5 m: at the threshold passes, just
        # above fails
        at = initial_state(world, root_pos=(0.5, 1.0), object_pos=obj_pos)
        over = initial_state(world, root_pos=(0.5 + 1e-6, 1.0),
                             object_pos=obj_pos)
        assert not term(at, ref).terminated
        assert term(over, ref).reason == "root_pose"

        # root orientation boundary at 1.2 rad (bracketed to dodge the
        # one-ulp wobble of angle wrapping)
        at = initial_state(world, root_pos=(0.0, 1.0), root_ori=1.2 - 1e-9,
                           object_pos=obj_pos, object_ori=0.0)
        rot_ref = _frame(opos=obj_pos)
        assert term(at, rot_ref).reason != "root_pose"
        over = initial_state(world, root_pos=(0.0, 1.0), root_ori=1.2 + 1e-6,
                             object_pos=obj_pos)
        assert term(over, rot_ref).reason == "root_pose"

        # body-pose branch: root matches but a link strays past 0.5 m
        bent = initial_state(world, root_pos=(0.0, 1.0),
                             joint_pos=(2.4, -2.4), object_pos=obj_pos)
        bent_ref = _frame(joints=(0.0, 0.0), opos=obj_pos)
        assert term(bent, bent_ref).reason == "body_pose"

        # object-pose branch
        obj_off = initial_state(world, root_pos=(0.0, 1.0),
                                object_pos=(obj_pos[0] + 0.51, obj_pos[1]))
        assert term(obj_off, ref).reason == "object_pose"

        # lost-contact branch is a strict conjunction: distance > 0.2 m AND
        # force < 1 N, only while a contact is flagged
        flagged = _frame(opos=obj_pos, flags=(1,), anchors=("a0",))
        near_report = ContactReport(contacts=[Contact(
            body_a="link1", body_b="crate", point=(0.8, 0.4),
            normal=(1.0, 0.0), force=5.0, tangent_force=0.0)])
        # eef far from anchor (chain hangs at x~0, anchor at the object),
        # force high -> no termination
        assert term(aligned, flagged, report=near_report).reason != \
            "lost_contact"
        # far and weak -> lost contact
        assert term(aligned, flagged).reason == "lost_contact"
        # flag off -> conjunction never evaluated
        assert term(aligned, ref).reason == "none"
        # contact termination can be disabled
        cfg_off = dataclasses.replace(cfg, use_contact_termination=False)
        r = check_termination(world, aligned, flagged, empty, 30, cfg_off,
                              phase=0.5)
        assert r.reason != "lost_contact"

        # motion end wins at phase 1 regardless of step count
        r = check_termination(world, aligned, ref, empty, 3, cfg, phase=1.0)
        assert r.terminated and r.reason == "motion_end" and not r.is_failure


# ---------------------------------------------------------- frame invariance


def test_observation_invariant_under_rigid_transforms():
    with Budget(10):
        world, obj_pos = _term_world()
        rng = np.random.default_rng(7)
        frame0 = _frame(root=(0.1, 1.2), ori=0.2, joints=(0.3, -0.4),
                        opos=(0.9, 0.4), oori=0.5, flags=(1,),
                        anchors=("a0",))
        base_state = dict(root_pos=(0.1, 1.2), root_ori=0.2,
                          joint_pos=(0.3, -0.4), object_pos=(0.9, 0.4),
                          object_ori=0.5, root_vel=(0.5, -0.2, 0.3))
        s1 = initial_state(world, **base_state)
        o1 = build_observation(world, s1, frame0, np.zeros(2), 0.5).as_vector()
        for _ in range(1000):
            alpha = rng.uniform(-math.pi, math.pi)
            tx, tz = rng.uniform(-5.0, 5.0, 2)
            ca, sa = math.cos(alpha), math.sin(alpha)

            def xf(p):
                return (ca * p[0] - sa * p[1] + tx,
                        sa * p[0] + ca * p[1] + tz)

            v = base_state["root_vel"]
            s2 = initial_state(
                world, root_pos=xf(base_state["root_pos"]),
                root_ori=base_state["root_ori"] + alpha,
                joint_pos=base_state["joint_pos"],
                object_pos=xf(base_state["object_pos"]),
                object_ori=base_state["object_ori"] + alpha,
                root_vel=(ca * v[0] - sa * v[1], sa * v[0] + ca * v[1], v[2]))
            frame2 = _frame(root=xf((0.1, 1.2)), ori=0.2 + alpha,
                            joints=(0.3, -0.4), opos=xf((0.9, 0.4)),
                            oori=0.5 + alpha, flags=(1,), anchors=("a0",))
            o2 = build_observation(world, s2, frame2, np.zeros(2),
                                   0.5).as_vector()
            assert np.max(np.abs(o2 - o1)) <= 1e-9


# ---------------------------------------------------------- residual identity


def test_zero_action_commands_reference_joints_exactly():
    with Budget(10):
        for name in TASK_NAMES:
            t = load_task(name)
            world = t.build_world()
            env = CoTrackEnv(world, t.motion, EnvConfig(), seed=0,
                             eval_mode=True)
            env.reset()
            while True:
                ref = sample(t.motion, env.phase).joint_pos
                obs, rew, term, info = env.step(np.zeros(env.action_size))
                assert np.array_equal(info["targets"], np.asarray(ref)), name
                if term.terminated:
                    break


# ------------------------------------------------------------ gradient checks


def _numeric_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + eps
        hi = f()
        x[i] = orig - eps
        lo = f()
        x[i] = orig
        g[i] = (hi - lo) / (2 * eps)
        it.iternext()
    return g


def test_gradients_match_finite_differences_over_random_networks():
    with Budget(60):
        rng = np.random.default_rng(11)
        cfg = PPOConfig()
        for trial in range(100):
            obs_size = int(rng.integers(2, 5))
            act_size = int(rng.integers(1, 3))
            hidden = (int(rng.integers(3, 7)),)
            params = init_policy(obs_size, act_size, hidden=hidden,
                                 seed=trial)
            n = 6
            obs = rng.normal(size=(n, obs_size))
            actions = rng.normal(size=(n, act_size))
            mu = policy_mean(params, obs)
            old_logp = gaussian_logp(actions, mu, params.log_std) \
                + rng.normal(0, 0.1, n)
            adv = rng.normal(size=n)
            ret = rng.normal(size=n)

            def loss():
                l, _, _ = ppo_loss_and_grads(params, obs, actions, old_logp,
                                             adv, ret, cfg)
                return l

            _, grads, _ = ppo_loss_and_grads(params, obs, actions, old_logp,
                                             adv, ret, cfg)
            for arr, g in zip(_flatten_params(params), grads):
                gn = _numeric_grad(loss, arr)
                denom = max(np.max(np.abs(gn)), np.max(np.abs(g)), 1e-8)
                assert np.max(np.abs(g - gn)) / denom < 1e-4


def test_gae_hand_cases_exact():
    with Budget(5):
        # single step, bootstrapped
        adv, ret = compute_gae([1.0], [0.5], [0.0], last_value=2.0,
                               gamma=0.9, lam=0.8)
        assert adv[0] == pytest.approx(1.0 + 0.9 * 2.0 - 0.5, abs=1e-15)
        assert ret[0] == pytest.approx(adv[0] + 0.5, abs=1e-15)

        # two steps, recursive accumulation
        adv, ret = compute_gae([1.0, 2.0], [0.5, 0.25], [0.0, 0.0],
                               last_value=1.5, gamma=0.9, lam=0.8)
        d1 = 2.0 + 0.9 * 1.5 - 0.25
        d0 = 1.0 + 0.9 * 0.25 - 0.5
        assert adv[1] == pytest.approx(d1, abs=1e-15)
        assert adv[0] == pytest.approx(d0 + 0.9 * 0.8 * d1, abs=1e-15)

        # terminal flag cuts both the bootstrap and the accumulation
        adv, _ = compute_gae([1.0, 2.0], [0.5, 0.25], [1.0, 0.0],
                             last_value=1.5, gamma=0.9, lam=0.8)
        assert adv[0] == pytest.approx(1.0 - 0.5, abs=1e-15)
        assert adv[1] == pytest.approx(2.0 + 0.9 * 1.5 - 0.25, abs=1e-15)


# ------------------------------------------------------- dataset round-trips


def _random_script(rng):
    n_joints = int(rng.integers(1, 5))
    times = np.sort(rng.uniform(0.0, 3.0, int(rng.integers(2, 6))))
    times[0] = 0.0
    frames = []
    for t in times:
        frames.append(Keyframe(
            time=float(t),
            robot_root_pos=tuple(rng.uniform(-1, 1, 2)),
            robot_root_ori=float(rng.uniform(-1, 1)),
            joint_pos=tuple(rng.uniform(-1, 1, n_joints)),
            object_pos=tuple(rng.uniform(-1, 1, 2)),
            object_ori=float(rng.uniform(-1, 1)),
        ))
    return KeyframeScript(keyframes=tuple(frames), contact_windows=(),
                          n_eefs=1, interpolation="linear")


def test_dataset_round_trip_and_rejection():
    with Budget(10):
        rng = np.random.default_rng(3)
        for i in range(100):
            motion = generate_from_keyframes(
                _random_script(rng), rate=30.0, robot_model_id=f"r{i}",
                object_model_id=f"o{i}", name=f"m{i}",
                valid_anchor_ids=())
            text = serialize_motion(motion)
            back = parse_motion(text)
            assert back == motion

        good = json.loads(serialize_motion(generate_from_keyframes(
            _random_script(rng), rate=30.0, robot_model_id="r",
            object_model_id="o", name="m", valid_anchor_ids=())))

        # malformed JSON is rejected with a located error
        with pytest.raises(ValidationError):
            parse_motion("{not json")

        # wrong version
        bad = dict(good)
        bad["motion_version"] = "0.0"
        with pytest.raises(ValidationError) as e:
            parse_motion(json.dumps(bad))
        assert "motion_version" in str(e.value)

        # missing field inside a frame, error names the frame
        bad = json.loads(json.dumps(good))
        del bad["frames"][1]["joint_pos"]
        with pytest.raises(ValidationError) as e:
            parse_motion(json.dumps(bad))
        assert "frames[1]" in str(e.value)

        # non-numeric value, error names the frame
        bad = json.loads(json.dumps(good))
        bad["frames"][0]["object_ori"] = "up"
        with pytest.raises(ValidationError) as e:
            parse_motion(json.dumps(bad))
        assert "frames[0]" in str(e.value)


def _pointmass_return(env, policy, episodes=20, seed=123):
    rets = []
    for e in range(episodes):
        obs = env.reset(seed=seed + e)
        total, done = 0.0, False
        while not done:
            obs, r, done, _ = env.step(policy(obs))
            total += r
        rets.append(total)
    return float(np.mean(rets))


@pytest.mark.slow
def test_pointmass_ppo_approaches_pd_oracle():
    """PPO on the point-mass task reaches >=0.9x the return of a hand-tuned
    PD controller within 300 updates on every one of three seeds."""
    env = PointMassEnv(seed=0)
    oracle = _pointmass_return(
        env, lambda o: np.array([np.clip(10.0 * o[0] - 1.0 * o[1], -1, 1)]))
    with Budget(600.0):
        for seed in (0, 1, 2):
            tc = TrainConfig(updates=300, rollout_steps=256, seed=seed,
                             ppo=PPOConfig(lr=1e-3))
            params, _ = train(lambda i: PointMassEnv(seed=100 + i), tc,
                              n_envs=2)
            ret = _pointmass_return(
                env, lambda o: policy_mean(params, o[None, :])[0])
            assert ret >= 0.9 * oracle, (
                f"seed {seed}: {ret:.2f} < 0.9 * oracle {oracle:.2f}")


@pytest.mark.slow
def test_residual_action_study_on_kneel_lift():
    """At a fixed 150-update budget on kneel_lift, median joint+body tracking
    error over 3 seeds orders the variants: residual action best, absolute
    (non-residual) action worse, absolute action without the body-tracking
    termination worst or tied."""
    from cotrack.evalharness import rollout_eval

    t = load_task("kneel_lift")
    world = t.build_world()
    base = EnvConfig()
    variants = {
        "residual": base,
        "non_residual": dataclasses.replace(base, use_residual_action=False),
        "non_residual_no_track": dataclasses.replace(
            base, use_residual_action=False,
            use_body_track_termination=False),
    }
    medians = {}
    with Budget(7200.0):
        for name, cfg in variants.items():
            errs = []
            for seed in (0, 1, 2):
                def factory(i, cfg=cfg, seed=seed):
                    return CoTrackEnv(world, t.motion, cfg, seed=seed * 100 + i)
                tc = TrainConfig(updates=150, rollout_steps=256, seed=seed,
                                 ppo=PPOConfig(lr=1e-3))
                params, _ = train(factory, tc, n_envs=4)
                m = rollout_eval(world, t.motion, cfg, params, episodes=2,
                                 seed=seed)
                errs.append(m.joint_err_mean + m.body_err_mean)
            medians[name] = float(np.median(errs))
    assert medians["residual"] < medians["non_residual"], medians
    assert medians["non_residual_no_track"] >= medians["non_residual"] - 1e-9, \
        medians


@pytest.mark.slow
def test_interaction_reward_study_on_corrupted_push_box():
    """At a fixed 600-update budget on push_box with the end-effector
    reference retracted 0.1 m (so it never reaches the crate face), median
    success over 3 seeds with the interaction reward exceeds the median
    without it by at least 0.2.  Contact-based terminations are disabled in
    the evaluation rollouts for both arms."""
    from cotrack.evalharness import rollout_eval
    from cotrack.learn.ppo import PPOLearner
    from cotrack.learn.train import RolloutCollector, _obs_vector

    t = load_task("push_box")
    world = t.build_world()
    corrupted = corrupt_reference(t.motion, eef_offset=(-0.1, 0.0),
                                  window=(0.1, 0.95), robot=t.robot)
    arms = {
        "with_ir": EnvConfig(),
        "no_ir": dataclasses.replace(EnvConfig(),
                                     use_interaction_reward=False),
    }
    eval_cfg = dataclasses.replace(EnvConfig(), use_contact_termination=False)
    success = {}
    with Budget(7200.0):
        for name, cfg in arms.items():
            wins = []
            for seed in (0, 1, 2):
                envs = [CoTrackEnv(world, corrupted, cfg, seed=seed * 100 + i)
                        for i in range(4)]
                obs0 = _obs_vector(envs[0].reset())
                params = init_policy(obs0.shape[0], envs[0].action_size,
                                     hidden=(64, 64), seed=seed)
                learner = PPOLearner(params,
                                     PPOConfig(lr=1e-3, entropy_coef=0.0))
                collector = RolloutCollector(envs, seed=seed + 1000)
                rng = np.random.default_rng(seed + 2000)
                for _ in range(600):
                    batch, _ = collector.collect(learner.params, 256)
                    learner.update(batch["obs"], batch["actions"],
                                   batch["old_logp"], batch["advantages"],
                                   batch["returns"], rng)
                m = rollout_eval(world, corrupted, eval_cfg, learner.params,
                                 episodes=2, seed=seed)
                wins.append(m.success_rate)
            success[name] = float(np.median(wins))
    assert success["with_ir"] - success["no_ir"] >= 0.2, success
