"""Learning-stack tests: backprop gradients, GAE, PPO mechanics, training."""

import numpy as np
import pytest

from cotrack.env import PointMassEnv
from cotrack.learn import (
    Adam,
    PPOConfig,
    PPOLearner,
    TrainConfig,
    compute_gae,
    gaussian_logp,
    init_policy,
    load_params,
    mlp_backward,
    mlp_forward,
    policy_mean,
    ppo_loss_and_grads,
    sample_action,
    save_params,
    train,
)
from cotrack.learn.ppo import _flatten_params, _unflatten_params


# ------------------------------------------------------------------ backprop


def numeric_grad(f, x, eps=1e-6):
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


def test_mlp_backward_matches_finite_differences():
    rng = np.random.default_rng(0)
    params = [(rng.normal(size=(4, 8)), rng.normal(size=8)),
              (rng.normal(size=(8, 3)), rng.normal(size=3))]
    x = rng.normal(size=(5, 4))
    target = rng.normal(size=(5, 3))

    def loss():
        out, _ = mlp_forward(params, x)
        return 0.5 * np.sum((out - target) ** 2)

    out, cache = mlp_forward(params, x)
    grads, grad_in = mlp_backward(params, cache, out - target)
    for i, (w, b) in enumerate(params):
        gw = numeric_grad(loss, w)
        gb = numeric_grad(loss, b)
        assert np.max(np.abs(grads[i][0] - gw)) / (np.max(np.abs(gw)) + 1e-12) < 1e-4
        assert np.max(np.abs(grads[i][1] - gb)) / (np.max(np.abs(gb)) + 1e-12) < 1e-4
    gx = numeric_grad(loss, x)
    assert np.max(np.abs(grad_in - gx)) / np.max(np.abs(gx)) < 1e-4


def test_ppo_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    params = init_policy(6, 2, hidden=(8,), seed=1)
    n = 12
    obs = rng.normal(size=(n, 6))
    actions = rng.normal(size=(n, 2))
    mu = policy_mean(params, obs)
    old_logp = gaussian_logp(actions, mu, params.log_std) \
        + rng.normal(0, 0.1, n)  # offset so ratios differ from 1
    adv = rng.normal(size=n)
    ret = rng.normal(size=n)
    cfg = PPOConfig()

    def loss():
        l, _, _ = ppo_loss_and_grads(params, obs, actions, old_logp,
                                     adv, ret, cfg)
        return l

    _, grads, _ = ppo_loss_and_grads(params, obs, actions, old_logp,
                                     adv, ret, cfg)
    flat = _flatten_params(params)
    for arr, g in zip(flat, grads):
        gn = numeric_grad(loss, arr)
        denom = max(np.max(np.abs(gn)), np.max(np.abs(g)), 1e-8)
        assert np.max(np.abs(g - gn)) / denom < 1e-4


# ----------------------------------------------------------------------- gae


def test_gae_single_step():
    adv, ret = compute_gae([1.0], [0.5], [0.0], last_value=2.0,
                           gamma=0.9, lam=0.8)
    assert adv[0] == pytest.approx(1.0 + 0.9 * 2.0 - 0.5)
    assert ret[0] == pytest.approx(adv[0] + 0.5)


def test_gae_terminal_cuts_bootstrap():
    adv, _ = compute_gae([1.0], [0.5], [1.0], last_value=100.0,
                         gamma=0.9, lam=0.8)
    assert adv[0] == pytest.approx(1.0 - 0.5)


def test_gae_two_step_hand_computed():
    gamma, lam = 0.9, 0.8
    r = [1.0, 2.0]
    v = [0.3, 0.6]
    adv, ret = compute_gae(r, v, [0.0, 0.0], last_value=0.5,
                           gamma=gamma, lam=lam)
    d1 = 2.0 + gamma * 0.5 - 0.6
    d0 = 1.0 + gamma * 0.6 - 0.3
    assert adv[1] == pytest.approx(d1)
    assert adv[0] == pytest.approx(d0 + gamma * lam * d1)
    assert ret == pytest.approx(adv + np.asarray(v))


def test_gae_done_resets_advantage_chain():
    gamma, lam = 0.99, 0.95
    adv, _ = compute_gae([1.0, 1.0], [0.0, 0.0], [1.0, 0.0],
                         last_value=3.0, gamma=gamma, lam=lam)
    # step 0 ends an episode: no leakage from step 1 or the bootstrap
    assert adv[0] == pytest.approx(1.0)
    assert adv[1] == pytest.approx(1.0 + gamma * 3.0)


# ----------------------------------------------------------------- ppo / adam


def test_adam_minimizes_quadratic():
    opt = Adam([(2,)], lr=0.1)
    x = [np.array([5.0, -3.0])]
    for _ in range(500):
        x = opt.step(x, [2.0 * x[0]])
    assert np.max(np.abs(x[0])) < 1e-3


def test_flatten_roundtrip():
    p = init_policy(4, 2, hidden=(8,), seed=0)
    q = _unflatten_params(p, _flatten_params(p))
    assert np.array_equal(p.flat(), q.flat())


def test_ppo_clipping_blocks_large_ratio_gradient():
    """A sample far outside the clip range contributes zero policy grad."""

    params = init_policy(3, 1, hidden=(4,), seed=2)
    obs = np.zeros((1, 3))
    actions = policy_mean(params, obs)  # logp = max => ratio > 1
    logp_now = gaussian_logp(actions, policy_mean(params, obs),
                             params.log_std)
    old_logp = logp_now - 1.0  # ratio = e > 1 + eps
    cfg = PPOConfig(entropy_coef=0.0, value_coef=0.0)
    _, grads, stats = ppo_loss_and_grads(
        params, obs, actions, old_logp, np.array([1.0]), np.array([0.0]),
        cfg)
    assert stats["clip_frac"] == 1.0
    for g in grads[:len(params.pi) * 2]:
        assert np.all(g == 0.0)


def test_ppo_update_improves_surrogate_on_fixed_batch():
    rng = np.random.default_rng(3)
    params = init_policy(4, 2, hidden=(16,), seed=3)
    obs = rng.normal(size=(64, 4))
    a, logp, _ = sample_action(params, obs, rng)
    adv = rng.normal(size=64)
    ret = rng.normal(size=64)
    learner = PPOLearner(params, PPOConfig(lr=1e-3, epochs=2))
    l0, _, _ = ppo_loss_and_grads(learner.params, obs, a, logp, adv, ret,
                                  learner.cfg)
    learner.update(obs, a, logp, adv, ret, np.random.default_rng(0))
    l1, _, _ = ppo_loss_and_grads(learner.params, obs, a, logp, adv, ret,
                                  learner.cfg)
    assert l1 < l0


def test_params_save_load_roundtrip(tmp_path):
    p = init_policy(5, 3, hidden=(8, 8), seed=4)
    path = tmp_path / "ckpt.npz"
    save_params(path, p, extra={"update": 7})
    q, extra = load_params(path)
    assert np.array_equal(p.flat(), q.flat())
    assert int(extra["update"]) == 7


# ------------------------------------------------------------------ training


def test_train_pointmass_improves():
    cfg = TrainConfig(updates=60, rollout_steps=256, hidden=(32, 32), seed=0,
                      ppo=PPOConfig(lr=1e-3))
    params, history = train(lambda s: PointMassEnv(seed=s), cfg, n_envs=2)
    early = np.mean([h["mean_reward"] for h in history[:3]])
    late = np.mean([h["mean_reward"] for h in history[-3:]])
    assert late > early + 0.1
    assert late > 0.45


def test_train_writes_log_and_checkpoint(tmp_path):
    log = tmp_path / "log.jsonl"
    ckpt = tmp_path / "ckpt.npz"
    cfg = TrainConfig(updates=2, rollout_steps=32, hidden=(8,), seed=1,
                      log_path=str(log), checkpoint_path=str(ckpt))
    params, history = train(lambda s: PointMassEnv(seed=s), cfg)
    assert len(history) == 2
    lines = log.read_text().strip().splitlines()
    assert len(lines) == 2
    q, extra = load_params(ckpt)
    assert np.array_equal(params.flat(), q.flat())
