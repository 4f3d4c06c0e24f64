"""Policy evaluation: success rates, tracking errors, ablation tables."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .env import CoTrackEnv, EnvConfig
from .env.rewards import object_pose_error, robot_body_errors
from .learn import PolicyParams, policy_mean
from .refmotion import ReferenceMotion, sample
from .sim_core import WorldModel


@dataclass
class EvalMetrics:
    episodes: int
    successes: int
    joint_err_mean: float
    joint_err_std: float
    body_err_mean: float
    body_err_std: float
    object_err_pos: float
    object_err_ori: float
    ep_len_mean: float
    term_counts: dict = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0


def eval_config(cfg: EnvConfig) -> EnvConfig:
    """Evaluation variant: no start-state randomization artifacts."""

    return dataclasses.replace(cfg, use_domain_randomization=False)


def rollout_eval(world: WorldModel, motion: ReferenceMotion,
                 cfg: EnvConfig, params: PolicyParams | None,
                 episodes: int = 8, seed: int = 0,
                 deterministic: bool = True) -> EvalMetrics:
    """Run evaluation episodes from phase 0 without exploration noise.

    ``params`` of None evaluates the zero-action (pure reference-following)
    policy. Success = reaching the end of the motion without a failure
    termination.
    """

    env = CoTrackEnv(world, motion, eval_config(cfg), seed=seed,
                     eval_mode=True)
    rng = np.random.default_rng(seed)
    successes = 0
    joint_errs: list[float] = []
    body_errs: list[float] = []
    obj_pos_errs: list[float] = []
    obj_ori_errs: list[float] = []
    ep_lens: list[int] = []
    term_counts: dict[str, int] = {}
    for _ in range(episodes):
        obs = env.reset()
        while True:
            if params is None:
                a = np.zeros(env.action_size)
            else:
                mu = policy_mean(params, obs.as_vector()[None, :])[0]
                a = mu if deterministic else (
                    mu + np.exp(params.log_std) * rng.standard_normal(
                        mu.shape))
            obs, reward, term, info = env.step(a)
            frame = sample(motion, env.phase)
            joint_errs.append(float(np.mean(np.abs(
                env.state.joint_pos - np.asarray(frame.joint_pos)))))
            pe, _ = robot_body_errors(world, env.state, frame)
            body_errs.append(float(np.mean(pe)))
            op, oo, oj = object_pose_error(world, env.state, frame)
            obj_pos_errs.append(op)
            obj_ori_errs.append(oo + oj)
            if term.terminated:
                term_counts[term.reason] = term_counts.get(term.reason, 0) + 1
                ep_lens.append(env.step_count)
                if not term.is_failure:
                    successes += 1
                break
    return EvalMetrics(
        episodes=episodes,
        successes=successes,
        joint_err_mean=float(np.mean(joint_errs)),
        joint_err_std=float(np.std(joint_errs)),
        body_err_mean=float(np.mean(body_errs)),
        body_err_std=float(np.std(body_errs)),
        object_err_pos=float(np.mean(obj_pos_errs)),
        object_err_ori=float(np.mean(obj_ori_errs)),
        ep_len_mean=float(np.mean(ep_lens)),
        term_counts=term_counts,
    )


# ------------------------------------------------------------------ ablations

#: The studied configuration switches, by public flag name.
ABLATION_FLAGS = (
    "use_interaction_reward",
    "use_contact_termination",
    "use_residual_action",
    "use_body_track_termination",
)


@dataclass(frozen=True)
class AblationSpec:
    """One row of an ablation study: a named set of config overrides."""

    name: str
    overrides: dict = field(default_factory=dict)

    def apply(self, cfg: EnvConfig) -> EnvConfig:
        for key in self.overrides:
            if not hasattr(cfg, key):
                raise KeyError(f"unknown config field {key!r}")
        return dataclasses.replace(cfg, **self.overrides)


def default_ablations() -> tuple[AblationSpec, ...]:
    """Full method plus leave-one-out rows for each studied switch."""

    rows = [AblationSpec("full", {})]
    for flag in ABLATION_FLAGS:
        rows.append(AblationSpec(f"no_{flag[4:]}", {flag: False}))
    return tuple(rows)


@dataclass
class AblationResult:
    variant: str
    seed: int
    metrics: EvalMetrics


@dataclass
class AblationTable:
    results: list[AblationResult]

    def variants(self) -> list[str]:
        seen = []
        for r in self.results:
            if r.variant not in seen:
                seen.append(r.variant)
        return seen

    def success_rates(self, variant: str) -> list[float]:
        return [r.metrics.success_rate for r in self.results
                if r.variant == variant]


def run_ablation(world: WorldModel, motion: ReferenceMotion,
                 cfg: EnvConfig, train_fn, specs=None, seeds=(0, 1),
                 eval_episodes: int = 8, progress=None) -> AblationTable:
    """Train and evaluate each config variant over several seeds.

    ``train_fn(env_cfg, seed) -> PolicyParams | None`` supplies the policy
    for one variant/seed cell; evaluation always runs under that variant's
    own config.
    """

    specs = tuple(specs) if specs is not None else default_ablations()
    results = []
    for spec in specs:
        variant_cfg = spec.apply(cfg)
        for seed in seeds:
            params = train_fn(variant_cfg, seed)
            metrics = rollout_eval(world, motion, variant_cfg, params,
                                   episodes=eval_episodes, seed=seed + 500)
            results.append(AblationResult(spec.name, seed, metrics))
            if progress:
                progress(spec.name, seed, metrics)
    return AblationTable(results=results)


# --------------------------------------------------------------------- export

CSV_COLUMNS = (
    "variant", "seed", "success_rate", "episodes",
    "joint_err_mean", "joint_err_std", "body_err_mean", "body_err_std",
    "object_err_pos", "object_err_ori", "ep_len_mean",
    "term_root_pose", "term_body_pose", "term_object_pose",
    "term_lost_contact", "term_motion_end",
)


def export_metrics(path: str, table: AblationTable) -> None:
    """Write one CSV row per (variant, seed) cell."""

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in table.results:
            m = r.metrics
            writer.writerow([
                r.variant, r.seed, f"{m.success_rate:.6f}", m.episodes,
                f"{m.joint_err_mean:.6f}", f"{m.joint_err_std:.6f}",
                f"{m.body_err_mean:.6f}", f"{m.body_err_std:.6f}",
                f"{m.object_err_pos:.6f}", f"{m.object_err_ori:.6f}",
                f"{m.ep_len_mean:.6f}",
                m.term_counts.get("root_pose", 0),
                m.term_counts.get("body_pose", 0),
                m.term_counts.get("object_pose", 0),
                m.term_counts.get("lost_contact", 0),
                m.term_counts.get("motion_end", 0),
            ])
