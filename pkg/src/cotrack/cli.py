"""Command-line interface.

Subcommands: gen-data, validate, train, eval, ablate, export.

Configuration is layered, later sources winning: built-in defaults, then a
--config JSON file, then the COTRACK_SEED environment variable (seed only),
then explicit flags (--seed, --set key=value). The fully resolved config is
persisted next to every training run.

Exit codes: 0 success, 2 configuration error, 3 data validation error,
1 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .env import CoTrackEnv, EnvConfig, config_from_json, config_to_json
from .evalharness import (
    AblationSpec,
    default_ablations,
    export_metrics,
    rollout_eval,
    run_ablation,
)
from .learn import PPOConfig, TrainConfig, load_params, train
from .refmotion import parse_motion, serialize_motion, validate_motion
from .sim_core.io import (
    object_from_json,
    object_to_json,
    robot_from_json,
    robot_to_json,
)
from .sim_core.types import ValidationError
from .tasks import TASK_NAMES, load_task

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3


class ConfigError(Exception):
    pass


# ------------------------------------------------------------- config layering

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_env_config(args) -> EnvConfig:
    cfg = EnvConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                cfg = config_from_json(f.read())
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from e
        except ValidationError as e:
            raise ConfigError(f"bad config file: {e}") from e
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config field {key!r}")
        overrides[key] = _parse_value(value)
    if overrides:
        try:
            for k, v in overrides.items():
                if isinstance(v, list):
                    overrides[k] = tuple(v)
            cfg = dataclasses.replace(cfg, **overrides)
            cfg.validate()
        except (TypeError, ValidationError) as e:
            raise ConfigError(f"bad override: {e}") from e
    return cfg


def resolve_seed(args) -> int:
    seed = 0
    env_seed = os.environ.get("COTRACK_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(
                f"COTRACK_SEED must be an integer, got {env_seed!r}")
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    return seed


def _load_scene(args):
    """Scene from --task, or from explicit --robot/--object/--motion files."""

    if getattr(args, "task", None):
        t = load_task(args.task)
        return t.robot, t.obj, t.motion
    paths = (getattr(args, "robot", None), getattr(args, "object", None),
             getattr(args, "motion", None))
    if not all(paths):
        raise ConfigError("provide --task or all of --robot/--object/--motion")
    with open(paths[0]) as f:
        robot = robot_from_json(f.read())
    with open(paths[1]) as f:
        obj = object_from_json(f.read())
    with open(paths[2]) as f:
        motion = parse_motion(f.read())
    return robot, obj, motion


# ---------------------------------------------------------------- subcommands

def cmd_gen_data(args):
    os.makedirs(args.out, exist_ok=True)
    names = [args.task] if args.task else list(TASK_NAMES)
    for name in names:
        t = load_task(name)
        with open(os.path.join(args.out, f"{name}_robot.json"), "w") as f:
            f.write(robot_to_json(t.robot))
        with open(os.path.join(args.out, f"{name}_object.json"), "w") as f:
            f.write(object_to_json(t.obj))
        with open(os.path.join(args.out, f"{name}_motion.json"), "w") as f:
            f.write(serialize_motion(t.motion))
        print(f"wrote {name} scene to {args.out}")
    return EXIT_OK


def cmd_validate(args):
    robot, obj, motion = _load_scene(args)
    validate_motion(motion)
    from .sim_core import build_world
    world = build_world(robot, obj)
    if len(motion.frames[0].joint_pos) != world.n_joints:
        raise ValidationError(
            "frames[0].joint_pos", "joint count does not match the robot")
    print(f"ok: {len(world.bodies)} bodies, {world.n_joints} joints, "
          f"{len(motion.frames)} frames")
    return EXIT_OK


def _train_config(args, seed, out_dir) -> TrainConfig:
    return TrainConfig(
        updates=args.updates,
        rollout_steps=args.rollout_steps,
        hidden=tuple(args.hidden),
        seed=seed,
        ppo=PPOConfig(lr=args.lr),
        log_path=os.path.join(out_dir, "log.jsonl"),
        checkpoint_path=os.path.join(out_dir, "checkpoint.npz"),
    )


def cmd_train(args):
    seed = resolve_seed(args)
    cfg = resolve_env_config(args)
    robot, obj, motion = _load_scene(args)
    from .sim_core import build_world
    world = build_world(robot, obj)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "resolved_config.json"), "w") as f:
        f.write(config_to_json(cfg))
    tcfg = _train_config(args, seed, args.out)

    def factory(s):
        return CoTrackEnv(world, motion, cfg, seed=s)

    def progress(rec):
        if rec["update"] % max(1, args.updates // 20) == 0:
            print(f"update {rec['update']}: mean_reward "
                  f"{rec['mean_reward']:.3f}")

    train(factory, tcfg, n_envs=args.envs, progress=progress)
    print(f"checkpoint: {tcfg.checkpoint_path}")
    return EXIT_OK


def cmd_eval(args):
    seed = resolve_seed(args)
    cfg = resolve_env_config(args)
    robot, obj, motion = _load_scene(args)
    from .sim_core import build_world
    world = build_world(robot, obj)
    params = None
    if args.checkpoint:
        params, _ = load_params(args.checkpoint)
    metrics = rollout_eval(world, motion, cfg, params,
                           episodes=args.episodes, seed=seed)
    doc = {
        "success_rate": metrics.success_rate,
        "episodes": metrics.episodes,
        "joint_err_mean": metrics.joint_err_mean,
        "joint_err_std": metrics.joint_err_std,
        "body_err_mean": metrics.body_err_mean,
        "body_err_std": metrics.body_err_std,
        "object_err_pos": metrics.object_err_pos,
        "object_err_ori": metrics.object_err_ori,
        "ep_len_mean": metrics.ep_len_mean,
        "term_counts": metrics.term_counts,
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    return EXIT_OK


def cmd_ablate(args):
    seed = resolve_seed(args)
    cfg = resolve_env_config(args)
    robot, obj, motion = _load_scene(args)
    from .sim_core import build_world
    world = build_world(robot, obj)
    seeds = tuple(seed + i for i in range(args.seeds))

    specs = default_ablations()
    if args.variants:
        wanted = args.variants.split(",")
        byname = {s.name: s for s in specs}
        missing = [w for w in wanted if w not in byname]
        if missing:
            raise ConfigError(f"unknown ablation variants: {missing}; "
                              f"available: {sorted(byname)}")
        specs = tuple(byname[w] for w in wanted)

    def train_fn(variant_cfg, s):
        if args.updates == 0:
            return None
        tcfg = TrainConfig(updates=args.updates,
                           rollout_steps=args.rollout_steps,
                           hidden=tuple(args.hidden), seed=s,
                           ppo=PPOConfig(lr=args.lr))
        params, _ = train(
            lambda es: CoTrackEnv(world, motion, variant_cfg, seed=es),
            tcfg, n_envs=args.envs)
        return params

    def progress(name, s, metrics):
        print(f"{name} seed {s}: success {metrics.success_rate:.2f}")

    table = run_ablation(world, motion, cfg, train_fn, specs=specs,
                         seeds=seeds, eval_episodes=args.episodes,
                         progress=progress)
    export_metrics(args.out, table)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_export(args):
    """Summarize a training log (JSONL) into a CSV table."""

    import csv as _csv
    try:
        with open(args.log) as f:
            records = [json.loads(line) for line in f if line.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read log: {e}") from e
    if not records:
        raise ConfigError("log is empty")
    keys = sorted({k for r in records for k in r})
    with open(args.out, "w", newline="") as f:
        writer = _csv.writer(f)
        writer.writerow(keys)
        for r in records:
            writer.writerow([r.get(k, "") for k in keys])
    print(f"wrote {args.out} ({len(records)} rows)")
    return EXIT_OK


# --------------------------------------------------------------------- parser

def _add_scene_args(p):
    p.add_argument("--task", choices=TASK_NAMES)
    p.add_argument("--robot")
    p.add_argument("--object")
    p.add_argument("--motion")


def _add_config_args(p):
    p.add_argument("--config", help="JSON file with EnvConfig fields")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config field (repeatable)")
    p.add_argument("--seed", type=int, default=None)


def _add_train_args(p):
    p.add_argument("--updates", type=int, default=100)
    p.add_argument("--rollout-steps", type=int, default=128,
                   dest="rollout_steps")
    p.add_argument("--envs", type=int, default=4)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--hidden", type=int, nargs="+", default=[64, 64])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotrack",
        description="Planar robot-object co-tracking: data, training, eval.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write bundled task scenes to disk")
    p.add_argument("--out", required=True)
    p.add_argument("--task", choices=TASK_NAMES)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("validate", help="validate a scene (models + motion)")
    _add_scene_args(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("train", help="train a tracking policy with PPO")
    _add_scene_args(p)
    _add_config_args(p)
    _add_train_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint (or zero action)")
    _add_scene_args(p)
    _add_config_args(p)
    p.add_argument("--checkpoint")
    p.add_argument("--episodes", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="train + evaluate config ablations")
    _add_scene_args(p)
    _add_config_args(p)
    _add_train_args(p)
    p.add_argument("--seeds", type=int, default=2,
                   help="number of consecutive seeds per variant")
    p.add_argument("--episodes", type=int, default=8)
    p.add_argument("--variants", help="comma list; default all")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("export", help="convert a JSONL training log to CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError, KeyError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
