"""Command-line interface.

Subcommands: demo-neuron, demo-oscillator, train, eval, sweep,
export-trajectory.  Outputs land under --out-dir, resolved against the
``SOFTSNAKE_OUT_ROOT`` environment variable when relative.  Exit codes:
0 success, 1 usage/configuration error, 2 runtime divergence.
"""

import argparse
import functools
import json
import os
import sys

import numpy as np

from softsnake import __version__
from softsnake.backend import backend_name
from softsnake.config import (DEFAULT_CONFIG, PhysicsConfig, build_env,
                              load_config)
from softsnake.controllers import RandomPolicy
from softsnake.metrics import evaluate
from softsnake.neuron import (TRACE_COLUMNS, DtsParams, Thresholds,
                              fig_demo_protocol)
from softsnake.oscillator import (OSCILLATOR_TRACE_COLUMNS,
                                  OscillatorDiverged, OscillatorParams,
                                  PhasePoint, simulate)
from softsnake.outputs import out_root, write_csv, write_json
from softsnake.ppo import (TRAIN_LOG_COLUMNS, PpoConfig, load_policy,
                           save_policy, train)
from softsnake.rod import DivergenceError
from softsnake.snake import SEGMENT_TRACE_COLUMNS

TRAJECTORY_COLUMNS = ["t", "node_index", "x", "y", "z", "vx", "vy", "vz"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_dir(path: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.join(out_root("."), path)


def _load_cfg(args) -> PhysicsConfig:
    path = getattr(args, "config", None)
    return load_config(path) if path else DEFAULT_CONFIG


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_demo_neuron(args) -> int:
    cfg = _load_cfg(args)
    params = DtsParams(c_q=args.c_q, c_t=cfg.c_t, tau=cfg.tau, dt=cfg.dt)
    rows = fig_demo_protocol(params, duration=args.duration,
                             freq_hz=args.freq)
    out = os.path.join(_resolve_dir(args.out_dir), "neuron_trace.csv")
    write_csv(out, TRACE_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_demo_oscillator(args) -> int:
    cfg = _load_cfg(args)
    params = OscillatorParams(
        mass=args.mass, stiffness=args.stiffness, damping=args.damping,
        dts=DtsParams(c_q=10.0, c_t=1.0, tau=cfg.tau, dt=cfg.dt),
        thr=Thresholds(args.un, args.up))
    traj = simulate(params, PhasePoint(args.q0, args.qdot0), args.steps)
    rows = [(k * cfg.dt, traj[k, 0], traj[k, 1], traj[k, 2], traj[k, 3])
            for k in range(traj.shape[0])]
    out = os.path.join(_resolve_dir(args.out_dir), "oscillator_trace.csv")
    write_csv(out, OSCILLATOR_TRACE_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _ppo_config_from_args(args, seed: int) -> PpoConfig:
    return PpoConfig(total_steps=args.steps, horizon=args.horizon,
                     epochs=args.epochs, minibatch=args.minibatch,
                     clip_eps=args.clip, gamma=args.gamma, lam=args.lam,
                     learning_rate=args.lr, entropy_coef=args.entropy_coef,
                     value_coef=args.value_coef,
                     max_grad_norm=args.max_grad_norm, seed=seed,
                     obs_scale=args.obs_scale,
                     init_action_std=args.init_action_std,
                     checkpoint_every=args.checkpoint_every)


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _resolve_dir(args.out_dir)
    ppo_cfg = _ppo_config_from_args(args, args.seed)

    def factory(seed):
        return build_env(cfg, args.controller, args.m, args.n, "train",
                         seed=seed)

    meta = {"controller": args.controller, "m": args.m, "n": args.n,
            "seed": args.seed, "hidden": list(ppo_cfg.hidden),
            "physics": {k: getattr(cfg, k)
                        for k in PhysicsConfig.__dataclass_fields__}}

    def on_iteration(it, total, policy, row):
        if args.checkpoint_every and it % args.checkpoint_every == 0:
            save_policy(os.path.join(out_dir, f"checkpoint_{it:05d}.json"),
                        policy, meta)
        if not args.quiet:
            print(f"iter {it}/{total} steps={row.env_steps} "
                  f"mean_ep_reward={row.mean_ep_reward:.2f}")

    policy, curve, _ = train(factory, ppo_cfg, on_iteration=on_iteration)
    write_csv(os.path.join(out_dir, "learning_curve.csv"),
              TRAIN_LOG_COLUMNS, [r.astuple() for r in curve])
    save_policy(os.path.join(out_dir, "checkpoint_final.json"), policy, meta)
    print(f"trained {args.controller} ({args.m}x{args.n}) for "
          f"{curve[-1].env_steps} steps; outputs in {out_dir}")
    return 0


def _policy_fn_from_args(args, cfg):
    """Returns (policy_fn, controller, m, n, physics cfg, label).

    A checkpoint carries the physics it was trained with; an explicit
    --config flag overrides it.
    """
    if args.checkpoint:
        policy, meta = load_policy(args.checkpoint)
        controller = meta["controller"]
        m, n = int(meta["m"]), int(meta["n"])
        if getattr(args, "config", None) is None and "physics" in meta:
            cfg = load_config(None, overrides=meta["physics"])
        return policy.act_deterministic, controller, m, n, cfg, "checkpoint"
    controller, m, n = args.controller, args.m, args.n
    probe = build_env(cfg, controller, m, n, "eval", seed=0)
    rng_policy = RandomPolicy(probe.action_low, probe.action_high,
                              seed=args.seed)
    return rng_policy, controller, m, n, cfg, "random"


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _resolve_dir(args.out_dir)
    policy_fn, controller, m, n, cfg, label = _policy_fn_from_args(args,
                                                                   cfg)

    factory = functools.partial(build_env, cfg, controller, m, n, "eval",
                                seed=args.seed)
    report, results = evaluate(policy_fn, factory, args.episodes, args.seed,
                               workers=args.workers)
    doc = report.as_dict()
    doc["policy"] = label
    doc["controller"] = controller
    doc["snake"] = {"segments": m, "nodes_per_segment": n}
    write_json(os.path.join(out_dir, "report.json"), doc)
    table = report.table()
    from softsnake.outputs import atomic_write_text
    atomic_write_text(os.path.join(out_dir, "report.txt"), table + "\n")
    write_csv(os.path.join(out_dir, "episodes.csv"),
              ["seed", "success", "game_time", "total_reward",
               "silence_rate", "target_x", "target_y"],
              [(r.seed, r.success, r.game_time, r.total_reward,
                r.silence_rate, r.target_xy[0], r.target_xy[1])
               for r in results])
    print(table)
    print(f"outputs in {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _resolve_dir(args.out_dir)
    sizes = []
    for token in args.sizes.split(","):
        m_s, n_s = token.lower().split("x")
        sizes.append((int(m_s), int(n_s)))
    summary = []
    for m, n in sizes:
        tag = f"m{m}n{n}"
        sub = argparse.Namespace(**vars(args))
        sub.m, sub.n = m, n
        sub.out_dir = os.path.join(args.out_dir, tag)
        sub.quiet = True
        sub.checkpoint = None
        cmd_train(sub)
        sub.checkpoint = os.path.join(_resolve_dir(sub.out_dir),
                                      "checkpoint_final.json")
        cmd_eval(sub)
        with open(os.path.join(_resolve_dir(sub.out_dir),
                               "report.json")) as fh:
            summary.append({"size": tag, **json.load(fh)})
    write_json(os.path.join(out_dir, "sweep_summary.json"), summary)
    print(f"swept {len(sizes)} sizes; summary in {out_dir}")
    return 0


def cmd_export_trajectory(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _resolve_dir(args.out_dir)
    policy_fn, controller, m, n, cfg, label = _policy_fn_from_args(args,
                                                                   cfg)
    env = build_env(cfg, controller, m, n, "eval", seed=args.seed)

    obs, info = env.reset(seed=args.seed)
    traj_rows = []
    seg_rows = []
    episode_rows = []

    def snapshot():
        rod = env.snake.rod
        t = env.game_time
        for i in range(rod.n_nodes):
            p = rod.node_positions[i]
            v = rod.node_velocities[i]
            traj_rows.append((t, i, p[0], p[1], p[2], v[0], v[1], v[2]))

    snapshot()
    step = 0
    while True:
        action = policy_fn(obs)
        obs, reward, done, step_info = env.step(action)
        step += 1
        snapshot()
        t = env.game_time
        defs = env.snake.deformations()
        gammas = getattr(env.controller, "torques", None)
        if gammas is None:
            # event-driven controllers: last emitted couple strength
            spikes = getattr(env.controller, "neuron_o", np.zeros(m))
            gammas = cfg.c_t * spikes
        for s in range(m):
            seg_rows.append((t, s, float(defs[s]), float(gammas[s])))
        bd = step_info["breakdown"]
        episode_rows.append({"step": step,
                             "action": np.asarray(action).tolist(),
                             "l": bd.l,
                             "r1": bd.r1, "r2": bd.r2, "r3": bd.r3,
                             "r4": bd.r4,
                             "terminated": bool(done)})
        if done:
            break

    write_csv(os.path.join(out_dir, "trajectory.csv"), TRAJECTORY_COLUMNS,
              traj_rows)
    write_csv(os.path.join(out_dir, "segments.csv"), SEGMENT_TRACE_COLUMNS,
              seg_rows)
    lines = [json.dumps(row, sort_keys=True) for row in episode_rows]
    from softsnake.outputs import atomic_write_text
    atomic_write_text(os.path.join(out_dir, "episode.jsonl"),
                      "\n".join(lines) + "\n")
    print(f"exported {len(traj_rows)} node snapshots over {step} agent "
          f"steps to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", default=None,
                   help="key=value physics/task config file")
    p.add_argument("--out-dir", default="out",
                   help="output directory (relative paths resolve against "
                        "$SOFTSNAKE_OUT_ROOT)")
    p.add_argument("--seed", type=int, default=0)


def _add_train_flags(p):
    p.add_argument("--controller", default="spikingsoft",
                   choices=["spikingsoft", "vanilla", "cpg"])
    p.add_argument("--m", type=int, default=3, help="segment count")
    p.add_argument("--n", type=int, default=3, help="nodes per segment")
    p.add_argument("--steps", type=int, default=200_000,
                   help="total environment steps")
    p.add_argument("--horizon", type=int, default=2048)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--minibatch", type=int, default=64)
    p.add_argument("--clip", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--lam", type=float, default=0.95)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--entropy-coef", type=float, default=0.0)
    p.add_argument("--value-coef", type=float, default=0.5)
    p.add_argument("--max-grad-norm", type=float, default=0.5)
    p.add_argument("--obs-scale", type=float, default=0.1)
    p.add_argument("--init-action-std", type=float, default=0.0,
                   help="initial policy std (0 = quarter action range)")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--quiet", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="softsnake",
                     description="Soft snake simulation and control stack "
                                 f"(kernel backend: {backend_name()})")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-neuron", help="replay the three-regime neuron "
                                           "demo and export its trace")
    _add_common(p)
    p.add_argument("--c-q", type=float, default=10.0)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--freq", type=float, default=1.0)
    p.set_defaults(func=cmd_demo_neuron)

    p = sub.add_parser("demo-oscillator",
                       help="neuron-driven mass-spring-damper limit cycle")
    _add_common(p)
    p.add_argument("--un", type=float, required=True)
    p.add_argument("--up", type=float, required=True)
    p.add_argument("--q0", type=float, default=0.0)
    p.add_argument("--qdot0", type=float, default=0.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--stiffness", type=float, default=1.0)
    p.add_argument("--damping", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=40_000)
    p.set_defaults(func=cmd_demo_oscillator)

    p = sub.add_parser("train", help="PPO-train a controller")
    _add_common(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or random policy")
    _add_common(p)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel episode workers (1 = fully reproducible)")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--controller", default="spikingsoft",
                   choices=["spikingsoft", "vanilla", "cpg"])
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--episodes", type=int, default=1000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train + eval across snake sizes")
    _add_common(p)
    _add_train_flags(p)
    p.add_argument("--sizes", default="1x3,3x3,5x3,3x6",
                   help="comma list of <segments>x<nodes> pairs")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--workers", type=int, default=1,
                   help="parallel episode workers for the eval phase")
    p.add_argument("--checkpoint", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-trajectory",
                       help="run one episode and export node/segment traces")
    _add_common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--controller", default="spikingsoft",
                   choices=["spikingsoft", "vanilla", "cpg"])
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.set_defaults(func=cmd_export_trajectory)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, OscillatorDiverged, FloatingPointError) as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
