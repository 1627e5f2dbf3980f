"""Command-line entry points.

    insertrl train          --config cfg.json [--serve [--port N]]
    insertrl eval           --checkpoint ckpt.json --config cfg.json [...]
    insertrl demo-collect   --config cfg.json --out demos.eplog -n 20
    insertrl pretrain-vae   --config cfg.json --out vae.json [...]
    insertrl sweep          --config cfg.json (--checkpoint ckpt | --spiral) [...]
    insertrl export-dataset --out DIR log1.eplog [log2.eplog ...]
    insertrl serve          --config cfg.json [--port N]

`--config` files are JSON with the key groups documented in
insertrl.config / insertrl.sim.presets. Every command prints a short result
summary to stdout; artifacts land in the config's run.out_dir.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _load_cfg(path: str):
    from .config import load_run_config

    return load_run_config(path)


def cmd_train(args) -> int:
    from .training import train

    cfg = _load_cfg(args.config)
    service = None
    if args.serve:
        from .teleop import TeleopService

        service = TeleopService(host=args.host, port=args.port)
        print(f"teleop service listening on {service.url}")
    try:
        result = train(cfg, service=service)
    finally:
        if service is not None:
            service.close()
    print(
        f"trained {result.episodes} episodes / {result.env_steps} env steps "
        f"({result.gradient_steps} gradient steps), curriculum stage {result.curriculum_stage}"
    )
    if result.final_window_success is not None:
        print(f"final windowed success: {result.final_window_success:.2%}")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"episode log: {result.episode_log_path}")
    return 0


def cmd_eval(args) -> int:
    from . import frames
    from .training import evaluate_checkpoint

    cfg = _load_cfg(args.config)
    anchor = frames.Pose(args.anchor_x, args.anchor_y, args.anchor_theta)
    res = evaluate_checkpoint(
        args.checkpoint,
        cfg,
        n_episodes=args.episodes,
        anchor=anchor,
        base_seed=args.seed,
        condition=args.condition,
    )
    print(res.report.table())
    if res.mean_success_ticks is not None:
        print(f"mean successful insertion time: {res.mean_success_ticks * cfg.task.dt * 1000:.0f} ms")
    if args.out:
        Path(args.out).write_text(json.dumps(res.report.to_dict(), indent=2))
    return 0


def cmd_demo_collect(args) -> int:
    from .datalog import EpisodeWriter
    from .training import collect_scripted_demos

    cfg = _load_cfg(args.config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with EpisodeWriter(out) as writer:
        records = collect_scripted_demos(cfg, args.episodes, args.seed, writer=writer)
    print(f"wrote {len(records)} successful demo episodes to {out}")
    return 0


def cmd_pretrain_vae(args) -> int:
    from .training import pretrain_vae_pipeline

    cfg = _load_cfg(args.config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _, _, agreement = pretrain_vae_pipeline(
        cfg,
        n_frames=args.frames,
        epochs=args.epochs,
        out_path=out,
        seed=args.seed,
        latent_dim=args.latent_dim,
        beta=args.beta,
        classifier_out=args.classifier_out,
    )
    print(f"VAE checkpoint: {out}")
    if agreement is not None:
        print(f"reward classifier held-out agreement: {agreement:.2%} -> {args.classifier_out}")
    return 0


def cmd_sweep(args) -> int:
    from .baselines import SpiralParams, SpiralSearchPolicy, perturbation_sweep
    from .sim import InsertionEnv
    from .training import build_env, load_policy_checkpoint

    cfg = _load_cfg(args.config)
    grid_step = args.grid_step if args.grid_step is not None else 0.5 * cfg.geometry.clearance

    def env_factory():
        env, _ = build_env(cfg)
        return env

    if args.spiral:
        def policy_factory(env):
            return SpiralSearchPolicy(SpiralParams(), env.task.dt)

        bounds = None
    else:
        loaded = load_policy_checkpoint(args.checkpoint)

        def policy_factory(env):
            return loaded

        bounds = loaded.snapshot.bounds

    report = perturbation_sweep(
        policy_factory,
        env_factory,
        grid_step=grid_step,
        attempts=args.attempts,
        stop_after_consecutive_failures=args.stop_after,
        theta_jitter=args.theta_jitter,
        bounds=bounds,
        base_seed=args.seed,
        max_rings=args.max_rings,
    )
    print(report.table())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_export_dataset(args) -> int:
    from .datalog import export_dataset

    manifest = export_dataset(args.logs, args.out, shard_size=args.shard_size)
    print(f"exported {manifest['episodes']} episodes to {args.out} "
          f"({len(manifest['shards'])} shards, {manifest['skipped_corrupt']} corrupt skipped)")
    return 0


def cmd_serve(args) -> int:
    args.serve = True
    return cmd_train(args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="insertrl", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    tp = sub.add_parser("train", help="run a training session")
    tp.add_argument("--config", required=True)
    tp.add_argument("--serve", action="store_true", help="attach the teleop service")
    tp.add_argument("--host", default="127.0.0.1")
    tp.add_argument("--port", type=int, default=8765)
    tp.set_defaults(fn=cmd_train)

    ep = sub.add_parser("eval", help="evaluate a checkpoint")
    ep.add_argument("--checkpoint", required=True)
    ep.add_argument("--config", required=True)
    ep.add_argument("--episodes", type=int, default=200)
    ep.add_argument("--seed", type=int, default=424242)
    ep.add_argument("--condition", default="eval")
    ep.add_argument("--anchor-x", type=float, default=0.0)
    ep.add_argument("--anchor-y", type=float, default=0.0)
    ep.add_argument("--anchor-theta", type=float, default=0.0)
    ep.add_argument("--out", default=None)
    ep.set_defaults(fn=cmd_eval)

    dp = sub.add_parser("demo-collect", help="record scripted demonstrations")
    dp.add_argument("--config", required=True)
    dp.add_argument("--out", required=True)
    dp.add_argument("-n", "--episodes", type=int, default=20)
    dp.add_argument("--seed", type=int, default=0)
    dp.set_defaults(fn=cmd_demo_collect)

    vp = sub.add_parser("pretrain-vae", help="collect jog frames and pretrain visual features")
    vp.add_argument("--config", required=True)
    vp.add_argument("--out", required=True)
    vp.add_argument("--frames", type=int, default=5000)
    vp.add_argument("--epochs", type=int, default=100)
    vp.add_argument("--latent-dim", type=int, default=16)
    vp.add_argument("--beta", type=float, default=1.0)
    vp.add_argument("--seed", type=int, default=0)
    vp.add_argument("--classifier-out", default=None)
    vp.set_defaults(fn=cmd_pretrain_vae)

    sp = sub.add_parser("sweep", help="outward perturbation sweep")
    sp.add_argument("--config", required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--checkpoint")
    group.add_argument("--spiral", action="store_true")
    sp.add_argument("--grid-step", type=float, default=None)
    sp.add_argument("--attempts", type=int, default=10)
    sp.add_argument("--stop-after", type=int, default=2)
    sp.add_argument("--theta-jitter", type=float, default=0.01)
    sp.add_argument("--max-rings", type=int, default=60)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_sweep)

    xp = sub.add_parser("export-dataset", help="repackage episode logs for sharing")
    xp.add_argument("logs", nargs="+")
    xp.add_argument("--out", required=True)
    xp.add_argument("--shard-size", type=int, default=500)
    xp.set_defaults(fn=cmd_export_dataset)

    vp2 = sub.add_parser("serve", help="train with the teleop service attached")
    vp2.add_argument("--config", required=True)
    vp2.add_argument("--host", default="127.0.0.1")
    vp2.add_argument("--port", type=int, default=8765)
    vp2.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
