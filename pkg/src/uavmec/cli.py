"""Command line entry point: ``uavmec train|eval|baseline``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, load_config
from .harness import CheckpointMismatch, TrainingAborted, evaluate, run_baseline, train

log = logging.getLogger("uavmec")


def _config(args) -> SimConfig:
    overrides = {
        "seed": args.seed,
        "n_uavs": args.uavs,
        "n_ues": args.ues,
        "episodes_e_max": getattr(args, "train_episodes", None),
    }
    if args.config:
        return load_config(args.config, **overrides)
    return SimConfig(**{k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavmec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file with a [sim] section")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--uavs", type=int)
        sp.add_argument("--ues", type=int)
        sp.add_argument("--out", default="runs/latest", help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("train", help="train agents and write checkpoint + train_log.csv")
    common(sp)
    sp.add_argument("--episodes", dest="train_episodes", type=int)

    sp = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    common(sp)
    sp.add_argument("--checkpoint", help="checkpoint directory (default: OUT/checkpoint)")
    sp.add_argument("--episodes", type=int, default=10)

    sp = sub.add_parser("baseline", help="run the random or circle trajectory baseline")
    common(sp)
    sp.add_argument("--kind", choices=("random", "circle"), required=True)
    sp.add_argument("--episodes", type=int, default=10)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = _config(args)
        out = Path(args.out)
        if args.command == "train":
            def progress(rec):
                log.info("episode %d reward %s f_e %.3f f_u %.3f", rec.episode,
                         [round(r, 1) for r in rec.rewards], rec.f_e, rec.f_u)
            result = train(cfg, out, progress)
            print(json.dumps({"episodes": len(result.records), "checkpoint": str(result.checkpoint)}))
        elif args.command == "eval":
            ckpt = Path(args.checkpoint) if args.checkpoint else out / "checkpoint"
            summary = evaluate(ckpt, cfg, args.episodes, out)
            print(json.dumps(_brief(summary)))
        else:
            summary = run_baseline(args.kind, cfg, args.episodes, out)
            print(json.dumps(_brief(summary)))
    except (ConfigError, CheckpointMismatch, TrainingAborted, OSError) as exc:
        print(f"uavmec: error: {exc}", file=sys.stderr)
        return 1
    return 0


def _brief(summary: dict) -> dict:
    keys = ("kind", "seed", "episodes", "mean_reward", "f_e_T", "f_u_T", "energy_J", "objective", "violations")
    return {k: summary[k] for k in keys}


if __name__ == "__main__":
    sys.exit(main())
