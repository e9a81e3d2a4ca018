"""``tune`` command: run, oracle and compare subcommands."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..agent import NumericalFailure
from . import compare as compare_mod
from . import config as config_mod
from . import oracle as oracle_mod
from . import runner
from .config import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"0,2,5"`` or ``"0-4"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds or len(set(seeds)) != len(seeds):
        raise ValueError(f"bad seed list {text!r}")
    return seeds


def _set_values(pairs: list[str]) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (p.strip() for p in item.split("=", 1))
        if key not in config_mod.FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        try:
            out[key] = config_mod._coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return out


def load_config(args, **extra) -> config_mod.ExperimentConfig:
    overrides = _set_values(getattr(args, "set", None) or [])
    overrides.update({k: v for k, v in extra.items() if v is not None})
    if getattr(args, "preset", None):
        overrides["preset"] = args.preset
    if args.config:
        return config_mod.load(args.config, overrides)
    return config_mod.build(None, overrides)


def cmd_run(args) -> int:
    cfg = load_config(args, algorithm=args.algo, seed=args.seed, out=args.out, budget=args.budget)
    if args.seeds is None:
        art = runner.run(cfg)
        s = runner.summary_record(art)
        print(f"{cfg.algorithm} seed {cfg.seed}: {s['interactions']} interactions, "
              f"final-window mean {s['final_window_mean']}, written to {cfg.out}")
        return EXIT_OK
    seeds = parse_seeds(args.seeds)
    configs = [replace(cfg, seed=s) for s in seeds]
    dirs = [Path(cfg.out) / f"seed_{s}" for s in seeds]
    results = runner.run_many(configs, dirs, args.workers)
    for art, d in zip(results, dirs):
        print(f"{cfg.algorithm} seed {art.config.seed}: final-window mean "
              f"{runner.final_window_mean(art.records)}, written to {d}")
    failures = [a.failure for a in results if a.failure is not None]
    if failures:
        raise failures[0]
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args)
    out = args.out or cfg.out
    res = oracle_mod.run_oracle(cfg, args.resolution, out, args.workers)
    b = res.best
    print(f"best kp={b.kp!r} tau_i={b.tau_i!r} tau_d={b.tau_d!r} reward={res.best_reward!r}")
    c = res.coarse_best
    print(f"coarse kp={c.kp!r} tau_i={c.tau_i!r} tau_d={c.tau_d!r} reward={res.coarse_reward!r}")
    print(f"{len(res.cells)} cells written to {Path(out) / 'oracle.csv'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    report = compare_mod.compare_runs(compare_mod.discover(args.a), compare_mod.discover(args.b), args.threshold)
    report.write(args.out)
    print(report.text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tune", description="RL-based PID autotuning experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--preset", choices=sorted(config_mod.PRESETS))
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    r = sub.add_parser("run", help="train one agent per seed")
    config_args(r)
    r.add_argument("--algo", choices=("emtd3", "td3"))
    r.add_argument("--seed", type=int)
    r.add_argument("--seeds", help="several seeds, e.g. 0-4; each writes OUT/seed_N")
    r.add_argument("--budget", type=int)
    r.add_argument("--out")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="grid search over the action box")
    config_args(o)
    o.add_argument("--resolution", type=int, required=True)
    o.add_argument("--out")
    o.add_argument("--workers", type=int, default=1)
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="compare two sets of runs")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--threshold", type=float)
    c.add_argument("--out", default="compare")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure at interaction {exc.interaction}: {exc.detail}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
