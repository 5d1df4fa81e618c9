"""``relim`` command line: gen, run, diag, plot-data."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..core import ConstructionError, InputError, InternalError
from ..instances import save_instance
from ..solver import ConvergenceError
from .config import load_config
from .diagnostics import run_diagnostics
from .runner import emit_plot_data, run_experiment
from .streams import stream

log = logging.getLogger("relim")


def _out_dir(args, cfg=None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.base_dir) / cfg.output_dir
    raise InputError("no output directory: pass --out or set [output] dir")


def _load(args):
    if not args.config:
        raise InputError("--config is required")
    cfg = load_config(args.config)
    if args.seeds is not None:
        cfg = cfg.with_seeds(args.seeds)
    return cfg


def cmd_gen(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    for s in cfg.seeds:
        path = save_instance(cfg.make_instance(stream(cfg.master_seed, s, "instance")), out / f"instance_{s}.txt")
        print(path)
    return 0


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg, _out_dir(args, cfg), jobs=args.jobs)
    for seed, err in result.errors.items():
        print(f"seed {seed} failed: {err}", file=sys.stderr)
    if result.summary_path is not None:
        print(result.summary_path.read_text(), end="")
    return 2 if result.errors else 0


def cmd_diag(args) -> int:
    cfg = _load(args)
    diag = cfg.diag or {}
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    lemma = diag.get("lemma", "lemma3")
    summary = run_diagnostics(
        lemma,
        diag.get("triples", 100),
        diag.get("num_samples", 100_000),
        master_seed=cfg.master_seed,
        instance_spec=cfg.make_instance,
        out_path=out / f"diag_{lemma}.json",
    )
    print(
        f"{lemma}: {summary['triples']} triples, identity flags {summary['identity_flags']}, "
        f"variance flags {summary['variance_flags']}, transfer flags {summary['transfer_flags']}"
    )
    return 0


def cmd_plot_data(args) -> int:
    cfg = load_config(args.config) if args.config else None
    out = _out_dir(args, cfg)
    paths = sorted(out.glob("seed_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    if not paths:
        raise InputError(f"no seed_*.csv files in {out}")
    print(emit_plot_data(paths, out / "plot_data.csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relim", description="Regressor Elimination simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in (
        ("gen", cmd_gen, "write instance files"),
        ("run", cmd_run, "run an experiment and write per-seed CSVs and a summary"),
        ("diag", cmd_diag, "run Monte Carlo loss-identity checks"),
        ("plot-data", cmd_plot_data, "aggregate per-seed CSVs into mean/percentile curves"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--seeds", type=int, help="use seed indices 0..n-1")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, InternalError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
