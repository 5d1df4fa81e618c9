"""Multi-seed experiment execution and CSV output.

Each seed is an independent episode with its own instance, environment and
learner streams, so results do not depend on how seeds are scheduled across
worker processes. Files are always written by the parent in seed order.
"""

from __future__ import annotations

import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import BaselineKind, BaselineLearner
from ..core import InputError
from ..learner import LearnerConfig, RegressorElimination, RunRecord, run_episode
from ..solver import DEFAULT_REL_TOL
from .config import ExperimentConfig
from .streams import stream

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "seed",
    "t",
    "context",
    "action",
    "propensity",
    "reward",
    "instant_regret",
    "cum_regret",
    "n_active",
    "solver_iters",
    "solver_violation",
)


@dataclass
class ExperimentResult:
    out_dir: Path
    csv_paths: dict = field(default_factory=dict)
    summary_path: Path | None = None
    errors: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)


def learner_config(cfg: ExperimentConfig, audit: bool = False) -> LearnerConfig:
    return LearnerConfig(
        delta=cfg.delta,
        T=cfg.T,
        dist_mode=cfg.learner.get("dist_mode", "known"),
        cadence=cfg.learner.get("cadence", "every"),
        solver_tol=cfg.solver.get("tol", DEFAULT_REL_TOL),
        solver_max_iters=cfg.solver.get("max_iters"),
        audit=audit,
    )


def build_learner(cfg: ExperimentConfig, instance, audit: bool = False):
    kind = cfg.learner.get("kind", "relim")
    if kind == "relim":
        return RegressorElimination(instance.regressors, instance.contexts.weights, learner_config(cfg, audit))
    return BaselineLearner(instance.regressors, BaselineKind(kind, cfg.learner.get("epsilon_c", 1.0)))


def run_seed(cfg: ExperimentConfig, seed_index: int, audit: bool = False) -> tuple[RunRecord, object]:
    """One episode: instance, environment and learner each draw from their own stream."""
    instance = cfg.make_instance(stream(cfg.master_seed, seed_index, "instance"))
    learner = build_learner(cfg, instance, audit)
    return run_episode(
        instance,
        learner_config(cfg),
        stream(cfg.master_seed, seed_index, "env"),
        learner_rng=stream(cfg.master_seed, seed_index, "learner"),
        learner=learner,
    )


def _seed_job(args):
    cfg, seed_index = args
    try:
        rec, _ = run_seed(cfg, seed_index)
        return seed_index, rec, None
    except Exception as exc:  # recorded per seed; the run continues
        return seed_index, None, f"{type(exc).__name__}: {exc}"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_run_csv(path: Path, seed: int, rec: RunRecord) -> None:
    cum = rec.cum_regret
    lines = [",".join(CSV_COLUMNS)]
    for i in range(len(rec)):
        lines.append(
            f"{seed},{i + 1},{rec.context[i]},{rec.action[i]},{_fmt(rec.propensity[i])},"
            f"{_fmt(rec.reward[i])},{_fmt(rec.instant_regret[i])},{_fmt(cum[i])},"
            f"{rec.n_active[i]},{rec.solver_iters[i]},{_fmt(rec.solver_violation[i])}"
        )
    path.write_text("\n".join(lines) + "\n")


def read_run_csv(path) -> dict:
    """Columns of a per-seed CSV as numpy arrays."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise InputError(f"{path}: unexpected CSV header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, j] for j, name in enumerate(CSV_COLUMNS)}


def checkpoints(T: int) -> list[int]:
    return sorted({max(1, T // 8), max(1, T // 4), max(1, T // 2), T})


def write_summary(path: Path, T: int, cum_by_seed: dict) -> None:
    """Mean (correctly rounded sum) and median cumulative regret at T/8, T/4, T/2, T."""
    lines = ["t,n_seeds,mean_cum_regret,median_cum_regret"]
    for t in checkpoints(T):
        vals = [float(cum[t - 1]) for cum in cum_by_seed.values()]
        mean = math.fsum(vals) / len(vals)
        lines.append(f"{t},{len(vals)},{mean:.10g},{statistics.median(vals):.10g}")
    path.write_text("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1, keep_records: bool = False) -> ExperimentResult:
    """Run every seed, write ``seed_<i>.csv`` files plus ``summary.csv`` (and ``errors.csv`` on failures)."""
    out = Path(out_dir or cfg.output_dir or "runs")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if jobs < 1:
        raise InputError("jobs must be >= 1")

    tasks = [(cfg, s) for s in cfg.seeds]
    if jobs == 1:
        results = map(_seed_job, tasks)
        outcomes = list(results)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_seed_job, tasks))

    result = ExperimentResult(out_dir=out)
    cum_by_seed = {}
    for seed, rec, err in outcomes:
        if err is not None:
            log.warning("seed %d failed: %s", seed, err)
            result.errors[seed] = err
            continue
        path = out / f"seed_{seed}.csv"
        write_run_csv(path, seed, rec)
        result.csv_paths[seed] = path
        cum_by_seed[seed] = rec.cum_regret
        if keep_records:
            result.records[seed] = rec
    if result.errors:
        lines = ["seed,error"] + [f"{s},\"{e.replace(chr(34), chr(39))}\"" for s, e in result.errors.items()]
        (out / "errors.csv").write_text("\n".join(lines) + "\n")
    if cum_by_seed:
        result.summary_path = out / "summary.csv"
        write_summary(result.summary_path, cfg.T, cum_by_seed)
    return result


def emit_plot_data(records, path) -> Path:
    """Write ``t, mean, p10, p90`` of cumulative regret across seeds.

    ``records`` maps seed to a :class:`RunRecord`, a cumulative-regret array, or
    a per-seed CSV path.
    """
    if not records:
        raise InputError("no run records to summarize")
    curves = []
    for rec in records.values() if isinstance(records, dict) else records:
        if isinstance(rec, RunRecord):
            curves.append(rec.cum_regret)
        elif isinstance(rec, (str, Path)):
            curves.append(read_run_csv(rec)["cum_regret"])
        else:
            curves.append(np.asarray(rec, dtype=float))
    if len({c.size for c in curves}) != 1:
        raise InputError("runs have different horizons")
    stacked = np.vstack(curves)
    mean = stacked.mean(axis=0)
    p10, p90 = np.percentile(stacked, [10, 90], axis=0)
    path = Path(path)
    lines = ["t,mean_cum_regret,p10_cum_regret,p90_cum_regret"]
    lines += [f"{i + 1},{_fmt(m)},{_fmt(lo)},{_fmt(hi)}" for i, (m, lo, hi) in enumerate(zip(mean, p10, p90))]
    path.write_text("\n".join(lines) + "\n")
    return path
