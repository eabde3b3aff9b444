"""Seeded ensemble experiments, CSV output and the bound check.

Every trial draws from its own stream ``SeedSequence(master_seed,
spawn_key=(trial,))``; all variants of one trial share that seed, so paired
comparisons start from the same initial point. Rows are sorted by
``(variant, trial, iteration)`` before writing, so output does not depend on
worker scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import SQUARE, Graph, make_cosine_problem, make_maxcut_problem
from .estimators import confidence_interval
from .optimizers import GDConfig, SAConfig, run_gd, run_sa

EXPERIMENTS = ("sa_compare", "gd_compare", "maxcut_compare", "bound_check")
BOUND_CHECK_MIN_TRIALS = 500
CI_KAPPA = 2.0

BASE_COLUMNS = ("experiment", "variant", "trial", "iteration", "shots", "cumulative_shots")
VALUE_COLUMNS = ("estimate_value", "mse_bound", "ci_radius_k2", "exact_f", "mse_target",
                 "temperature", "accepted")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class BoundCheckFailure(AssertionError):
    """An empirical error exceeded its theoretical bound."""


@dataclass
class ExperimentConfig:
    """Flat experiment settings; every field is also a JSON config key.

    A field left as ``None`` takes the per-experiment default from
    ``EXPERIMENT_DEFAULTS`` and is listed as defaulted in the manifest.
    """

    experiment: str = "sa_compare"
    trials: int | None = None
    master_seed: int = 0
    shot_budget: float | None = None
    output_dir: str = "results"
    workers: int = 1
    # simulated annealing
    t0: float = 1.0
    cooling: float = 0.95
    proposal_sigma: float = 1.0
    eta: float = 0.5
    e_high: float = 0.25
    e_low: float = 0.0025
    refresh_incumbent: bool = False
    # initial point: center + spread * standard normal, per parameter
    init_center: float = 0.0
    init_spread: float | None = None
    # gradient descent
    learning_rate: float | None = None
    e_f: float | None = None
    e_grad: float | None = None
    max_iters: int | None = None
    drift_policy: str = "full"
    # MaxCut
    graph_file: str | None = None
    qaoa_layers: int = 1
    merge_terms: bool = False


EXPERIMENT_DEFAULTS = {
    "sa_compare": dict(trials=100, shot_budget=7000, init_spread=0.1),
    "gd_compare": dict(trials=50, shot_budget=math.inf, init_spread=1.0, learning_rate=0.5,
                       e_f=0.01, e_grad=0.01, max_iters=30),
    "maxcut_compare": dict(trials=20, shot_budget=math.inf, init_spread=0.3, learning_rate=0.05,
                           e_f=0.05, e_grad=0.05, max_iters=30),
    "bound_check": dict(trials=500, shot_budget=math.inf, init_spread=1.0, learning_rate=0.5,
                        e_f=0.01, e_grad=0.01, max_iters=30),
}

_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def resolve_config(raw: dict) -> tuple[ExperimentConfig, list[str]]:
    """Build a config from a flat mapping, filling per-experiment defaults.

    Returns the config and the names of keys whose value was defaulted.
    """
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    defaulted = sorted(_FIELDS - set(raw))
    for key, value in EXPERIMENT_DEFAULTS[cfg.experiment].items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)
    _validate(cfg)
    return cfg, defaulted


def _validate(cfg: ExperimentConfig):
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        raise ConfigError("trials must be an integer >= 1")
    if cfg.experiment == "bound_check" and cfg.trials < BOUND_CHECK_MIN_TRIALS:
        raise ConfigError(f"bound_check needs trials >= {BOUND_CHECK_MIN_TRIALS} to mean anything")
    if not isinstance(cfg.master_seed, int) or not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed must be a 64-bit nonnegative integer")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    try:
        for variant in variants(cfg):
            _variant_config(cfg, variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def variants(cfg: ExperimentConfig) -> tuple[str, ...]:
    if cfg.experiment == "sa_compare":
        return ("error_aware", "fixed_high", "fixed_low")
    return ("recursive", "sample_mean")


def _variant_config(cfg: ExperimentConfig, variant: str):
    if cfg.experiment == "sa_compare":
        policy = dict(error_aware=("error_aware", None), fixed_high=("fixed", cfg.e_high),
                      fixed_low=("fixed", cfg.e_low))[variant]
        return SAConfig(t0=cfg.t0, cooling=cfg.cooling, proposal_sigma=cfg.proposal_sigma, eta=cfg.eta,
                        shot_budget=cfg.shot_budget, error_policy=policy[0], fixed_e=policy[1],
                        refresh_incumbent=cfg.refresh_incumbent)
    return GDConfig(learning_rate=cfg.learning_rate, e_f=cfg.e_f, e_grad=cfg.e_grad,
                    max_iters=cfg.max_iters, shot_budget=cfg.shot_budget, estimator_kind=variant,
                    drift_policy=cfg.drift_policy)


def make_problem(cfg: ExperimentConfig):
    if cfg.experiment == "maxcut_compare":
        graph = Graph.read(cfg.graph_file) if cfg.graph_file else SQUARE
        return make_maxcut_problem(graph, cfg.qaoa_layers, cfg.merge_terms)
    return make_cosine_problem()


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_to_rows(experiment: str, variant: str, trial: int, trace) -> list[dict]:
    out = []
    for r in trace:
        row = dict(experiment=experiment, variant=variant, trial=trial, iteration=r.iteration,
                   shots=r.shots, cumulative_shots=r.cumulative_shots)
        for k, t in enumerate(r.theta):
            row[f"theta_{k}"] = t
        row.update(estimate_value=r.estimate.value, mse_bound=r.estimate.mse_bound,
                   ci_radius_k2=confidence_interval(r.estimate, CI_KAPPA)[0], exact_f=r.exact_f,
                   mse_target=r.mse_target, temperature=r.temperature, accepted=r.accepted)
        out.append(row)
    return out


def _run_trial(args):
    cfg, variant, trial = args
    problem = make_problem(cfg)
    rng = trial_rng(cfg.master_seed, trial)
    theta0 = cfg.init_center + cfg.init_spread * rng.standard_normal(problem.num_params)
    opt = _variant_config(cfg, variant)
    trace = run_sa(problem, opt, rng, theta0) if isinstance(opt, SAConfig) else run_gd(problem, opt, rng, theta0)
    return trace_to_rows(cfg.experiment, variant, trial, trace)


def run_trials(cfg: ExperimentConfig) -> dict[str, list[dict]]:
    """Run every (variant, trial) pair; returns rows grouped by variant."""
    jobs = [(cfg, v, t) for v in variants(cfg) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_run_trial(j) for j in jobs]
    tables: dict[str, list[dict]] = {v: [] for v in variants(cfg)}
    for rows in results:
        if rows:
            tables[rows[0]["variant"]].extend(rows)
    for rows in tables.values():
        rows.sort(key=lambda r: (r["variant"], r["trial"], r["iteration"]))
    return tables


def columns_for(rows: list[dict]) -> list[str]:
    thetas = sorted({k for r in rows for k in r if k.startswith("theta_")}, key=lambda s: int(s[6:]))
    return [*BASE_COLUMNS, *thetas, *VALUE_COLUMNS]


def write_csv(path, rows: list[dict], columns: list[str] | None = None):
    columns = columns or columns_for(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r[c] if isinstance(r.get(c), str) else _fmt(r.get(c)) for c in columns])


def read_csv(paths) -> list[dict]:
    rows = []
    for p in paths:
        with open(p, newline="", encoding="utf-8") as fh:
            rows.extend(csv.DictReader(fh))
    return rows


def _prepare_output(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output_dir {str(out)!r} is not writable: {exc}") from None
    return out


def write_manifest(out: Path, cfg: ExperimentConfig, defaulted: list[str], files: list[str], extra=None):
    resolved = {k: (None if isinstance(v, float) and math.isinf(v) else v)
                for k, v in dataclasses.asdict(cfg).items()}
    manifest = {
        "config": resolved,
        "defaulted_keys": defaulted,
        "infinite_keys": sorted(k for k, v in dataclasses.asdict(cfg).items()
                                if isinstance(v, float) and math.isinf(v)),
        "tuning_choices": {
            "e_high": cfg.e_high, "e_low": cfg.e_low, "init_spread": cfg.init_spread,
            "proposal": "isotropic gaussian", "cooling": "geometric",
        },
        "ci_kappa": CI_KAPPA,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_experiment(raw: dict) -> dict[str, list[dict]]:
    """Run the experiment described by a flat config mapping and write its files.

    Writes ``<experiment>_<variant>.csv`` per variant and ``manifest.json``
    into ``output_dir``. ``bound_check`` also writes ``bound_check_stats.csv``
    and raises ``BoundCheckFailure`` after writing when a bound is violated.
    """
    cfg, defaulted = resolve_config(raw)
    out = _prepare_output(cfg)
    tables = run_trials(cfg)
    files = []
    for variant, rows in tables.items():
        name = f"{cfg.experiment}_{variant}.csv"
        write_csv(out / name, rows)
        files.append(name)

    extra = None
    failures = []
    if cfg.experiment == "bound_check":
        stats = bound_statistics(tables)
        write_csv(out / "bound_check_stats.csv", stats, list(STATS_COLUMNS))
        files.append("bound_check_stats.csv")
        failures = bound_failures(stats)
        extra = {"bound_check_failures": failures}
    write_manifest(out, cfg, defaulted, files, extra)
    if failures:
        raise BoundCheckFailure("; ".join(failures))
    return tables


# -- bound check -----------------------------------------------------------------

STATS_COLUMNS = ("variant", "iteration", "n", "empirical_mse", "mean_mse_bound", "ci_violation_rate",
                 "tail_bound", "mean_error", "stderr_error")


def bound_statistics(tables: dict[str, list[dict]]) -> list[dict]:
    """Per-iteration empirical MSE and CI violation rate next to their bounds."""
    tail = confidence_interval_tail(CI_KAPPA)
    stats = []
    for variant, rows in tables.items():
        by_iter: dict[int, list[dict]] = {}
        for r in rows:
            by_iter.setdefault(int(r["iteration"]), []).append(r)
        for i in sorted(by_iter):
            group = by_iter[i]
            err = np.array([float(r["estimate_value"]) - float(r["exact_f"]) for r in group])
            rad = np.array([float(r["ci_radius_k2"]) for r in group])
            bound = np.array([float(r["mse_bound"]) for r in group])
            stats.append(dict(
                variant=variant, iteration=i, n=len(group), empirical_mse=float(np.mean(err**2)),
                mean_mse_bound=float(np.mean(bound)), ci_violation_rate=float(np.mean(np.abs(err) > rad)),
                tail_bound=tail, mean_error=float(np.mean(err)),
                stderr_error=float(np.std(err, ddof=1) / math.sqrt(len(err))) if len(err) > 1 else math.inf,
            ))
    return stats


def confidence_interval_tail(kappa: float) -> float:
    return 2 * math.exp(-kappa**2 / 2)


def bound_failures(stats: list[dict]) -> list[str]:
    failures = []
    for s in stats:
        tag = f"{s['variant']} iteration {s['iteration']}"
        if s["empirical_mse"] > s["mean_mse_bound"]:
            failures.append(f"{tag}: empirical MSE {s['empirical_mse']:.3g} > bound {s['mean_mse_bound']:.3g}")
        if s["ci_violation_rate"] > s["tail_bound"]:
            failures.append(f"{tag}: CI violation rate {s['ci_violation_rate']:.3g} > {s['tail_bound']:.3g}")
        if s["variant"] == "sample_mean" and abs(s["mean_error"]) > 5 * s["stderr_error"]:
            failures.append(f"{tag}: mean error {s['mean_error']:.3g} beyond 5 standard errors")
    return failures


def value_at_budget(rows: list[dict], budget: float) -> dict[int, float]:
    """``exact_f`` per trial at the last row whose cumulative shots fit in ``budget``."""
    out: dict[int, float] = {}
    for r in rows:
        if float(r["cumulative_shots"]) <= budget:
            out[int(r["trial"])] = float(r["exact_f"])
    return out
