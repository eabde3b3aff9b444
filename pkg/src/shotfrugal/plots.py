"""Static SVG figures from result CSVs."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import value_at_budget  # noqa: E402

PLOT_KINDS = ("loss_vs_shots", "dist_at_budget", "error_bound_vs_shots", "shots_per_iter",
              "mse_bound_vs_actual", "ci_check")

REQUIRED = {
    "loss_vs_shots": ("variant", "trial", "cumulative_shots", "exact_f"),
    "dist_at_budget": ("variant", "trial", "cumulative_shots", "exact_f"),
    "error_bound_vs_shots": ("variant", "trial", "cumulative_shots", "mse_target"),
    "shots_per_iter": ("variant", "iteration", "shots"),
    "mse_bound_vs_actual": ("variant", "iteration", "estimate_value", "exact_f", "mse_bound"),
    "ci_check": ("variant", "iteration", "estimate_value", "exact_f", "ci_radius_k2"),
}

PERCENTILES = (10, 50, 90)


class PlotError(ValueError):
    pass


def _by_variant(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[r["variant"]].append(r)
    return dict(sorted(groups.items()))


def _step_series(rows, column, grid):
    """Per-trial step function of ``column`` over cumulative shots, sampled on ``grid``."""
    trials = defaultdict(list)
    for r in rows:
        trials[r["trial"]].append((float(r["cumulative_shots"]), float(r[column])))
    out = np.full((len(trials), len(grid)), np.nan)
    for t, pts in enumerate(trials.values()):
        pts.sort()
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        idx = np.searchsorted(xs, grid, side="right") - 1
        ok = idx >= 0
        out[t, ok] = ys[idx[ok]]
    return out


def _band(ax, x, data, label):
    lo, mid, hi = np.nanpercentile(data, PERCENTILES, axis=0)
    line, = ax.plot(x, mid, label=f"{label} (median)")
    ax.fill_between(x, lo, hi, alpha=0.2, color=line.get_color(), linewidth=0)


def _per_iteration(rows, fn):
    groups = defaultdict(list)
    for r in rows:
        groups[int(r["iteration"])].append(r)
    its = sorted(groups)
    return np.array(its), [fn(groups[i]) for i in its]


def emit_plot(rows: list[dict], kind: str, out_path, budget: float | None = None, variants=None):
    """Render one figure kind to ``out_path`` as SVG.

    Ensemble plots show the 10/50/90 percentile band per variant.
    """
    if kind not in PLOT_KINDS:
        raise PlotError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    if variants is not None:
        rows = [r for r in rows if r.get("variant") in set(variants)]
    if not rows:
        raise PlotError("no rows to plot")
    missing = [c for c in REQUIRED[kind] if c not in rows[0]]
    if missing:
        raise PlotError(f"{kind} needs columns {missing}")

    groups = _by_variant(rows)
    fig, ax = plt.subplots(figsize=(6, 4))

    if kind in ("loss_vs_shots", "error_bound_vs_shots"):
        column = "exact_f" if kind == "loss_vs_shots" else "mse_target"
        top = budget or max(float(r["cumulative_shots"]) for r in rows)
        # every trial has a row by the largest first-iteration shot count
        start = max(min(float(r["cumulative_shots"]) for r in g) for g in groups.values())
        grid = np.linspace(start, max(top, start), 200)
        for name, g in groups.items():
            _band(ax, grid, _step_series(g, column, grid), name)
        ax.set_xlabel("cumulative shots")
        ax.set_ylabel("exact f" if column == "exact_f" else "MSE target")
        if kind == "error_bound_vs_shots":
            ax.set_yscale("log")
    elif kind == "dist_at_budget":
        if budget is None:
            budget = min(max(float(r["cumulative_shots"]) for r in g) for g in groups.values())
        vals = {name: list(value_at_budget(g, budget).values()) for name, g in groups.items()}
        lo = min(min(v) for v in vals.values())
        hi = max(max(v) for v in vals.values())
        bins = np.linspace(lo, hi if hi > lo else lo + 1, 25)
        for name, v in vals.items():
            ax.hist(v, bins=bins, alpha=0.5, label=f"{name} (median {np.median(v):.3f})")
        ax.set_xlabel(f"exact f after {budget:g} shots")
        ax.set_ylabel("trials")
    elif kind == "shots_per_iter":
        for name, g in groups.items():
            its, data = _per_iteration(g, lambda rs: [float(r["shots"]) for r in rs])
            pct = np.array([np.percentile(d, PERCENTILES) for d in data])
            line, = ax.plot(its, pct[:, 1], label=f"{name} (median)")
            ax.fill_between(its, pct[:, 0], pct[:, 2], alpha=0.2, color=line.get_color(), linewidth=0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("shots")
    elif kind == "mse_bound_vs_actual":
        for name, g in groups.items():
            its, pairs = _per_iteration(g, lambda rs: (
                np.mean([(float(r["estimate_value"]) - float(r["exact_f"])) ** 2 for r in rs]),
                np.mean([float(r["mse_bound"]) for r in rs])))
            pairs = np.array(pairs)
            line, = ax.plot(its, pairs[:, 1], "--", label=f"{name} bound")
            ax.plot(its, pairs[:, 0], color=line.get_color(), label=f"{name} empirical")
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("MSE")
    else:  # ci_check
        for name, g in groups.items():
            its, data = _per_iteration(g, lambda rs: (
                [abs(float(r["estimate_value"]) - float(r["exact_f"])) for r in rs],
                np.mean([float(r["ci_radius_k2"]) for r in rs])))
            err = np.array([np.percentile(d[0], PERCENTILES) for d in data])
            line, = ax.plot(its, [d[1] for d in data], "--", label=f"{name} CI radius (k=2)")
            ax.plot(its, err[:, 1], color=line.get_color(), label=f"{name} |error| (median)")
            ax.fill_between(its, err[:, 0], err[:, 2], alpha=0.2, color=line.get_color(), linewidth=0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("absolute error")

    ax.legend(fontsize="small")
    ax.set_title(kind.replace("_", " "))
    fig.tight_layout()
    with plt.rc_context({"svg.hashsalt": "shotfrugal", "svg.fonttype": "path"}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
