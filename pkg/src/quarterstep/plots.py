"""Figure rendering for the CLI report paths.

Each function draws one figure from an in-memory result object and writes
it next to the delimited output it illustrates.  Uses the Agg backend so
runs work headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_trace",
    "plot_benchmark",
    "plot_coupling",
    "plot_scaling",
    "plot_figure3",
]

_DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trace(trace, path):
    """First-coordinate sample path and per-step energies."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    axes[0].plot(trace.recorded_steps, trace.positions[:, 0],
                 lw=0.6, color="tab:blue")
    axes[0].set_ylabel("$x_1$")
    axes[0].set_title(f"{trace.spec.kind.value} trace")
    axes[1].plot(np.arange(trace.energies.size), trace.energies,
                 lw=0.6, color="tab:orange")
    axes[1].set_ylabel("energy")
    axes[1].set_xlabel("step")
    for ax in axes:
        ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_benchmark(report, path):
    """Marginal accuracy and autocorrelation time versus step size, one
    line per sampler kind."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 8), sharex=True)
    kinds = sorted({c.kind for c in report.cells})
    for kind in kinds:
        cells = sorted((c for c in report.cells if c.kind == kind and c.error is None),
                       key=lambda c: c.eta)
        if not cells:
            continue
        etas = [c.eta for c in cells]
        axes[0].plot(etas, [c.ma for c in cells], "o-", label=kind)
        axes[1].plot(etas, [c.act for c in cells], "o-", label=kind)
    axes[0].set_ylabel("marginal accuracy")
    axes[0].set_ylim(0.0, 1.05)
    axes[1].set_ylabel("autocorrelation time")
    axes[1].set_yscale("log")
    axes[1].set_xlabel(r"step size $\eta$")
    for ax in axes:
        ax.grid(alpha=0.3)
        ax.legend()
    axes[0].set_title(f"benchmark: {report.target}, budget {report.budget}")
    return _save(fig, path)


def plot_coupling(record, path):
    """Coupled-chain distance per step on a log scale."""
    fig, ax = plt.subplots(figsize=(7, 5))
    positive = record.distances > 0
    steps = np.arange(record.distances.size)
    ax.semilogy(steps[positive], record.distances[positive], "o-", ms=3)
    ax.set_xlabel("step")
    ax.set_ylabel(r"$\|X_i - Y_i\|_2$")
    ax.set_title("synchronous coupling")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def plot_scaling(result, path):
    """Critical step size versus dimension (log-log) with the fitted slope."""
    fig, ax = plt.subplots(figsize=(7, 5))
    d = np.asarray(result.d_list, dtype=float)
    ax.loglog(d, result.eta_star, "o", label="measured")
    anchor = result.eta_star[0] / d[0] ** result.slope
    ax.loglog(d, anchor * d ** result.slope, "--",
              label=f"slope {result.slope:.3f}")
    ax.set_xlabel("dimension $d$")
    ax.set_ylabel(r"$\eta^*(d)$")
    ax.set_title(f"step size at endpoint error {result.eps}")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    return _save(fig, path)


def plot_figure3(rows, path):
    """Medians of the two error predictors versus dimension."""
    ok = [r for r in rows if r.error is None]
    fig, ax = plt.subplots(figsize=(7, 5))
    d = [r.d for r in ok]
    ax.loglog(d, [r.median_euclidean for r in ok], "o-",
              label=r"median $\sqrt{L_2}\,\|p\|_2$")
    ax.loglog(d, [r.median_seminorm for r in ok], "s-",
              label=r"median $\sqrt{L_\infty}\,r^{1/4}\|p\|_{u}$")
    ax.set_xlabel("dimension $d$")
    ax.set_ylabel("median predictor value")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    return _save(fig, path)
