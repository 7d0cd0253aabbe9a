"""Sampler diagnostics and the benchmark/scaling experiment pipelines.

Conventions (documented because the literature is not uniform):

* Total variation between two histograms is ``sum_b |p_b - q_b|``, which
  lies in [0, 2]; disjoint supports give 2.  Marginal accuracy is then
  ``1 - (1/(2d)) * sum_i TV_i``, which lies in [0, 1] and hits 0 exactly
  for coordinate-wise disjoint samples.
* Autocorrelation time is ``1 + 2 * sum_{s=1}^{s_max} rho_s`` with
  ``rho_s`` the biased (1/n-normalized) sample autocorrelation.  The
  default truncation is initial-positive: stop at the first lag where
  ``rho_s + rho_{s+1} <= 0``.
* Benchmark sweeps discard the first 20% of every chain as burn-in and
  give each (kind, eta) cell its own seed derived from
  ``(master_seed, kind, eta)``, so cell results do not depend on sweep
  order and cells may run concurrently (``QS_THREADS``).
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import PhasePoint, exact_gaussian_flow, leapfrog_trajectory, n_leapfrog_steps
from .errors import DegenerateSeriesError, InvalidInputError, QuarterstepError
from .models import GaussianTarget, TargetModel
from .samplers import SamplerKind, SamplerSpec, Trace, run_sampler
from .seeding import derive_seed, rng_from

__all__ = [
    "MarginalAccuracyReport",
    "AutocorrelationReport",
    "marginal_accuracy",
    "autocorrelation_time",
    "test_function_l1",
    "BenchmarkCell",
    "BenchmarkReport",
    "benchmark",
    "ScalingResult",
    "stepsize_scaling",
    "BURN_FRACTION",
]

BURN_FRACTION = 0.2


@dataclass
class MarginalAccuracyReport:
    ma: float
    per_coordinate_tv: np.ndarray
    bins: int


@dataclass
class AutocorrelationReport:
    act: float
    rho: np.ndarray
    s_max: int
    test_function: str


def marginal_accuracy(sample, reference, bins: int = 50) -> MarginalAccuracyReport:
    """Marginal accuracy of ``sample`` against ``reference``.

    Per coordinate, both samples are binned with ``bins`` equal-width bins
    over the union of their ranges; a coordinate that is constant and equal
    in both samples contributes TV = 0.  Symmetric in its two arguments.
    """
    sample = np.asarray(sample, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if sample.ndim != 2 or reference.ndim != 2:
        raise InvalidInputError("sample and reference must be n x d matrices")
    if sample.shape[1] != reference.shape[1]:
        raise InvalidInputError("sample and reference dimensions differ")
    if bins < 1:
        raise InvalidInputError("bins must be >= 1")
    if sample.shape[0] < 2 * bins or reference.shape[0] < 2 * bins:
        raise InvalidInputError("need at least 2*bins points in each sample")

    d = sample.shape[1]
    tv = np.empty(d)
    for j in range(d):
        s = sample[:, j]
        r = reference[:, j]
        lo = min(s.min(), r.min())
        hi = max(s.max(), r.max())
        if lo == hi:
            tv[j] = 0.0  # both constant at the same value
            continue
        p, _ = np.histogram(s, bins=bins, range=(lo, hi))
        q, _ = np.histogram(r, bins=bins, range=(lo, hi))
        tv[j] = float(np.sum(np.abs(p / s.size - q / r.size)))
    ma = 1.0 - float(np.sum(tv)) / (2.0 * d)
    return MarginalAccuracyReport(ma=ma, per_coordinate_tv=tv, bins=bins)


def _autocorrelations(x: np.ndarray) -> np.ndarray:
    """Biased sample autocorrelations at all lags, via FFT."""
    n = x.size
    x = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    return acov / acov[0]


def autocorrelation_time(series, s_max: int | None = None,
                         test_function: str = "series") -> AutocorrelationReport:
    """Integrated autocorrelation time ``1 + 2 sum_{s<=s_max} rho_s``.

    ``s_max=None`` selects the initial-positive truncation (first lag with
    ``rho_s + rho_{s+1} <= 0``); an integer fixes the truncation lag, with
    ``s_max=0`` returning exactly 1.  The estimate is floored at 0.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 100:
        raise InvalidInputError("series must have at least 100 points")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("series has non-finite values")
    if np.var(x) == 0.0:
        raise DegenerateSeriesError("series has zero sample variance")

    rho = _autocorrelations(x)
    n = x.size
    if s_max is None:
        pair = rho[1:n - 1] + rho[2:n]
        hits = np.nonzero(pair <= 0.0)[0]
        s_max = int(hits[0]) + 1 if hits.size else n - 2
    else:
        s_max = int(s_max)
        if not (0 <= s_max <= n - 2):
            raise InvalidInputError(f"s_max must lie in [0, {n - 2}]")
    act = 1.0 + 2.0 * float(np.sum(rho[1:s_max + 1]))
    return AutocorrelationReport(act=max(act, 0.0), rho=rho[:s_max + 1],
                                 s_max=s_max, test_function=test_function)


def test_function_l1(positions) -> np.ndarray:
    """Row-wise l1 norm, the benchmark's scalar test function."""
    P = np.asarray(positions, dtype=float)
    if P.ndim != 2:
        raise InvalidInputError("positions must be an n x d matrix")
    return np.abs(P).sum(axis=1)


@dataclass
class BenchmarkCell:
    kind: str
    eta: float
    seed: int
    ma: float | None = None
    act: float | None = None
    accept_rate: float | None = None
    grad_evals: int | None = None
    outer_steps: int | None = None
    error: str | None = None


@dataclass
class BenchmarkReport:
    target: str
    budget: int
    bins: int
    reference: dict
    cells: list

    def to_json_dict(self) -> dict:
        return {
            "target": self.target,
            "budget": self.budget,
            "bins": self.bins,
            "reference": self.reference,
            "cells": [vars(c) for c in self.cells],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def save_csv(self, path) -> None:
        columns = ["kind", "eta", "ma", "act", "accept_rate", "grad_evals",
                   "outer_steps", "seed", "error"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(columns) + "\n")
            for cell in self.cells:
                row = []
                for col in columns:
                    value = getattr(cell, col)
                    row.append("" if value is None else str(value))
                fh.write(",".join(row) + "\n")

    def best_cell(self, kind, key="ma"):
        """Best non-failed cell of a kind: max MA or min act."""
        kind = SamplerKind(kind).value
        ok = [c for c in self.cells if c.kind == kind and c.error is None
              and getattr(c, key) is not None]
        if not ok:
            return None
        if key == "ma":
            return max(ok, key=lambda c: c.ma)
        return min(ok, key=lambda c: getattr(c, key))


def _burn(positions: np.ndarray) -> np.ndarray:
    cut = int(BURN_FRACTION * positions.shape[0])
    return positions[cut:]


def outer_steps_for_budget(kind, budget: int, T: float | None, eta: float) -> int:
    """Outer steps so the chain consumes ``budget`` numerical steps.

    HMC kinds spend ``floor(T / eta)`` leapfrog steps per outer step; the
    Langevin kinds spend one numerical step per outer step.
    """
    kind = SamplerKind(kind)
    if kind in (SamplerKind.UHMC, SamplerKind.MHMC):
        inner = n_leapfrog_steps(T, eta)
        outer = budget // inner
    else:
        outer = budget
    if outer < 1:
        raise InvalidInputError(
            f"budget {budget} too small for {kind.value} at eta={eta}")
    return int(outer)


def _run_cell(target, template: SamplerSpec, eta: float, budget: int,
              master_seed: int, bins: int, reference_sample: np.ndarray) -> BenchmarkCell:
    kind = SamplerKind(template.kind)
    seed = derive_seed(master_seed, kind.value, float(eta))
    cell = BenchmarkCell(kind=kind.value, eta=float(eta), seed=seed)
    try:
        outer = outer_steps_for_budget(kind, budget, template.T, eta)
        spec = SamplerSpec(kind=kind, i_max=outer, seed=seed, eta=eta,
                           T=template.T, start=template.start, thin=template.thin)
        trace = run_sampler(target, spec)
        kept = _burn(trace.positions)
        cell.ma = marginal_accuracy(kept, reference_sample, bins=bins).ma
        cell.act = autocorrelation_time(test_function_l1(kept),
                                        test_function="l1_norm").act
        cell.accept_rate = trace.acceptance_rate
        cell.grad_evals = trace.grad_evals
        cell.outer_steps = outer
    except QuarterstepError as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def benchmark(target: TargetModel, specs, eta_grid, reference_spec: SamplerSpec,
              bins: int = 50, budget: int = 20_000,
              master_seed: int | None = None,
              target_label: str = "target") -> BenchmarkReport:
    """Accuracy/autocorrelation sweep over sampler kinds and step sizes.

    ``specs`` holds one template spec per kind (its ``T``, start, and
    thinning are reused; ``eta`` and ``i_max`` are overridden per cell).
    Every cell runs a fixed budget of numerical steps and is scored against
    the long reference chain by marginal accuracy and by the
    autocorrelation time of the l1-norm test function.  A failed cell is
    recorded with its error and does not abort the sweep.
    """
    if master_seed is None:
        master_seed = reference_spec.seed
    reference_trace = run_sampler(target, reference_spec)
    reference_sample = _burn(reference_trace.positions)

    jobs = [(template, float(eta)) for template in specs for eta in eta_grid]
    workers = max(1, int(os.environ.get("QS_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(
                lambda job: _run_cell(target, job[0], job[1], budget,
                                      master_seed, bins, reference_sample),
                jobs))
    else:
        cells = [_run_cell(target, template, eta, budget, master_seed, bins,
                           reference_sample)
                 for template, eta in jobs]

    reference_info = {
        "kind": SamplerKind(reference_spec.kind).value,
        "i_max": reference_spec.i_max,
        "eta": reference_spec.eta,
        "seed": reference_spec.seed,
    }
    return BenchmarkReport(target=target_label, budget=budget, bins=bins,
                           reference=reference_info, cells=cells)


@dataclass
class ScalingResult:
    d_list: list
    eta_star: np.ndarray
    slope: float
    eps: float
    T: float
    n_draws: int
    seed: int

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("d,eta_star\n")
            for d, eta in zip(self.d_list, self.eta_star):
                fh.write(f"{d},{format(eta, '.17g')}\n")

    def to_json_dict(self) -> dict:
        return {
            "d_list": list(self.d_list),
            "eta_star": [float(v) for v in self.eta_star],
            "slope": self.slope,
            "eps": self.eps,
            "T": self.T,
            "n_draws": self.n_draws,
            "seed": self.seed,
        }


def _mean_endpoint_error(target: GaussianTarget, momenta: np.ndarray,
                         eta: float, T: float) -> float:
    """Leapfrog-vs-exact-flow position error at the effective time
    ``eta * floor(T / eta)``, averaged over momentum draws."""
    steps = n_leapfrog_steps(T, eta)
    t_eff = eta * steps
    q0 = np.zeros(target.dim)
    errors = np.empty(momenta.shape[0])
    for k, p in enumerate(momenta):
        start = PhasePoint(q0, p)
        end = leapfrog_trajectory(target, start, eta, T).end
        exact = exact_gaussian_flow(target, start, t_eff)
        errors[k] = np.linalg.norm(end.q - exact.q)
    return float(errors.mean())


def stepsize_scaling(d_list, eps: float = 0.1, T: float = 1.0,
                     n_draws: int = 20, seed: int = 0,
                     eta_lo: float = 0.02, eta_hi: float | None = None,
                     bisection_iters: int = 30) -> ScalingResult:
    """Largest step size whose mean endpoint error equals ``eps``, per
    dimension, with the log-log slope of that curve.

    On a standard Gaussian the trajectory error grows like
    ``eta^2 * ||p||``, so with ``||p|| ~ sqrt(d)`` the critical step size
    should fall off like ``d^(-1/4)``; the fitted slope measures exactly
    that exponent.
    """
    d_list = [int(d) for d in d_list]
    if len(d_list) < 2:
        raise InvalidInputError("need at least two dimensions to fit a slope")
    if eta_hi is None:
        eta_hi = T  # a trajectory takes at least one step, so eta <= T
    eta_star = np.empty(len(d_list))
    for idx, d in enumerate(d_list):
        target = GaussianTarget.standard(d)
        momenta = rng_from(seed, d).standard_normal((n_draws, d))
        err_lo = _mean_endpoint_error(target, momenta, eta_lo, T)
        err_hi = _mean_endpoint_error(target, momenta, eta_hi, T)
        if not (err_lo < eps < err_hi):
            raise InvalidInputError(
                f"bisection bracket [{eta_lo}, {eta_hi}] does not straddle "
                f"eps={eps} at d={d} (errors {err_lo:.3g}, {err_hi:.3g})")
        lo, hi = eta_lo, eta_hi
        for _ in range(bisection_iters):
            mid = 0.5 * (lo + hi)
            if _mean_endpoint_error(target, momenta, mid, T) < eps:
                lo = mid
            else:
                hi = mid
        eta_star[idx] = 0.5 * (lo + hi)
    slope = float(np.polyfit(np.log(d_list), np.log(eta_star), 1)[0])
    return ScalingResult(d_list=d_list, eta_star=eta_star, slope=slope,
                         eps=eps, T=T, n_draws=n_draws, seed=seed)
