"""Markov chains: unadjusted and Metropolis-adjusted leapfrog HMC, Langevin
baselines, exact-flow HMC for Gaussian targets, and a synchronous-coupling
runner.

Every sampler is a pure function of ``(target, spec)``: randomness comes
from a PCG64 stream seeded by ``spec.seed``, with a fixed draw order per
step (momentum/noise first, then the Metropolis uniform where applicable).
Chains never share mutable state; run many of them concurrently by giving
each its own spec.

Gradient accounting per outer step (asserted in tests):

    UHMC / MHMC   floor(T / eta) + 1      (cached endpoint gradients)
    MALA          1, plus 1 at start      (current gradient cached across steps)
    ULA           1
    idealized     0
"""

import json
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dynamics import (GradEvalCounter, PhasePoint, exact_gaussian_flow,
                       n_leapfrog_steps)
from .errors import DivergenceError, InvalidInputError, UnsupportedOperationError
from .models import TargetModel, cold_start
from .seeding import rng_from

__all__ = [
    "SamplerKind",
    "StartSpec",
    "SamplerSpec",
    "Trace",
    "CouplingRecord",
    "run_sampler",
    "run_uhmc",
    "run_mhmc",
    "run_langevin",
    "run_idealized_hmc",
    "run_coupled",
    "trace_to_csv",
    "trace_summary",
]


class SamplerKind(str, Enum):
    UHMC = "uhmc"
    MHMC = "mhmc"
    MALA = "mala"
    ULA = "ula"
    IDEALIZED_HMC = "idealized"


_HMC_KINDS = (SamplerKind.UHMC, SamplerKind.MHMC)
_LANGEVIN_KINDS = (SamplerKind.MALA, SamplerKind.ULA)
_ADJUSTED_KINDS = (SamplerKind.MHMC, SamplerKind.MALA)


@dataclass
class StartSpec:
    """Chain initialization: at the potential's minimizer (``cold``), at a
    point assumed close to stationarity (``warm``), or at an arbitrary
    explicit point.  Warm and explicit starts behave identically at run
    time; the label is kept for provenance."""

    mode: str = "cold"
    point: np.ndarray | None = None
    tol: float = 1e-8

    def __post_init__(self):
        if self.mode not in ("cold", "warm", "explicit"):
            raise InvalidInputError(f"unknown start mode {self.mode!r}")
        if self.mode != "cold" and self.point is None:
            raise InvalidInputError(f"{self.mode} start requires a point")
        if self.point is not None:
            self.point = np.asarray(self.point, dtype=float)

    @classmethod
    def cold(cls, tol: float = 1e-8):
        return cls(mode="cold", tol=tol)

    @classmethod
    def warm(cls, point):
        return cls(mode="warm", point=point)

    @classmethod
    def explicit(cls, point):
        return cls(mode="explicit", point=point)

    def resolve(self, target: TargetModel) -> np.ndarray:
        if self.mode == "cold":
            return cold_start(target, tol=self.tol)
        if self.point.shape != (target.dim,):
            raise InvalidInputError(
                f"start point has shape {self.point.shape}, expected ({target.dim},)")
        return self.point.copy()


@dataclass
class SamplerSpec:
    """Parameters of one chain.

    ``eta`` is the discretization step (ignored by the idealized kind),
    ``T`` the trajectory time (HMC kinds only), ``i_max`` the number of
    outer Markov-chain steps.  ``thin`` keeps every thin-th position plus
    the final one.
    """

    kind: SamplerKind
    i_max: int
    seed: int
    eta: float | None = None
    T: float | None = None
    start: StartSpec = field(default_factory=StartSpec.cold)
    thin: int = 1

    def __post_init__(self):
        self.kind = SamplerKind(self.kind)
        if self.i_max < 1:
            raise InvalidInputError("i_max must be >= 1")
        if self.thin < 1:
            raise InvalidInputError("thin must be >= 1")
        if self.kind in _HMC_KINDS:
            if self.eta is None or self.T is None:
                raise InvalidInputError(f"{self.kind.value} requires eta and T")
            if not (0.0 < self.eta <= self.T):
                raise InvalidInputError("HMC kinds require 0 < eta <= T")
        elif self.kind in _LANGEVIN_KINDS:
            if self.eta is None or self.eta <= 0.0:
                raise InvalidInputError(f"{self.kind.value} requires eta > 0")
        elif self.kind is SamplerKind.IDEALIZED_HMC:
            if self.T is None or self.T <= 0.0:
                raise InvalidInputError("idealized kind requires T > 0")


@dataclass
class Trace:
    """Recorded output of one chain.

    ``positions`` holds the recorded states (all ``i_max + 1`` unless
    thinned) and ``recorded_steps`` their outer-step indices.  ``energies``
    has one entry per outer step: the Hamiltonian at the start of the
    step's trajectory for kinds with momentum, the bare potential for the
    Langevin kinds.  ``accepts`` is present only for the adjusted kinds.
    """

    spec: SamplerSpec
    positions: np.ndarray
    recorded_steps: np.ndarray
    energies: np.ndarray
    accepts: np.ndarray | None
    grad_evals: int
    wall_time: float

    @property
    def acceptance_rate(self) -> float | None:
        if self.accepts is None:
            return None
        return float(np.mean(self.accepts))

    def final_position(self) -> np.ndarray:
        return self.positions[-1]


@dataclass
class CouplingRecord:
    """Distances ``||X_i - Y_i||`` of two synchronously coupled chains and
    the per-step contraction factors (NaN where the previous distance is
    below 1e-14)."""

    distances: np.ndarray
    ratios: np.ndarray


def _record_indices(i_max: int, thin: int) -> np.ndarray:
    idx = np.arange(0, i_max + 1, thin)
    if idx[-1] != i_max:
        idx = np.append(idx, i_max)
    return idx


def _leapfrog_raw(target, q, p, eta, steps, outer_step):
    """Leapfrog without the energy bookkeeping of the public trajectory API."""
    half_eta = 0.5 * eta
    half_eta_sq = 0.5 * eta * eta
    grad = target.gradient(q)
    for j in range(steps):
        q = q + eta * p - half_eta_sq * grad
        if not np.all(np.isfinite(q)):
            raise DivergenceError("trajectory diverged",
                                  inner_step=j, outer_step=outer_step)
        grad_new = target.gradient(q)
        p = p - half_eta * (grad + grad_new)
        if not np.all(np.isfinite(p)):
            raise DivergenceError("trajectory diverged",
                                  inner_step=j, outer_step=outer_step)
        grad = grad_new
    return q, p, steps + 1


def run_uhmc(target: TargetModel, spec: SamplerSpec) -> Trace:
    """Unadjusted HMC: fresh N(0, I) momentum each step, leapfrog trajectory,
    no accept/reject."""
    if spec.kind is not SamplerKind.UHMC:
        raise InvalidInputError(f"spec.kind is {spec.kind.value}, expected uhmc")
    t0 = time.perf_counter()
    rng = rng_from(spec.seed)
    counter = GradEvalCounter()
    steps = n_leapfrog_steps(spec.T, spec.eta)
    q = spec.start.resolve(target)
    d = target.dim

    record = _record_indices(spec.i_max, spec.thin)
    positions = np.empty((record.size, d))
    energies = np.empty(spec.i_max)
    rec = 0
    if record[rec] == 0:
        positions[rec] = q
        rec += 1
    for i in range(spec.i_max):
        p = rng.standard_normal(d)
        energies[i] = target.potential(q) + 0.5 * float(p @ p)
        q, _, evals = _leapfrog_raw(target, q, p, spec.eta, steps, outer_step=i)
        counter.add(evals)
        if rec < record.size and record[rec] == i + 1:
            positions[rec] = q
            rec += 1
    return Trace(spec=spec, positions=positions, recorded_steps=record,
                 energies=energies, accepts=None, grad_evals=counter.count,
                 wall_time=time.perf_counter() - t0)


def run_mhmc(target: TargetModel, spec: SamplerSpec) -> Trace:
    """Metropolis-adjusted HMC.

    The proposal is the leapfrog trajectory endpoint with momentum negated
    (a no-op for the acceptance probability under full refresh, kept for
    textbook reversibility); acceptance probability is
    ``min(1, exp(H(X_i, p_i) - H(q*, p*)))``.
    """
    if spec.kind is not SamplerKind.MHMC:
        raise InvalidInputError(f"spec.kind is {spec.kind.value}, expected mhmc")
    t0 = time.perf_counter()
    rng = rng_from(spec.seed)
    counter = GradEvalCounter()
    steps = n_leapfrog_steps(spec.T, spec.eta)
    q = spec.start.resolve(target)
    d = target.dim
    u_cur = target.potential(q)

    record = _record_indices(spec.i_max, spec.thin)
    positions = np.empty((record.size, d))
    energies = np.empty(spec.i_max)
    accepts = np.empty(spec.i_max, dtype=bool)
    rec = 0
    if record[rec] == 0:
        positions[rec] = q
        rec += 1
    for i in range(spec.i_max):
        p = rng.standard_normal(d)
        uniform = rng.random()
        h0 = u_cur + 0.5 * float(p @ p)
        energies[i] = h0
        q_prop, p_prop, evals = _leapfrog_raw(target, q, p, spec.eta, steps,
                                              outer_step=i)
        counter.add(evals)
        p_prop = -p_prop
        u_prop = target.potential(q_prop)
        h1 = u_prop + 0.5 * float(p_prop @ p_prop)
        accept = np.log(uniform) < h0 - h1 if uniform > 0.0 else True
        accepts[i] = accept
        if accept:
            q, u_cur = q_prop, u_prop
        if rec < record.size and record[rec] == i + 1:
            positions[rec] = q
            rec += 1
    return Trace(spec=spec, positions=positions, recorded_steps=record,
                 energies=energies, accepts=accepts, grad_evals=counter.count,
                 wall_time=time.perf_counter() - t0)


def run_langevin(target: TargetModel, spec: SamplerSpec) -> Trace:
    """MALA and ULA.

    Proposal ``x' = x - (eta^2 / 2) grad U(x) + eta xi`` with
    ``xi ~ N(0, I)``.  MALA applies the Metropolis-Hastings correction with
    the Gaussian proposal density (current gradient cached across steps,
    so ``i_max + 1`` gradient evaluations); ULA always accepts (``i_max``
    evaluations).
    """
    if spec.kind not in _LANGEVIN_KINDS:
        raise InvalidInputError(f"spec.kind is {spec.kind.value}, expected mala or ula")
    adjusted = spec.kind is SamplerKind.MALA
    t0 = time.perf_counter()
    rng = rng_from(spec.seed)
    counter = GradEvalCounter()
    q = spec.start.resolve(target)
    d = target.dim
    eta = spec.eta
    half_eta_sq = 0.5 * eta * eta

    record = _record_indices(spec.i_max, spec.thin)
    positions = np.empty((record.size, d))
    energies = np.empty(spec.i_max)
    accepts = np.empty(spec.i_max, dtype=bool) if adjusted else None
    rec = 0
    if record[rec] == 0:
        positions[rec] = q
        rec += 1

    if adjusted:
        grad = target.gradient(q)
        counter.add(1)
        u_cur = target.potential(q)
    for i in range(spec.i_max):
        xi = rng.standard_normal(d)
        if adjusted:
            energies[i] = u_cur
        else:
            energies[i] = target.potential(q)
            grad = target.gradient(q)
            counter.add(1)
        mean_fwd = q - half_eta_sq * grad
        q_prop = mean_fwd + eta * xi
        if not np.all(np.isfinite(q_prop)):
            raise DivergenceError("Langevin proposal diverged", outer_step=i)
        if adjusted:
            uniform = rng.random()
            grad_prop = target.gradient(q_prop)
            counter.add(1)
            u_prop = target.potential(q_prop)
            mean_bwd = q_prop - half_eta_sq * grad_prop
            log_fwd = -float(np.sum((q_prop - mean_fwd) ** 2)) / (2.0 * eta * eta)
            log_bwd = -float(np.sum((q - mean_bwd) ** 2)) / (2.0 * eta * eta)
            log_alpha = (u_cur - u_prop) + (log_bwd - log_fwd)
            accept = np.log(uniform) < log_alpha if uniform > 0.0 else True
            accepts[i] = accept
            if accept:
                q, grad, u_cur = q_prop, grad_prop, u_prop
        else:
            q = q_prop
        if rec < record.size and record[rec] == i + 1:
            positions[rec] = q
            rec += 1
    return Trace(spec=spec, positions=positions, recorded_steps=record,
                 energies=energies, accepts=accepts, grad_evals=counter.count,
                 wall_time=time.perf_counter() - t0)


def run_idealized_hmc(target: TargetModel, spec: SamplerSpec) -> Trace:
    """HMC driven by the exact Hamiltonian flow (Gaussian targets only);
    records zero gradient evaluations."""
    if spec.kind is not SamplerKind.IDEALIZED_HMC:
        raise InvalidInputError(f"spec.kind is {spec.kind.value}, expected idealized")
    if not target.has_exact_flow:
        raise UnsupportedOperationError("target does not support exact flow")
    t0 = time.perf_counter()
    rng = rng_from(spec.seed)
    q = spec.start.resolve(target)
    d = target.dim

    record = _record_indices(spec.i_max, spec.thin)
    positions = np.empty((record.size, d))
    energies = np.empty(spec.i_max)
    rec = 0
    if record[rec] == 0:
        positions[rec] = q
        rec += 1
    for i in range(spec.i_max):
        p = rng.standard_normal(d)
        energies[i] = target.potential(q) + 0.5 * float(p @ p)
        q = exact_gaussian_flow(target, PhasePoint(q, p), spec.T).q
        if rec < record.size and record[rec] == i + 1:
            positions[rec] = q
            rec += 1
    return Trace(spec=spec, positions=positions, recorded_steps=record,
                 energies=energies, accepts=None, grad_evals=0,
                 wall_time=time.perf_counter() - t0)


_RUNNERS = {
    SamplerKind.UHMC: run_uhmc,
    SamplerKind.MHMC: run_mhmc,
    SamplerKind.MALA: run_langevin,
    SamplerKind.ULA: run_langevin,
    SamplerKind.IDEALIZED_HMC: run_idealized_hmc,
}


def run_sampler(target: TargetModel, spec: SamplerSpec) -> Trace:
    """Dispatch to the runner for ``spec.kind``."""
    return _RUNNERS[SamplerKind(spec.kind)](target, spec)


def run_coupled(target: TargetModel, spec: SamplerSpec, x0, y0) -> CouplingRecord:
    """Advance two chains with identical momentum draws and record their
    Euclidean distance after every step.

    Only the unadjusted kinds couple cleanly (adjusted kinds would need
    shared uniforms and can decouple on a split accept/reject), so the
    kind must be ``uhmc`` or ``idealized``.
    """
    kind = SamplerKind(spec.kind)
    if kind not in (SamplerKind.UHMC, SamplerKind.IDEALIZED_HMC):
        raise InvalidInputError("coupling supports only uhmc and idealized kinds")
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    if x.shape != (target.dim,) or y.shape != (target.dim,):
        raise InvalidInputError("x0 and y0 must match the target dimension")

    rng = rng_from(spec.seed)
    steps = n_leapfrog_steps(spec.T, spec.eta) if kind is SamplerKind.UHMC else None
    distances = np.empty(spec.i_max + 1)
    distances[0] = np.linalg.norm(x - y)
    for i in range(spec.i_max):
        p = rng.standard_normal(target.dim)
        if kind is SamplerKind.UHMC:
            x, _, _ = _leapfrog_raw(target, x, p, spec.eta, steps, outer_step=i)
            y, _, _ = _leapfrog_raw(target, y, p, spec.eta, steps, outer_step=i)
        else:
            x = exact_gaussian_flow(target, PhasePoint(x, p), spec.T).q
            y = exact_gaussian_flow(target, PhasePoint(y, p), spec.T).q
        distances[i + 1] = np.linalg.norm(x - y)
    prev = distances[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(prev < 1e-14, np.nan, distances[1:] / prev)
    return CouplingRecord(distances=distances, ratios=ratios)


def trace_to_csv(trace: Trace, path) -> None:
    """Write one row per recorded step: index, coordinates, energy, accept.

    The energy column is empty for the final state (no trajectory starts
    there); the accept column is empty for step 0 and for unadjusted kinds.
    """
    d = trace.positions.shape[1]
    header = "step," + ",".join(f"x{j + 1}" for j in range(d)) + ",energy,accept"
    i_max = trace.spec.i_max
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row, step in zip(trace.positions, trace.recorded_steps):
            fields = [str(int(step))]
            fields.extend(format(v, ".17g") for v in row)
            fields.append(format(trace.energies[step], ".17g") if step < i_max else "")
            if trace.accepts is not None and step >= 1:
                fields.append(str(int(trace.accepts[step - 1])))
            else:
                fields.append("")
            fh.write(",".join(fields) + "\n")


def trace_summary(trace: Trace) -> dict:
    """JSON-ready run summary."""
    spec = trace.spec
    return {
        "kind": spec.kind.value,
        "i_max": spec.i_max,
        "eta": spec.eta,
        "T": spec.T,
        "seed": spec.seed,
        "thin": spec.thin,
        "grad_evals": trace.grad_evals,
        "acceptance_rate": trace.acceptance_rate,
        "wall_time": trace.wall_time,
        "n_recorded": int(trace.positions.shape[0]),
    }


def save_trace_summary(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace_summary(trace), fh, indent=2)
        fh.write("\n")
