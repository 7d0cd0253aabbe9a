"""Symplectic leapfrog integration and exact Hamiltonian flow for quadratics.

The leapfrog update is

    q' = q + eta p - (eta^2 / 2) grad U(q)
    p' = p - (eta / 2) grad U(q) - (eta / 2) grad U(q')

and a trajectory of time span T applies floor(T / eta) such steps, reusing
each step's fresh gradient as the next step's cached one, for a total of
floor(T / eta) + 1 gradient evaluations.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .models import GaussianTarget, TargetModel

__all__ = [
    "PhasePoint",
    "DirectionSet",
    "TrajectoryResult",
    "GradEvalCounter",
    "n_leapfrog_steps",
    "leapfrog_step",
    "leapfrog_trajectory",
    "exact_gaussian_flow",
    "hamiltonian",
    "inf_seminorm",
]

# Guard against float quotients like 1.0 / 0.1 landing just below an integer;
# without it an exact multiple could lose a step to floor().
_FLOOR_GUARD = 1e-9


@dataclass
class PhasePoint:
    """A (position, momentum) pair.  Arrays are treated as immutable."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise InvalidInputError(
                f"q and p must be vectors of equal length, got {self.q.shape} and {self.p.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise InvalidInputError("phase point has non-finite components")

    @property
    def dim(self) -> int:
        return self.q.shape[0]


class DirectionSet:
    """The unit directions defining the ``max_i |u_i' x|`` seminorm."""

    def __init__(self, vectors):
        U = np.asarray(vectors, dtype=float)
        if U.size == 0:
            U = U.reshape(0, 0)
        if U.ndim != 2:
            raise InvalidInputError("directions must form an r x d matrix")
        if U.shape[0] > 0:
            norms = np.linalg.norm(U, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-10):
                raise InvalidInputError("directions must be unit vectors (1e-10)")
        self.vectors = U

    @classmethod
    def from_rows(cls, X):
        """Directions from the normalized rows of a design matrix."""
        X = np.asarray(X, dtype=float)
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise InvalidInputError("cannot normalize a zero row")
        return cls(X / norms)

    def __len__(self) -> int:
        return self.vectors.shape[0]


def inf_seminorm(dirs: DirectionSet, x) -> float:
    """``max_i |u_i' x|``; zero for an empty direction set."""
    if len(dirs) == 0:
        return 0.0
    return float(np.max(np.abs(dirs.vectors @ np.asarray(x, dtype=float))))


class GradEvalCounter:
    """Mutable gradient-evaluation tally, owned by one chain at a time."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, n: int = 1):
        self.count += n


@dataclass
class TrajectoryResult:
    end: PhasePoint
    grad_evals: int
    energy_drift: float
    n_steps: int


def n_leapfrog_steps(T: float, eta: float) -> int:
    """Number of leapfrog steps, ``floor(T / eta)``, for a time span ``T``."""
    if not (0.0 < eta <= T):
        raise InvalidInputError(f"need 0 < eta <= T, got eta={eta}, T={T}")
    return int(np.floor(T / eta + _FLOOR_GUARD))


def hamiltonian(target: TargetModel, phase: PhasePoint) -> float:
    """Total energy ``U(q) + ||p||^2 / 2``."""
    return target.potential(phase.q) + 0.5 * float(phase.p @ phase.p)


def leapfrog_step(target: TargetModel, phase: PhasePoint, eta: float,
                  cached_grad=None):
    """One leapfrog step; returns the new phase and the gradient at its position.

    Supplying ``cached_grad = grad U(q)`` saves one of the two gradient
    evaluations; the returned gradient is meant to be passed back in on the
    next call.
    """
    if eta <= 0.0:
        raise InvalidInputError("eta must be positive")
    grad0 = target.gradient(phase.q) if cached_grad is None else cached_grad
    q_new = phase.q + eta * phase.p - 0.5 * eta * eta * grad0
    if not np.all(np.isfinite(q_new)):
        raise DivergenceError("leapfrog position diverged")
    grad1 = target.gradient(q_new)
    p_new = phase.p - 0.5 * eta * (grad0 + grad1)
    if not np.all(np.isfinite(p_new)):
        raise DivergenceError("leapfrog momentum diverged")
    return PhasePoint(q_new, p_new), grad1


def leapfrog_trajectory(target: TargetModel, start: PhasePoint, eta: float,
                        T: float, counter: GradEvalCounter | None = None) -> TrajectoryResult:
    """Integrate for ``floor(T / eta)`` leapfrog steps with gradient caching."""
    steps = n_leapfrog_steps(T, eta)
    energy0 = hamiltonian(target, start)

    q = start.q.copy()
    p = start.p.copy()
    half_eta = 0.5 * eta
    half_eta_sq = 0.5 * eta * eta
    grad = target.gradient(q)
    evals = 1
    for j in range(steps):
        q = q + eta * p - half_eta_sq * grad
        if not np.all(np.isfinite(q)):
            raise DivergenceError("trajectory diverged", inner_step=j)
        grad_new = target.gradient(q)
        p = p - half_eta * (grad + grad_new)
        if not np.all(np.isfinite(p)):
            raise DivergenceError("trajectory diverged", inner_step=j)
        grad = grad_new
    evals += steps
    if counter is not None:
        counter.add(evals)

    end = PhasePoint(q, p)
    drift = abs(hamiltonian(target, end) - energy0)
    return TrajectoryResult(end=end, grad_evals=evals, energy_drift=drift,
                            n_steps=steps)


def _eigensystem(precision):
    if isinstance(precision, GaussianTarget):
        return precision.eigensystem()
    A = np.atleast_2d(np.asarray(precision, dtype=float))
    evals, evecs = np.linalg.eigh(A)
    if np.min(evals) <= 0.0:
        raise InvalidInputError("precision must be positive definite")
    return evals, evecs


def exact_gaussian_flow(precision, start: PhasePoint, t: float) -> PhasePoint:
    """Closed-form Hamiltonian flow for a quadratic potential.

    In the eigenbasis of the precision matrix each coordinate is a harmonic
    oscillator with angular frequency ``sqrt(lambda)``.  Passing a
    :class:`GaussianTarget` reuses its cached eigendecomposition
    (``evecs is None`` marks a diagonal precision, where no basis change is
    needed).
    """
    evals, evecs = _eigensystem(precision)
    freq = np.sqrt(evals)
    qt = start.q if evecs is None else evecs.T @ start.q
    pt = start.p if evecs is None else evecs.T @ start.p
    c = np.cos(freq * t)
    s = np.sin(freq * t)
    q_new = qt * c + pt * s / freq
    p_new = pt * c - qt * freq * s
    if evecs is not None:
        q_new = evecs @ q_new
        p_new = evecs @ p_new
    return PhasePoint(q_new, p_new)
