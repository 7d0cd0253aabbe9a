"""Target distributions, synthetic data generation, and start-point construction.

A target is a potential ``U`` on R^d together with its exact gradient and,
when cheap enough, a dense Hessian.  Samplers only ever call ``potential``
and ``gradient``; the Hessian exists for regularity auditing on small
problems.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, InvalidInputError, UnsupportedOperationError
from .seeding import rng_from

__all__ = [
    "TargetModel",
    "GaussianTarget",
    "LogisticTarget",
    "RegularityConstants",
    "Dataset",
    "gen_synthetic",
    "cold_start",
    "save_dataset",
    "load_dataset",
    "DATASET_HEADER_PREFIX",
]


@dataclass
class RegularityConstants:
    """Curvature and tail constants of a target.

    ``m``/``M`` are the strong-convexity and gradient-Lipschitz constants,
    ``L_inf`` the directional Hessian-Lipschitz constant measured in the
    seminorm of the target's bad directions, and ``b`` the additive offset
    of the directional gradient envelope (``None`` when the prior is not a
    scalar multiple of the identity, in which case no such offset is
    available).
    """

    m: float
    M: float
    L_inf: float = 0.0
    b: float | None = None
    kappa: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.m <= self.M):
            raise InvalidInputError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        if self.L_inf < 0.0:
            raise InvalidInputError("L_inf must be non-negative")
        if self.b is not None and self.b < 0.0:
            raise InvalidInputError("b must be non-negative")
        self.kappa = self.M / self.m


class TargetModel:
    """Base class for potentials.

    Subclasses implement :meth:`potential` and :meth:`gradient`; the
    gradient must be the exact derivative of the potential (tests verify
    this with finite differences).  Evaluation is read-only after
    construction and safe to call from concurrent chains; gradient
    counters are owned by callers.
    """

    def __init__(self, dim, has_dense_hessian=False, has_exact_flow=False,
                 known_constants=None):
        if dim < 1:
            raise InvalidInputError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.has_dense_hessian = bool(has_dense_hessian)
        self.has_exact_flow = bool(has_exact_flow)
        self.known_constants = known_constants

    def _check_point(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise InvalidInputError(
                f"point has shape {q.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(q)):
            raise InvalidInputError("point has non-finite components")
        return q

    def potential(self, q) -> float:
        raise NotImplementedError

    def gradient(self, q) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, q) -> np.ndarray:
        raise UnsupportedOperationError(
            f"{type(self).__name__} does not provide a dense Hessian")


class GaussianTarget(TargetModel):
    """Quadratic potential ``U(q) = q' A q / 2`` for an SPD precision ``A``.

    Supports closed-form Hamiltonian flow, which makes it the test bed for
    integrator accuracy and for the idealized chain.
    """

    def __init__(self, precision):
        A = np.atleast_2d(np.asarray(precision, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"precision must be square, got {A.shape}")
        scale = np.max(np.abs(A))
        if scale == 0.0 or np.max(np.abs(A - A.T)) > 1e-12 * scale:
            raise InvalidInputError("precision must be symmetric (1e-12 relative)")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise InvalidInputError("precision must be positive definite") from None
        super().__init__(dim=A.shape[0], has_dense_hessian=True, has_exact_flow=True)
        self.precision = A
        diag = np.diag(A)
        self._diag = diag if np.count_nonzero(A - np.diag(diag)) == 0 else None
        self._eig = None

    @classmethod
    def standard(cls, dim):
        return cls(np.eye(dim))

    def eigensystem(self):
        """Cached ``(eigenvalues, eigenvectors)`` of the precision matrix.

        For a diagonal precision the eigenvectors are the identity and are
        returned as ``None`` so downstream code can skip the basis change.
        """
        if self._eig is None:
            if self._diag is not None:
                self._eig = (self._diag.copy(), None)
            else:
                evals, evecs = np.linalg.eigh(self.precision)
                self._eig = (evals, evecs)
        return self._eig

    def potential(self, q) -> float:
        q = self._check_point(q)
        if self._diag is not None:
            return 0.5 * float(q @ (self._diag * q))
        return 0.5 * float(q @ (self.precision @ q))

    def gradient(self, q) -> np.ndarray:
        q = self._check_point(q)
        if self._diag is not None:
            return self._diag * q
        return self.precision @ q

    def hessian(self, q) -> np.ndarray:
        self._check_point(q)
        return self.precision.copy()


class LogisticTarget(TargetModel):
    """Ridge-regularized logistic-regression posterior potential.

    ``U(t) = t' P t / 2 - sum_i [y_i log F(t'x_i) + (1-y_i) log F(-t'x_i)]``
    with ``F`` the logistic function and ``P`` the prior precision.  The log
    of ``F`` is evaluated through ``logaddexp`` so scores beyond +-700 do
    not overflow.
    """

    def __init__(self, X, Y, prior_precision=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidInputError(f"X must be a non-empty r x d matrix, got {X.shape}")
        Y = np.asarray(Y)
        if Y.shape != (X.shape[0],):
            raise InvalidInputError(
                f"Y has shape {Y.shape}, expected ({X.shape[0]},)")
        if not np.all((Y == 0) | (Y == 1)):
            raise InvalidInputError("labels must lie in {0, 1}")
        r, d = X.shape

        if prior_precision is None:
            prior_precision = np.eye(d)
        P = np.asarray(prior_precision, dtype=float)
        if P.ndim == 0:
            P = np.eye(d) * float(P)
        elif P.ndim == 1:
            if P.shape != (d,):
                raise InvalidInputError("diagonal prior precision has wrong length")
            P = np.diag(P)
        if P.shape != (d, d):
            raise InvalidInputError(f"prior precision must be {d}x{d}, got {P.shape}")
        if np.max(np.abs(P - P.T)) > 1e-12 * max(np.max(np.abs(P)), 1e-300):
            raise InvalidInputError("prior precision must be symmetric")
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise InvalidInputError("prior precision must be positive definite") from None

        super().__init__(dim=d, has_dense_hessian=True)
        self.X = X
        self.Y = Y.astype(float)
        self.prior_precision = P
        # Diagonal fast path: the common case is a (scaled) identity prior.
        diag = np.diag(P)
        self._prior_diag = diag if np.count_nonzero(P - np.diag(diag)) == 0 else None

    @property
    def n_data(self) -> int:
        return self.X.shape[0]

    def _prior_matvec(self, q):
        if self._prior_diag is not None:
            return self._prior_diag * q
        return self.prior_precision @ q

    def potential(self, q) -> float:
        q = self._check_point(q)
        s = self.X @ q
        # -log F(s) = logaddexp(0, -s); -log F(-s) = logaddexp(0, s)
        nll = self.Y @ np.logaddexp(0.0, -s) + (1.0 - self.Y) @ np.logaddexp(0.0, s)
        return 0.5 * float(q @ self._prior_matvec(q)) + float(nll)

    def gradient(self, q) -> np.ndarray:
        q = self._check_point(q)
        s = self.X @ q
        return self._prior_matvec(q) - self.X.T @ (self.Y - expit(s))

    def hessian(self, q) -> np.ndarray:
        q = self._check_point(q)
        s = self.X @ q
        w = expit(s) * expit(-s)  # F'(s) = F(s) (1 - F(s))
        return self.prior_precision + (self.X * w[:, None]).T @ self.X

    def sigmoid_weights(self, q) -> np.ndarray:
        """``F'(x_i' q)`` per datum; the data-dependent Hessian weights."""
        s = self.X @ np.asarray(q, dtype=float)
        return expit(s) * expit(-s)


@dataclass
class Dataset:
    """Design matrix ``X`` (rows of unit norm when synthetic), binary labels
    ``Y``, and the generating coefficient vector when known."""

    X: np.ndarray
    Y: np.ndarray
    beta_true: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def gen_synthetic(d: int, r: int, seed: int) -> Dataset:
    """Synthetic logistic-regression data.

    Rows are ``Z_i / ||Z_i||`` for ``Z_i ~ N(0, I_d)``, the coefficient
    vector is ``W / ||W||`` for ``W ~ N(0, I_d)``, and labels are Bernoulli
    with success probability ``F(beta' x_i)``.  Pure function of
    ``(d, r, seed)``; the draw order is ``Z``, then ``W``, then the label
    uniforms.
    """
    if d < 1 or r < 1:
        raise InvalidInputError(f"need d >= 1 and r >= 1, got d={d}, r={r}")
    rng = rng_from(seed)
    Z = rng.standard_normal((r, d))
    X = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    W = rng.standard_normal(d)
    beta = W / np.linalg.norm(W)
    probs = expit(X @ beta)
    Y = (rng.random(r) < probs).astype(int)
    return Dataset(X=X, Y=Y, beta_true=beta)


def cold_start(target: TargetModel, tol: float = 1e-8,
               max_iter: int = 100_000) -> np.ndarray:
    """Minimizer of the potential, found by gradient descent.

    Uses Armijo backtracking (initial step ``1/M`` when the target knows its
    gradient-Lipschitz constant, else 1.0; shrink factor 0.5,
    sufficient-decrease 1e-4).  Raises :class:`ConvergenceError` carrying
    the last iterate if the gradient norm does not reach ``tol`` within
    ``max_iter`` iterations.
    """
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    constants = target.known_constants
    step0 = 1.0 / constants.M if constants is not None else 1.0

    q = np.zeros(target.dim)
    value = target.potential(q)
    grad = target.gradient(q)
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return q
        step = step0
        gsq = gnorm * gnorm
        while True:
            candidate = q - step * grad
            cand_value = target.potential(candidate)
            if cand_value <= value - 1e-4 * step * gsq:
                break
            step *= 0.5
            if step < 1e-300:
                raise ConvergenceError(
                    "line search underflow", last_iterate=q, grad_norm=gnorm)
        q, value = candidate, cand_value
        grad = target.gradient(q)
    raise ConvergenceError(
        f"gradient norm {np.linalg.norm(grad):.3e} > tol after {max_iter} iterations",
        last_iterate=q, grad_norm=float(np.linalg.norm(grad)))


DATASET_HEADER_PREFIX = "f"


def save_dataset(path, dataset: Dataset) -> None:
    """Write a dataset as CSV with header ``f1,...,fd,y`` (UTF-8, LF)."""
    d = dataset.dim
    header = ",".join(f"{DATASET_HEADER_PREFIX}{j + 1}" for j in range(d)) + ",y"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row, label in zip(dataset.X, dataset.Y):
            fields = [format(v, ".17g") for v in row]
            fields.append(str(int(label)))
            fh.write(",".join(fields) + "\n")


def load_dataset(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`.

    Validates the column count against the header and requires labels in
    {0, 1}.  ``beta_true`` is not stored in the file and comes back as
    ``None``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        columns = header.split(",")
        if len(columns) < 2 or columns[-1] != "y":
            raise InvalidInputError(f"bad dataset header: {header!r}")
        d = len(columns) - 1
        rows, labels = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != d + 1:
                raise InvalidInputError(
                    f"line {lineno}: expected {d + 1} columns, got {len(fields)}")
            values = [float(v) for v in fields]
            label = values[-1]
            if label not in (0.0, 1.0):
                raise InvalidInputError(f"line {lineno}: label {label} not in {{0,1}}")
            rows.append(values[:-1])
            labels.append(int(label))
    if not rows:
        raise InvalidInputError("dataset file has no data rows")
    return Dataset(X=np.asarray(rows), Y=np.asarray(labels))
