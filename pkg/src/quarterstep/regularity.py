"""Regularity auditing and theory-driven parameter planning.

The auditing side measures how fast the Hessian of a target changes: the
classical Euclidean ratio

    ||(H_y - H_x) v||_2 / (||y - x||_2 ||v||_2)

and the direction-set ratio

    ||(H_y - H_x) v||_2 / (sqrt(r) ||y - x||_u ||v||_u)

where ``||.||_u`` is the max absolute projection on r unit directions.
Both suprema are estimated from below by derivative-free coordinate hill
climbing (the supremum may be unattained, so the estimates are documented
lower bounds).  For logistic targets the direction-set constant is also
bounded above in closed form by the square root of the data incoherence.

The planning side evaluates the closed-form tuning rules for unadjusted
leapfrog HMC: trajectory time, step size, mixing horizon, contraction rate
per step, and the implied gradient-evaluation budget.  Asymptotic constants
hidden in the source formulas are exposed as a single multiplier
``c_plan``.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .dynamics import DirectionSet
from .errors import FormulaDomainError, InvalidInputError, QuarterstepError
from .models import LogisticTarget, RegularityConstants, TargetModel, gen_synthetic
from .seeding import derive_seed, rng_from

__all__ = [
    "incoherence",
    "logistic_constants",
    "estimate_L2",
    "estimate_Linf",
    "RegularityReport",
    "audit_logistic",
    "Figure3Row",
    "figure3_experiment",
    "TheoryPlan",
    "plan_parameters",
    "thm_main_eta",
    "warm_epsilon1",
    "warm_epsilon2",
    "inner_timepoints_overestimate",
]

HILL_CLIMB_ITERS = 200
HILL_CLIMB_SHRINK = 0.9
_DEGENERATE = 1e-12


def incoherence(X, normalize_left: bool = False) -> float:
    """``max_i sum_j |x_i . x_j|`` over the rows of ``X`` (diagonal included).

    With ``normalize_left`` the left factor of each inner product is the
    unit-normalized row, which is the variant entering the gradient-envelope
    offset.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidInputError("X must be a non-empty r x d matrix")
    G = np.abs(X @ X.T)
    if normalize_left:
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise InvalidInputError("normalize_left requires non-zero rows")
        G = G / norms[:, None]
    return float(np.max(G.sum(axis=1)))


def _is_scalar_identity(P: np.ndarray) -> bool:
    diag = np.diag(P)
    mean = float(diag.mean())
    if mean <= 0.0:
        return False
    off = P - np.diag(diag)
    return (np.max(np.abs(off)) <= 1e-10 * mean
            and np.max(np.abs(diag - mean)) <= 1e-10 * mean)


def logistic_constants(target: LogisticTarget) -> RegularityConstants:
    """Closed-form curvature constants of a logistic target.

    ``m`` is the smallest prior-precision eigenvalue, ``M`` the largest
    eigenvalue of prior precision plus the Gram sum of the data, and the
    direction-set Hessian constant is the square root of the data
    incoherence.  The tail offset ``b`` (twice the left-normalized
    incoherence) exists only when the prior precision is a scalar multiple
    of the identity; otherwise it is reported absent.
    """
    X = target.X
    P = target.prior_precision
    m = float(np.linalg.eigvalsh(P)[0])
    M = float(np.linalg.eigvalsh(P + X.T @ X)[-1])
    L_inf = math.sqrt(incoherence(X))
    b = 2.0 * incoherence(X, normalize_left=True) if _is_scalar_identity(P) else None
    return RegularityConstants(m=m, M=M, L_inf=L_inf, b=b)


# ---------------------------------------------------------------------------
# Hessian-change ratio estimation
# ---------------------------------------------------------------------------


class _DenseRatio:
    """Ratio evaluation through dense Hessians (generic targets, small d)."""

    def __init__(self, target: TargetModel, dirs: DirectionSet | None):
        self.target = target
        self.dirs = dirs
        self.d = target.dim
        self.sqrt_r = math.sqrt(len(dirs)) if dirs is not None else 1.0

    def _denominator(self, x, y, v):
        if self.dirs is None:
            return float(np.linalg.norm(y - x) * np.linalg.norm(v))
        U = self.dirs.vectors
        return self.sqrt_r * float(np.max(np.abs(U @ (y - x))) * np.max(np.abs(U @ v)))

    def evaluate(self, x, y, v, hx=None, hy=None):
        den = self._denominator(x, y, v)
        if den < _DEGENERATE:
            return -np.inf
        hx = self.target.hessian(x) if hx is None else hx
        hy = self.target.hessian(y) if hy is None else hy
        return float(np.linalg.norm((hy - hx) @ v)) / den

    def climb(self, rng, iters):
        d = self.d
        x = rng.standard_normal(d)
        y = rng.standard_normal(d)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        hx = self.target.hessian(x)
        hy = self.target.hessian(y)
        cur = self.evaluate(x, y, v, hx, hy)
        best = max(cur, 0.0)
        for it in range(iters):
            h = HILL_CLIMB_SHRINK ** it
            for block in (0, 1, 2):
                block_best, move = -np.inf, None
                for j in range(d):
                    for sign in (1.0, -1.0):
                        if block == 0:
                            xx = x.copy(); xx[j] += sign * h
                            val = self.evaluate(xx, y, v, None, hy)
                        elif block == 1:
                            yy = y.copy(); yy[j] += sign * h
                            val = self.evaluate(x, yy, v, hx, None)
                        else:
                            vv = v.copy(); vv[j] += sign * h
                            val = self.evaluate(x, y, vv, hx, hy)
                        if val > block_best:
                            block_best, move = val, (j, sign)
                best = max(best, block_best)
                if move is not None and block_best > cur:
                    j, sign = move
                    if block == 0:
                        x[j] += sign * h
                        hx = self.target.hessian(x)
                    elif block == 1:
                        y[j] += sign * h
                        hy = self.target.hessian(y)
                    else:
                        v[j] += sign * h
                    cur = block_best
        return best


class _LogisticRatio:
    """Vectorized ratio evaluation for logistic targets.

    Uses ``(H_y - H_x) v = X' [(F'(Xy) - F'(Xx)) * (Xv)]`` so a full
    coordinate sweep costs a handful of matrix products instead of
    thousands of Hessian rebuilds.  Each iteration applies the best
    improving single-coordinate move per block of (x, y, v).
    """

    def __init__(self, target: LogisticTarget, dirs: DirectionSet | None):
        self.X = target.X
        self.dirs = dirs
        self.d = target.dim
        self.U = dirs.vectors if dirs is not None else None
        self.sqrt_r = math.sqrt(len(dirs)) if dirs is not None else 1.0

    @staticmethod
    def _fprime(s):
        return expit(s) * expit(-s)

    def _numerator_base(self, wx, wy, sv):
        return self.X.T @ ((wy - wx) * sv)

    def _den_l2(self, diff_sq, v_sq):
        den = math.sqrt(max(diff_sq, 0.0)) * math.sqrt(max(v_sq, 0.0))
        return den

    def evaluate_state(self, state):
        num = float(np.linalg.norm(self._numerator_base(state["wx"], state["wy"],
                                                        state["sv"])))
        if self.dirs is None:
            den = self._den_l2(state["diff_sq"], state["v_sq"])
        else:
            den = self.sqrt_r * float(np.max(np.abs(state["u_diff"]))
                                      * np.max(np.abs(state["u_v"])))
        return num / den if den >= _DEGENERATE else -np.inf

    def init_state(self, rng):
        d = self.d
        x = rng.standard_normal(d)
        y = rng.standard_normal(d)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        return self.make_state(x, y, v)

    def make_state(self, x, y, v):
        X = self.X
        state = {
            "x": x, "y": y, "v": v,
            "sx": X @ x, "sy": X @ y, "sv": X @ v,
        }
        state["wx"] = self._fprime(state["sx"])
        state["wy"] = self._fprime(state["sy"])
        if self.dirs is None:
            diff = y - x
            state["diff_sq"] = float(diff @ diff)
            state["v_sq"] = float(v @ v)
        else:
            state["u_diff"] = self.U @ (y - x)
            state["u_v"] = self.U @ v
        return state

    def _den_candidates(self, state, h, block):
        """Denominators for all +h and -h single-coordinate moves."""
        if self.dirs is None:
            if block == "v":
                v = state["v"]
                base = state["v_sq"]
                plus = base + 2.0 * h * v + h * h
                minus = base - 2.0 * h * v + h * h
                other = math.sqrt(max(state["diff_sq"], 0.0))
                return other * np.sqrt(np.maximum(plus, 0.0)), \
                    other * np.sqrt(np.maximum(minus, 0.0))
            diff = state["y"] - state["x"]
            base = state["diff_sq"]
            sign = 1.0 if block == "y" else -1.0  # moving x by +h shifts diff by -h
            plus = base + sign * 2.0 * h * diff + h * h
            minus = base - sign * 2.0 * h * diff + h * h
            other = math.sqrt(max(state["v_sq"], 0.0))
            return other * np.sqrt(np.maximum(plus, 0.0)), \
                other * np.sqrt(np.maximum(minus, 0.0))

        U = self.U
        if block == "v":
            base = state["u_v"]
            plus = np.max(np.abs(base[:, None] + h * U), axis=0)
            minus = np.max(np.abs(base[:, None] - h * U), axis=0)
            other = float(np.max(np.abs(state["u_diff"])))
        else:
            base = state["u_diff"]
            sign = 1.0 if block == "y" else -1.0
            plus = np.max(np.abs(base[:, None] + sign * h * U), axis=0)
            minus = np.max(np.abs(base[:, None] - sign * h * U), axis=0)
            other = float(np.max(np.abs(state["u_v"])))
        return self.sqrt_r * other * plus, self.sqrt_r * other * minus

    def _num_candidates(self, state, h, block):
        """Numerator norms for all +h and -h single-coordinate moves."""
        X = self.X
        sv = state["sv"]
        if block == "v":
            w = state["wy"] - state["wx"]
            base = X.T @ (w * sv)
            G = X.T @ (w[:, None] * X)
            colsq = np.einsum("ij,ij->j", G, G)
            dot = base @ G
            base_sq = float(base @ base)
            plus = np.sqrt(np.maximum(base_sq + 2.0 * h * dot + h * h * colsq, 0.0))
            minus = np.sqrt(np.maximum(base_sq - 2.0 * h * dot + h * h * colsq, 0.0))
            return plus, minus
        if block == "x":
            scores, w_other = state["sx"], state["wy"]
        else:
            scores, w_other = state["sy"], state["wx"]
        out = []
        for step in (h, -h):
            W = self._fprime(scores[:, None] + step * X)
            # weight vector is wy - wx: moving x gives wy - W, moving y gives W - wx
            diff_w = w_other[:, None] - W if block == "x" else W - w_other[:, None]
            N = X.T @ (diff_w * sv[:, None])
            out.append(np.sqrt(np.einsum("ij,ij->j", N, N)))
        return out[0], out[1]

    def _apply(self, state, block, j, sign, h):
        X = self.X
        step = sign * h
        if block == "x":
            state["x"][j] += step
            state["sx"] = state["sx"] + step * X[:, j]
            state["wx"] = self._fprime(state["sx"])
        elif block == "y":
            state["y"][j] += step
            state["sy"] = state["sy"] + step * X[:, j]
            state["wy"] = self._fprime(state["sy"])
        else:
            state["v"][j] += step
            state["sv"] = state["sv"] + step * X[:, j]
        if self.dirs is None:
            diff = state["y"] - state["x"]
            state["diff_sq"] = float(diff @ diff)
            state["v_sq"] = float(state["v"] @ state["v"])
        else:
            state["u_diff"] = self.U @ (state["y"] - state["x"])
            state["u_v"] = self.U @ state["v"]

    def _bulk_apply(self, state, block, signs, mask, h):
        X = self.X
        steps = np.where(mask, signs * h, 0.0)
        vec = state[block]
        vec += steps
        state["s" + block] = X @ vec
        if block == "x":
            state["wx"] = self._fprime(state["sx"])
        elif block == "y":
            state["wy"] = self._fprime(state["sy"])
        if self.dirs is None:
            diff = state["y"] - state["x"]
            state["diff_sq"] = float(diff @ diff)
            state["v_sq"] = float(state["v"] @ state["v"])
        else:
            state["u_diff"] = self.U @ (state["y"] - state["x"])
            state["u_v"] = self.U @ state["v"]

    def climb(self, rng, iters):
        state = self.init_state(rng)
        cur = self.evaluate_state(state)
        best = max(cur, 0.0)
        for it in range(iters):
            h = HILL_CLIMB_SHRINK ** it
            for block in ("x", "y", "v"):
                num_p, num_m = self._num_candidates(state, h, block)
                den_p, den_m = self._den_candidates(state, h, block)
                with np.errstate(divide="ignore", invalid="ignore"):
                    val_p = np.where(den_p >= _DEGENERATE, num_p / den_p, -np.inf)
                    val_m = np.where(den_m >= _DEGENERATE, num_m / den_m, -np.inf)
                signs = np.where(val_p >= val_m, 1.0, -1.0)
                vals = np.maximum(val_p, val_m)
                j = int(np.argmax(vals))
                single_best = float(vals[j])
                best = max(best, single_best)
                if single_best <= cur:
                    continue
                improving = vals > cur
                if np.count_nonzero(improving) > 1:
                    saved = (state[block].copy(), state["s" + block].copy())
                    self._bulk_apply(state, block, signs, improving, h)
                    bulk_val = self.evaluate_state(state)
                    best = max(best, bulk_val)
                    if bulk_val >= single_best:
                        cur = bulk_val
                        continue
                    # bulk moves interacted badly: revert, take the single best
                    state[block][:] = saved[0]
                    state["s" + block] = saved[1]
                    if block == "x":
                        state["wx"] = self._fprime(state["sx"])
                    elif block == "y":
                        state["wy"] = self._fprime(state["sy"])
                self._apply(state, block, j, float(signs[j]), h)
                cur = single_best
        return best


def _estimate_ratio(target: TargetModel, dirs: DirectionSet | None,
                    restarts: int, seed: int, iters: int) -> float:
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    if not target.has_dense_hessian:
        raise InvalidInputError("target does not expose a dense Hessian")
    if isinstance(target, LogisticTarget):
        problem = _LogisticRatio(target, dirs)
    else:
        problem = _DenseRatio(target, dirs)
    best = 0.0
    for k in range(restarts):
        rng = rng_from(seed, "restart", k)
        best = max(best, problem.climb(rng, iters))
    return best


def estimate_L2(target: TargetModel, restarts: int = 32, seed: int = 0,
                iters: int = HILL_CLIMB_ITERS) -> float:
    """Lower-bound estimate of the Euclidean Hessian-change constant.

    Coordinate-perturbation hill climbing over (x, y, v) with step schedule
    ``0.9^k`` from ``restarts`` random initializations (x, y standard
    normal, v uniform on the sphere); restart k uses the substream
    ``(seed, k)``, so the estimate is non-decreasing in ``restarts``.
    """
    return _estimate_ratio(target, None, restarts, seed, iters)


def estimate_Linf(target: TargetModel, dirs: DirectionSet, restarts: int = 32,
                  seed: int = 0, iters: int = HILL_CLIMB_ITERS) -> float:
    """Lower-bound estimate of the direction-set Hessian-change constant.

    Same search protocol as :func:`estimate_L2` with seminorm denominators
    (candidates whose seminorms fall below 1e-12 are skipped).
    """
    if dirs is None or len(dirs) == 0:
        raise InvalidInputError("estimate_Linf requires a non-empty direction set")
    return _estimate_ratio(target, dirs, restarts, seed, iters)


@dataclass
class RegularityReport:
    """Full audit of a logistic target's regularity constants."""

    incoherence: float
    incoherence_normalized: float
    m: float
    M: float
    b: float | None
    L_inf_bound: float
    L2_estimate: float
    L_inf_estimate: float
    directions: DirectionSet

    def to_json_dict(self) -> dict:
        return {
            "incoherence": self.incoherence,
            "incoherence_normalized": self.incoherence_normalized,
            "m": self.m,
            "M": self.M,
            "kappa": self.M / self.m,
            "b": self.b,
            "L_inf_bound": self.L_inf_bound,
            "L2_estimate": self.L2_estimate,
            "L_inf_estimate": self.L_inf_estimate,
            "n_directions": len(self.directions),
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def audit_logistic(target: LogisticTarget, restarts: int = 32,
                   seed: int = 0) -> RegularityReport:
    """Compute constants and ratio estimates for a logistic target, using
    the normalized data rows as the bad directions."""
    constants = logistic_constants(target)
    dirs = DirectionSet.from_rows(target.X)
    l2 = estimate_L2(target, restarts=restarts, seed=seed)
    linf = estimate_Linf(target, dirs, restarts=restarts, seed=seed)
    return RegularityReport(
        incoherence=incoherence(target.X),
        incoherence_normalized=incoherence(target.X, normalize_left=True),
        m=constants.m, M=constants.M, b=constants.b,
        L_inf_bound=constants.L_inf,
        L2_estimate=l2, L_inf_estimate=linf, directions=dirs)


@dataclass
class Figure3Row:
    d: int
    l2_estimate: float | None = None
    linf_estimate: float | None = None
    median_euclidean: float | None = None
    median_seminorm: float | None = None
    ratio: float | None = None
    error: str | None = None


def figure3_experiment(d_list, momenta_draws: int, seed: int,
                       restarts: int = 4, iters: int = HILL_CLIMB_ITERS) -> list:
    """Growth comparison of the two integrator-error predictors.

    For each dimension d (synthetic logistic data, r = d), estimates both
    Hessian-change constants and reports the medians over random momenta of
    ``sqrt(L2) ||p||_2`` and ``sqrt(Linf) r^(1/4) ||p||_u``, plus their
    ratio.  Estimation failures are recorded per row without aborting.
    """
    if momenta_draws < 1:
        raise InvalidInputError("momenta_draws must be >= 1")
    rows = []
    for d in d_list:
        d = int(d)
        if d < 2:
            raise InvalidInputError("each dimension must be >= 2")
        row = Figure3Row(d=d)
        try:
            data = gen_synthetic(d, d, derive_seed(seed, "data", d))
            target = LogisticTarget(data.X, data.Y, np.eye(d))
            dirs = DirectionSet.from_rows(data.X)
            l2 = estimate_L2(target, restarts=restarts,
                             seed=derive_seed(seed, "l2", d), iters=iters)
            linf = estimate_Linf(target, dirs, restarts=restarts,
                                 seed=derive_seed(seed, "linf", d), iters=iters)
            momenta = rng_from(seed, "momenta", d).standard_normal((momenta_draws, d))
            euclid = np.sqrt(l2) * np.linalg.norm(momenta, axis=1)
            semi = (np.sqrt(linf) * len(dirs) ** 0.25
                    * np.max(np.abs(momenta @ dirs.vectors.T), axis=1))
            row.l2_estimate = l2
            row.linf_estimate = linf
            row.median_euclidean = float(np.median(euclid))
            row.median_seminorm = float(np.median(semi))
            row.ratio = (row.median_euclidean / row.median_seminorm
                         if row.median_seminorm > 0.0 else math.inf)
        except QuarterstepError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def save_figure3_csv(rows, path) -> None:
    columns = ["d", "l2_estimate", "linf_estimate", "median_euclidean",
               "median_seminorm", "ratio", "error"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fields = [("" if getattr(row, c) is None else str(getattr(row, c)))
                      for c in columns]
            fh.write(",".join(fields) + "\n")


# ---------------------------------------------------------------------------
# Theory-driven parameter planning
# ---------------------------------------------------------------------------


@dataclass
class TheoryPlan:
    """Closed-form tuning output.

    ``I_mix`` is the mixing horizon (steps until the coupled distance falls
    below the accuracy target), ``Delta`` the per-step contraction exponent,
    ``R`` the high-probability radius of a stationary draw, and
    ``grad_budget = I_mix * ceil(T / eta)`` the implied total number of
    gradient evaluations.  ``c_plan`` is the explicit stand-in for the
    asymptotic constants the closed forms hide.
    """

    T: float
    eta: float
    i_max: int
    I_mix: int
    Delta: float
    R: float
    grad_budget: int
    start_kind: str
    omega: float | None
    c_plan: float
    inputs: dict

    def to_json_dict(self) -> dict:
        out = {k: v for k, v in vars(self).items()}
        return out

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def plan_parameters(constants: RegularityConstants, d: int, r: int, eps: float,
                    delta: float, start: str = "warm", c_plan: float = 1.0,
                    omega: float | None = None) -> TheoryPlan:
    """Evaluate the tuning formulas for unadjusted leapfrog HMC.

    ``T = 1 / (6 sqrt(M kappa))``, ``Delta = (sqrt(m) T)^2 / 8``,
    ``R = d + sqrt(4 d log(kappa) - 8 log(delta))``,
    ``I_mix = ceil(log(2R/eps) / Delta)``, ``i_max = ceil(c_plan/(m T^2))``,
    and the start-dependent step-size rule with the scaled constants
    ``L~ = L_inf / sqrt(M)`` and ``b~ = b / sqrt(M)``:

        warm: eta = c_plan * min(d^-1/4 k^-1.25, r^-1/4 L~^-1/2 k^-0.75)
                      * sqrt(eps/M) / sqrt(log(1/delta))
        cold: eta = c_plan * min(d^-1/4 k^-2,
                                 r^-1/4 L~^-1/2 / (k^2.75 + b~ k^1.75))
                      * sqrt(eps/M)

    A cold start requires the tail offset ``b``.
    """
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise InvalidInputError("eps and delta must lie in (0, 1)")
    if d < 1 or r < 1:
        raise InvalidInputError("d and r must be >= 1")
    if c_plan <= 0.0:
        raise InvalidInputError("c_plan must be positive")
    if start not in ("warm", "cold"):
        raise InvalidInputError(f"start must be 'warm' or 'cold', got {start!r}")

    m, M, kappa, L_inf = constants.m, constants.M, constants.kappa, constants.L_inf
    if kappa < 1.0:
        raise FormulaDomainError("condition number M/m must be >= 1")
    T = 1.0 / (6.0 * math.sqrt(M * kappa))
    Delta = (math.sqrt(m) * T) ** 2 / 8.0
    radicand = 4.0 * d * math.log(kappa) - 8.0 * math.log(delta)
    if radicand < 0.0:
        raise FormulaDomainError("radius radicand is negative")
    R = d + math.sqrt(radicand)
    I_mix = int(math.ceil(math.log(2.0 * R / eps) / Delta))

    L_tilde = L_inf / math.sqrt(M)
    scale = c_plan * math.sqrt(eps) / math.sqrt(M)
    term_d_inv = d ** (-0.25)
    if start == "warm":
        term_data = (r ** (-0.25) * L_tilde ** (-0.5) * kappa ** (-0.75)
                     if L_tilde > 0.0 else math.inf)
        eta = (scale * min(term_d_inv * kappa ** (-1.25), term_data)
               / math.sqrt(math.log(1.0 / delta)))
    else:
        if constants.b is None:
            raise InvalidInputError("cold-start planning requires the tail offset b")
        b_tilde = constants.b / math.sqrt(M)
        term_data = (r ** (-0.25) * L_tilde ** (-0.5)
                     / (kappa ** 2.75 + b_tilde * kappa ** 1.75)
                     if L_tilde > 0.0 else math.inf)
        eta = scale * min(term_d_inv * kappa ** (-2.0), term_data)

    i_max = int(math.ceil(c_plan / (m * T * T)))
    grad_budget = I_mix * int(math.ceil(T / eta))
    inputs = {"m": m, "M": M, "kappa": kappa, "L_inf": L_inf, "b": constants.b,
              "d": d, "r": r, "eps": eps, "delta": delta}
    return TheoryPlan(T=T, eta=eta, i_max=i_max, I_mix=I_mix, Delta=Delta, R=R,
                      grad_budget=grad_budget, start_kind=start, omega=omega,
                      c_plan=c_plan, inputs=inputs)


def thm_main_eta(eps: float, I_mix: int, M: float, T: float,
                 eps1: float, eps2: float) -> float:
    """Explicit step-size bound

        eta = sqrt( (eps / (800 I)) min(1, 1/sqrt(M))
                    / (T (eps1 + eps2 / sqrt(M)) e) )

    where ``eps1``/``eps2`` bound the per-step local integrator error in
    position and momentum (see :func:`warm_epsilon1` and
    :func:`warm_epsilon2` for the warm-start forms).
    """
    for name, value in (("eps", eps), ("I_mix", I_mix), ("M", M), ("T", T),
                        ("eps1", eps1), ("eps2", eps2)):
        if value <= 0:
            raise InvalidInputError(f"{name} must be positive")
    numerator = (eps / (800.0 * I_mix)) * min(1.0, 1.0 / math.sqrt(M))
    denominator = T * (eps1 + eps2 / math.sqrt(M)) * math.e
    return math.sqrt(numerator / denominator)


def warm_epsilon1(d: int, M: float, omega: float, I_mix: int, J: int,
                  delta: float) -> float:
    """Warm-start position-error coefficient
    ``(1/6) [81 sqrt(d) log(I J / delta) + 2 omega sqrt(M)] M``."""
    log_term = math.log(I_mix * J / delta)
    return (81.0 * math.sqrt(d) * log_term + 2.0 * omega * math.sqrt(M)) * M / 6.0


def warm_epsilon2(d: int, m: float, M: float, L_inf: float, r: int,
                  omega: float, I_mix: int, J: int, delta: float) -> float:
    """Warm-start momentum-error coefficient

        (1/3) [ M^2 (81 sqrt(d/m) log(I J / delta) + 2 omega)
                + L_inf (81 log(I J / delta) + 2 omega sqrt(M))^2 sqrt(r) ].

    The source display carries a spurious eta^3 factor (the coefficient
    multiplies eta^3 in the local error bound, and the step-size rule that
    consumes it would otherwise be circular); it is omitted here.
    """
    log_term = math.log(I_mix * J / delta)
    quad = M * M * (81.0 * math.sqrt(d / m) * log_term + 2.0 * omega)
    semi = L_inf * (81.0 * log_term + 2.0 * omega * math.sqrt(M)) ** 2 * math.sqrt(r)
    return (quad + semi) / 3.0


def inner_timepoints_overestimate(m: float, M: float, T: float, d: int,
                                  I_mix: int, delta: float) -> int:
    """Documented over-estimate of the trajectory grid count J used by the
    warm-start error coefficients:

        J = ceil( (M / sqrt(m)) sqrt(T 80^2 M d (1 + 1/m)) log(I 1e6 / delta) )

    (the self-referential log(J) is bounded by substituting J <= 1e6)."""
    value = (M / math.sqrt(m)) * math.sqrt(T * 80.0 ** 2 * M * d * (1.0 + 1.0 / m)) \
        * math.log(I_mix * 1e6 / delta)
    return int(math.ceil(value))
