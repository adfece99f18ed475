"""Numerical kernels: principal-branch Lambert W, central-cut ellipsoid method, bisection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

INV_E = math.exp(-1.0)
BRANCH_POINT = -INV_E


class EllipsoidError(RuntimeError):
    pass


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function, W0(x) for x >= -1/e.

    Initial guess from the branch-point series, the Taylor series at zero or the
    log asymptotics, then Halley iterations on ``w e^w - x``.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("lambert_w0 of NaN")
    if x < BRANCH_POINT:
        # Allow a couple of ulps of slack for arguments computed as -exp(-1).
        if x < BRANCH_POINT - 4 * np.finfo(float).eps:
            raise ValueError(f"lambert_w0 defined for x >= -1/e, got {x}")
        return -1.0
    if x == 0.0:
        return 0.0
    if x == math.inf:
        return math.inf

    if x < -0.32:
        p2 = 2.0 * (math.e * x + 1.0)
        if p2 <= 0.0:
            return -1.0
        p = math.sqrt(p2)
        w = -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p2 * p
    elif x < 0.5:
        w = x * (1.0 - x * (1.0 - 1.5 * x))
    elif x < 3.0:
        w = 0.5 * math.log1p(x) + 0.2 * (x - 0.5)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    scale = max(1.0, abs(x))
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-15 * scale:
            break
        wp1 = w + 1.0
        if wp1 <= 0.0:
            w = -1.0 + 1e-12
            continue
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w_new = w - step
        if w_new < -1.0:
            w_new = 0.5 * (w - 1.0)
        if w_new == w:
            break
        w = w_new
    return w


@dataclass
class EllipsoidState:
    """Ellipsoid {x : (x - c)^T P^{-1} (x - c) <= 1} plus best-seen bookkeeping.

    ``lower_bound`` is the tightest certified lower bound on the minimum over the
    initial ellipsoid collected from objective cuts.
    """

    center: np.ndarray
    shape: np.ndarray
    iterations: int = 0
    best_value: float = math.inf
    best_point: np.ndarray | None = None
    lower_bound: float = -math.inf
    reconditions: int = 0

    @classmethod
    def ball(cls, center, radius: float) -> "EllipsoidState":
        c = np.array(center, dtype=float).reshape(-1)
        if not radius > 0:
            raise ValueError("radius must be positive")
        return cls(center=c, shape=np.eye(c.size) * radius**2)

    @property
    def n(self) -> int:
        return self.center.size

    def logdet(self) -> float:
        sign, val = np.linalg.slogdet(self.shape)
        return val if sign > 0 else -math.inf

    def gap(self) -> float:
        return self.best_value - self.lower_bound

    def record(self, value: float, subgradient) -> None:
        """Register an objective evaluation at the current center, then cut."""
        g = np.asarray(subgradient, dtype=float)
        if not math.isfinite(value) or not np.all(np.isfinite(g)):
            raise EllipsoidError(f"non-finite oracle output at {self.center}: value={value}, g={g}")
        if value < self.best_value:
            self.best_value = value
            self.best_point = self.center.copy()
        width = math.sqrt(max(float(g @ self.shape @ g), 0.0))
        self.lower_bound = max(self.lower_bound, value - width)
        if width > 0:
            self.cut(g)

    def cut(self, g) -> None:
        """Central cut keeping the half-space {x : g . (x - center) <= 0}."""
        g = np.asarray(g, dtype=float)
        n = self.n
        P = self.shape
        Pg = P @ g
        gPg = float(g @ Pg)
        if not math.isfinite(gPg) or gPg <= 0:
            self._recondition()
            P = self.shape
            Pg = P @ g
            gPg = float(g @ Pg)
            if not math.isfinite(gPg) or gPg <= 0:
                raise EllipsoidError("shape matrix lost positive definiteness")
        if n == 1:
            self.center = self.center - 0.5 * Pg / math.sqrt(gPg)
            self.shape = P / 4.0
        else:
            b = Pg / math.sqrt(gPg)
            self.center = self.center - b / (n + 1)
            P = (n * n / (n * n - 1.0)) * (P - (2.0 / (n + 1)) * np.outer(b, b))
            self.shape = 0.5 * (P + P.T)
        self.iterations += 1

    def _recondition(self) -> None:
        self.reconditions += 1
        if self.reconditions > 3:
            raise EllipsoidError("repeated loss of positive definiteness")
        vals, vecs = np.linalg.eigh(0.5 * (self.shape + self.shape.T))
        top = max(float(vals.max()), np.finfo(float).tiny)
        vals = np.maximum(vals, 1e-14 * top)
        self.shape = (vecs * vals) @ vecs.T


@dataclass
class EllipsoidResult:
    point: np.ndarray
    value: float
    lower_bound: float
    iterations: int
    converged: bool
    state: EllipsoidState


def ellipsoid_optimize(
    oracle: Callable[[np.ndarray], tuple[float, np.ndarray]],
    center0,
    radius0: float,
    tol: float = 1e-8,
    max_iter: int | None = None,
    constraint: Callable[[np.ndarray], np.ndarray | None] | None = None,
) -> EllipsoidResult:
    """Minimize a convex function given by a value/subgradient oracle.

    ``constraint(x)`` returns None when x is admissible, otherwise the gradient of
    a violated convex constraint, which is used as a feasibility cut. The initial
    ball must contain a minimizer; that is the caller's job. Stops once the cut
    bound certifies ``best - min <= tol`` or after ``500 n^2`` iterations.
    """
    state = EllipsoidState.ball(center0, radius0)
    n = state.n
    if max_iter is None:
        max_iter = 500 * n * n
    converged = False
    while state.iterations < max_iter:
        x = state.center
        if constraint is not None:
            g = constraint(x)
            if g is not None:
                state.cut(g)
                continue
        value, g = oracle(x)
        g = np.asarray(g, dtype=float)
        if np.all(g == 0):
            state.record(value, g)
            state.lower_bound = value
            converged = True
            break
        state.record(value, g)
        if state.gap() <= tol:
            converged = True
            break
    if state.best_point is None:
        raise EllipsoidError("no admissible point visited")
    return EllipsoidResult(
        point=state.best_point,
        value=state.best_value,
        lower_bound=state.lower_bound,
        iterations=state.iterations,
        converged=converged,
        state=state,
    )


def bisection_steps(lo: float, hi: float, delta: float) -> int:
    """Halvings needed to bring ``hi - lo`` down to at most ``delta``."""
    width = hi - lo
    if width <= delta:
        return 0
    return math.ceil(math.log2(width / delta))


def bisection(predicate: Callable[[float], bool], lo: float, hi: float, delta: float) -> float:
    """Largest r (to within delta) with ``predicate(r)`` true, for a monotone predicate.

    ``predicate(lo)`` must hold. ``hi`` is treated as an exclusive upper bound and
    is never evaluated. Runs exactly :func:`bisection_steps` halvings.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not predicate(lo):
        raise ValueError(f"predicate false at lower endpoint lo={lo}")
    for _ in range(bisection_steps(lo, hi, delta)):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


def project_simplex(y, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total} (sort-based)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)
