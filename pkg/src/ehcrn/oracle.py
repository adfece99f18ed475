"""Reference solvers that never touch the dual machinery.

For fixed slot times the best energies are closed form (each hop spends as much
as both caps allow), which leaves a concave max-min over the time simplex. That
reduced problem is solved by brute force on a grid, by projected supergradient
ascent, or, when cvxpy is installed, as an exponential-cone program.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .model import LN2, Allocation, ChannelRealization, SolveResult, SystemParams, make_result
from .numerics import EllipsoidState, project_simplex

DEFAULT_RESOLUTION = {1: 200, 2: 200, 3: 60}
MIN_RESOLUTION = 10


def optimal_e_given_tau(tau, sys: SystemParams, chan: ChannelRealization) -> np.ndarray:
    """``e_k = min(xi P_t g_E,k sum_{i<k} tau_i, I_p tau_k / g_I,k)``; works row-wise on batches."""
    tau = np.asarray(tau, dtype=float)
    a = chan.energy_rates(sys)
    caps = chan.power_caps(sys)
    harvest = a * np.cumsum(tau, axis=-1)[..., :-1]
    with np.errstate(invalid="ignore"):
        cap = np.where(np.isfinite(caps), caps * tau[..., 1:], np.inf)
    return np.minimum(harvest, cap)


def _rates(tau, e, eta) -> np.ndarray:
    t = tau[..., 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = t * (np.log1p(e * eta / t) / LN2)
    return np.where(t > 0, r, 0.0)


def reduced_objective(tau, sys: SystemParams, chan: ChannelRealization):
    """End-to-end rate with the best energies for the given times (batched over leading axes)."""
    tau = np.asarray(tau, dtype=float)
    e = optimal_e_given_tau(tau, sys, chan)
    r = np.min(_rates(tau, e, chan.eta), axis=-1)
    return float(r) if r.ndim == 0 else r


def reduced_supergradient(tau, sys: SystemParams, chan: ChannelRealization) -> tuple[float, np.ndarray]:
    """Value and a supergradient of the reduced objective, taken on the lowest-index bottleneck hop."""
    tau = np.asarray(tau, dtype=float)
    a = chan.energy_rates(sys)
    caps = chan.power_caps(sys)
    eta = chan.eta
    e = optimal_e_given_tau(tau, sys, chan)
    rates = _rates(tau, e, eta)
    k = int(np.argmin(rates))
    g = np.zeros_like(tau)
    t = tau[k + 1]
    if t <= 0:
        g[k + 1] = 1.0  # rate grows without bound in relative terms; push time into the starved slot
        return float(rates[k]), g
    z = e[k] * eta[k] / t
    d_e = eta[k] / ((1.0 + z) * LN2)
    g[k + 1] = (math.log1p(z) - z / (1.0 + z)) / LN2
    if a[k] * tau[: k + 1].sum() <= caps[k] * t:
        g[: k + 1] += d_e * a[k]
    else:
        g[k + 1] += d_e * caps[k]
    return float(rates[k]), g


def _lattice(hops: int, n: int) -> np.ndarray:
    """All (i_1..i_K) with nonnegative integer entries summing to at most n."""
    idx = np.indices((n + 1,) * hops).reshape(hops, -1).T
    return idx[idx.sum(axis=1) <= n]


def _to_tau(free: np.ndarray, T: float) -> np.ndarray:
    tau = np.empty(free.shape[:-1] + (free.shape[-1] + 1,))
    tau[..., 1:] = free
    tau[..., 0] = T - free.sum(axis=-1)
    return tau


def _best(taus: np.ndarray, values: np.ndarray) -> int:
    """Argmax, ties broken toward the lexicographically smallest time vector."""
    top = values.max()
    cand = np.flatnonzero(values == top)
    if cand.size == 1:
        return int(cand[0])
    order = np.lexsort(taus[cand].T[::-1])
    return int(cand[order[0]])


def _grid_search(sys, chan, n: int, refine_tol: float) -> tuple[np.ndarray, float, int]:
    k = chan.hop_count
    T = sys.frame_duration
    h = T / n
    free = _lattice(k, n) * h
    taus = _to_tau(free, T)
    vals = reduced_objective(taus, sys, chan)
    i = _best(taus, vals)
    best_tau, best_val = taus[i], float(vals[i])
    passes = 0
    offsets = np.arange(-20, 21) / 10.0
    window = np.stack(np.meshgrid(*([offsets] * k), indexing="ij"), axis=-1).reshape(-1, k)
    while h > refine_tol * T:
        cand = best_tau[1:] + window * h
        cand = cand[np.all(cand >= 0, axis=1) & (cand.sum(axis=1) <= T)]
        taus = _to_tau(cand, T)
        vals = reduced_objective(taus, sys, chan)
        i = _best(taus, vals)
        if vals[i] > best_val:
            best_tau, best_val = taus[i], float(vals[i])
        h /= 10.0
        passes += 1
    return best_tau, best_val, passes


def _ellipsoid_polish(sys, chan, tau_start: np.ndarray, tol: float) -> tuple[np.ndarray, float, int]:
    """Central-cut ellipsoid ascent over the whole time simplex, centered on the grid incumbent.

    Lattice refinement can stall on the sharp ridges where two hop rates cross;
    a cutting-plane method does not, and concavity makes the result global.
    """
    k = chan.hop_count
    T = sys.frame_duration
    x0 = np.asarray(tau_start[1:], dtype=float)
    verts = np.vstack([np.zeros(k), T * np.eye(k)])
    radius = float(np.max(np.linalg.norm(verts - x0, axis=1))) * 1.01 + 1e-12 * T
    state = EllipsoidState.ball(x0, radius)
    best_tau, best_val = np.asarray(tau_start, dtype=float), reduced_objective(tau_start, sys, chan)
    max_iter = 500 * k * k
    while state.iterations < max_iter:
        x = state.center
        if np.any(x < 0):
            g = np.zeros(k)
            g[int(np.argmin(x))] = -1.0
            state.cut(g)
            continue
        if x.sum() > T:
            state.cut(np.ones(k))
            continue
        tau = _to_tau(x, T)
        val, g = reduced_supergradient(tau, sys, chan)
        if val > best_val:
            best_tau, best_val = tau, val
        g_free = g[1:] - g[0]
        if not np.any(g_free):
            break
        state.record(-val, -g_free)
        if -state.lower_bound - best_val <= tol * max(best_val, 1e-300):
            break
    return best_tau, best_val, state.iterations


def _projected_supergradient(sys, chan, iterations: int, tau0=None) -> tuple[np.ndarray, float, int]:
    k = chan.hop_count
    T = sys.frame_duration
    tau = np.full(k + 1, T / (k + 1)) if tau0 is None else np.asarray(tau0, dtype=float)
    best_tau, best_val = tau.copy(), reduced_objective(tau, sys, chan)
    step0 = 0.2 * T
    for t in range(1, iterations + 1):
        val, g = reduced_supergradient(tau, sys, chan)
        if val > best_val:
            best_tau, best_val = tau.copy(), val
        norm = float(np.linalg.norm(g))
        if norm == 0:
            break
        tau = project_simplex(tau + (step0 / math.sqrt(t)) * g / norm, T)
    val = reduced_objective(tau, sys, chan)
    if val > best_val:
        best_tau, best_val = tau, val
    return best_tau, best_val, iterations


def _conic(sys, chan) -> tuple[np.ndarray, float, int]:
    import cvxpy as cp

    k = chan.hop_count
    T = sys.frame_duration
    a = chan.energy_rates(sys)
    caps = chan.power_caps(sys)
    eta = chan.eta
    # rel_entr works in nats; the maximizer is unchanged.
    tau = cp.Variable(k + 1, nonneg=True)
    e = cp.Variable(k, nonneg=True)
    r = cp.Variable()
    cons = [cp.sum(tau) == T]
    for i in range(k):
        cons.append(e[i] <= a[i] * cp.sum(tau[: i + 1]))
        if math.isfinite(caps[i]):
            cons.append(e[i] <= caps[i] * tau[i + 1])
        cons.append(-cp.rel_entr(tau[i + 1], tau[i + 1] + eta[i] * e[i]) >= r)
    prob = cp.Problem(cp.Maximize(r), cons)
    prob.solve(solver=cp.CLARABEL)
    t = np.clip(np.asarray(tau.value, dtype=float), 0.0, None)
    t *= T / t.sum()
    return t, reduced_objective(t, sys, chan), 1


def oracle_solve(
    sys: SystemParams,
    chan: ChannelRealization,
    method: str = "grid",
    resolution: int | None = None,
    refine_tol: float = 1e-10,
    iterations: int = 20_000,
    polish: bool = True,
) -> SolveResult:
    """Maximize the reduced objective over the time simplex.

    ``grid``: every lattice point with spacing T/resolution, then repeated
    local passes at ten times the density around the incumbent until the
    spacing drops below ``refine_tol * T``, then (``polish=True``) a primal
    cutting-plane ascent seeded at the incumbent; K <= 3 only.
    ``projected-subgradient``: diminishing normalized steps, best iterate kept.
    ``conic``: exponential-cone reformulation solved with cvxpy.
    """
    k = chan.hop_count
    diag: dict = {"method": method}
    if method == "grid":
        if k > 3:
            raise ValueError("grid oracle supports K <= 3")
        n = resolution or DEFAULT_RESOLUTION[k]
        if n < MIN_RESOLUTION:
            warnings.warn(f"grid resolution {n} is below {MIN_RESOLUTION} points per axis", stacklevel=2)
            diag["coarse"] = True
        tau, val, passes = _grid_search(sys, chan, n, refine_tol)
        iters = passes
        if polish and k > 1:
            ptau, pval, cuts = _ellipsoid_polish(sys, chan, tau, refine_tol)
            if pval > val:
                tau = ptau
            iters += cuts
        diag.update(resolution=n, refine_passes=passes, grid_value=val)
    elif method == "projected-subgradient":
        tau, _, iters = _projected_supergradient(sys, chan, iterations)
    elif method == "conic":
        tau, _, iters = _conic(sys, chan)
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    alloc = Allocation(tau, optimal_e_given_tau(tau, sys, chan))
    return make_result(alloc, sys, chan, "oracle", iterations={"oracle": iters}, diagnostics=diag)
