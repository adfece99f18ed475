"""Joint optimal time and power allocation (JOTPA).

Three nested loops: bisection on the target end-to-end rate R, a feasibility test
that maximizes the dual function G(lambda) over the weight simplex with the
ellipsoid method, and for each weight vector the weighted-sum problem
``max sum_k lambda_k R_k`` solved through its energy-causality multipliers mu.

The weighted problem is handled two ways. ``mu_method="ellipsoid"`` minimizes
the dual G'(mu) with the ellipsoid method. ``mu_method="kkt"`` (default) solves
the stationarity system directly: once the time-slot values of the Lagrangian
all tie, the Lambert-W time update and the water-filling energy update give the
same power on every hop, which pins mu_1, mu_2, ... one hop at a time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import (
    LN2,
    Allocation,
    ChannelRealization,
    SolveResult,
    SystemParams,
    equal_throughput_allocation,
    harvested_energies,
    make_result,
)
from .numerics import EllipsoidState, ellipsoid_optimize, lambert_w0

MU_FLOOR = 1e-12
LAMBDA_FLOOR = 1e-12
BRANCH_GUARD = 1e-12
TIE_TOL = 1e-9


class DegenerateDualError(ValueError):
    """Raised when a dual point sits on the Lambert-W branch point."""


@dataclass(frozen=True)
class DualState:
    """Multipliers of the nested dual.

    ``lam`` weights the per-hop rate constraints, ``mu`` prices energy causality.
    The frame-length multiplier drops out of the dual function and is never
    formed; the frame is closed by assigning the leftover time to slot 0.
    """

    lam: np.ndarray
    mu: np.ndarray
    psi: np.ndarray

    @classmethod
    def make(cls, lam, mu, sys: SystemParams, chan: ChannelRealization) -> "DualState":
        lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
        mu = np.maximum(np.asarray(mu, dtype=float), MU_FLOOR)
        k = chan.hop_count
        if lam.shape != (k,) or mu.shape != (k,):
            raise ValueError(f"need {k} weights and multipliers")
        psi = np.array([psi_value(max(lam[i], LAMBDA_FLOOR), mu, sys, chan, i + 1) for i in range(k)])
        return cls(lam, mu, psi)


def psi_value(lambda_k: float, mu, sys: SystemParams, chan: ChannelRealization, k: int) -> float:
    """Lambert-W argument of hop k: ``-exp(-(ln2/lambda_k) xi P_t sum_{j<=k} mu_j g_E,j - 1)``."""
    if not lambda_k > 0:
        raise DegenerateDualError(f"weight of hop {k} must be positive, got {lambda_k}")
    mu = np.asarray(mu, dtype=float)
    s = sys.harvest_gain * float(np.dot(mu[:k], chan.g_e[:k]))
    return -math.exp(-(LN2 / lambda_k) * s - 1.0)


def tau_from_e(e, dual: DualState, sys: SystemParams, chan: ChannelRealization) -> np.ndarray:
    """Time update for fixed energies: Lambert-W closed form for hops, leftover to slot 0.

    Entries are clamped to ``[eps_tau, T]`` and the hop times are scaled down when
    they would overrun the frame.
    """
    e = np.asarray(e, dtype=float)
    T, eps = sys.frame_duration, sys.eps_tau
    k = chan.hop_count
    tau = np.empty(k + 1)
    for i in range(k):
        w = lambert_w0(dual.psi[i])
        if w + 1.0 < BRANCH_GUARD:
            raise DegenerateDualError(f"psi of hop {i + 1} at the branch point; raise the mu floor")
        tau[i + 1] = -e[i] * chan.eta[i] * w / (w + 1.0)
    tau[1:] = np.clip(tau[1:], eps, T)
    budget = T - eps
    s = tau[1:].sum()
    if s > budget:
        tau[1:] *= budget / s
    tau[0] = T - tau[1:].sum()
    return tau


def water_filling_power(dual: DualState, sys: SystemParams, chan: ChannelRealization) -> np.ndarray:
    """Power ``(lambda/(ln2 mu) - 1/eta)^+`` capped at the interference limit."""
    eta = chan.eta
    with np.errstate(divide="ignore"):
        p = dual.lam / (LN2 * dual.mu) - np.where(eta > 0, 1.0 / np.where(eta > 0, eta, 1.0), np.inf)
    return np.where(eta > 0, np.clip(p, 0.0, chan.power_caps(sys)), 0.0)


def e_from_tau(tau, dual: DualState, sys: SystemParams, chan: ChannelRealization) -> np.ndarray:
    """Energy update for fixed times: water-filling, interference cap and harvest budget."""
    tau = np.asarray(tau, dtype=float)
    budget = harvested_energies(sys, chan, tau)
    return np.minimum(water_filling_power(dual, sys, chan) * tau[1:], budget)


def slot_values(dual: DualState, sys: SystemParams, chan: ChannelRealization) -> tuple[np.ndarray, np.ndarray]:
    """Lagrangian value per unit time of each slot, with the optimal hop powers.

    Slot 0 is worth the price of all energy harvested in it; slot k is worth its
    weighted rate minus the energy it spends, plus the harvest it still provides
    to later hops. The dual function equals T times the largest slot value.
    """
    a = chan.energy_rates(sys)
    p = water_filling_power(dual, sys, chan)
    credit = np.concatenate([np.cumsum((dual.mu * a)[::-1])[::-1], [0.0]])  # sum_{j>i} mu_j a_j
    v = np.empty(chan.hop_count + 1)
    v[0] = credit[0]
    v[1:] = dual.lam * (np.log1p(p * chan.eta) / LN2) - dual.mu * p + credit[1:]
    return v, p


def _closure(powers, active, a, T: float) -> np.ndarray:
    """Times making energy causality bind on every active hop, filling the frame."""
    k = len(powers)
    t = np.zeros(k + 1)
    t[0] = 1.0
    acc = 1.0
    for i in range(k):
        if active[i] and powers[i] > 0:
            t[i + 1] = a[i] * acc / powers[i]
            acc += t[i + 1]
    return t * (T / acc)


@dataclass
class InnerResult:
    tau: np.ndarray
    e: np.ndarray
    iterations: int
    converged: bool


def _weighted_objective(tau, e, lam, eta) -> float:
    t = tau[1:]
    safe = np.where(t > 0, t, 1.0)
    return float(np.dot(lam, np.where(t > 0, t * (np.log1p(e * eta / safe) / LN2), 0.0)))


def inner_allocation(dual: DualState, sys: SystemParams, chan: ChannelRealization) -> InnerResult:
    """Primal-feasible time/energy pair for a fixed dual point.

    Starts from the allocation in which every slot tied for the largest
    Lagrangian value is used and energy causality binds on it, then alternates
    the energy update (:func:`e_from_tau`) with the Lambert-W time update
    (:func:`tau_from_e`). Where the interference cap or the time floor is active
    the closed-form time update does not apply and the hop keeps its time.
    The alternation only fixes each hop's power, so the frame scale is carried
    by slot 0. Returns the best iterate by weighted rate if it does not settle.
    """
    T, eps = sys.frame_duration, sys.eps_tau
    a = chan.energy_rates(sys)
    caps = chan.power_caps(sys)
    v, p = slot_values(dual, sys, chan)
    vmax = float(v.max())
    tied = v >= vmax - TIE_TOL * max(1.0, abs(vmax))
    active = tied[1:] & (p > 0)
    tau = _closure(p, active, a, T)
    tau[1:] = np.where(active, tau[1:], eps)
    tau[0] = T - tau[1:].sum()
    pinned = ~active | (p >= caps * (1 - 1e-12))

    best = None
    converged = False
    it = 0
    for it in range(1, sys.max_iter + 1):
        e = e_from_tau(tau, dual, sys, chan)
        score = _weighted_objective(tau, e, dual.lam, chan.eta)
        if best is None or score > best[0]:
            best = (score, tau.copy(), e.copy())
        new = tau_from_e(e, dual, sys, chan)
        new[1:] = np.where(pinned, tau[1:], new[1:])
        new[0] = T - new[1:].sum()
        if new[0] < 0:
            new[1:] *= (T - eps) / new[1:].sum()
            new[0] = T - new[1:].sum()
        change = float(np.max(np.abs(new - tau)))
        tau = new
        if change <= sys.fixed_point_tol * T:
            converged = True
            break
    e = e_from_tau(tau, dual, sys, chan)
    if not converged and best is not None and best[0] > _weighted_objective(tau, e, dual.lam, chan.eta):
        _, tau, e = best
    return InnerResult(tau, e, it, converged)


@dataclass
class MuEvaluation:
    value: float
    subgradient: np.ndarray
    tau: np.ndarray
    e: np.ndarray


def dual_value_mu(mu, lam, sys: SystemParams, chan: ChannelRealization) -> MuEvaluation:
    """Dual function of the weighted problem at mu, with a subgradient.

    The inner maximization is linear in the slot times, so its value is T times
    the best slot value. The returned vector is the budget violation
    ``e_k - xi P_t g_E,k sum_{i<k} tau_i`` (zero where energy causality binds,
    negative where it is slack), which is minus a subgradient of G'. It is taken
    at a maximizer: the energy-binding allocation over the tied slots when
    it attains the maximum, otherwise the whole frame in the best slot.
    """
    dual = DualState.make(lam, mu, sys, chan)
    T = sys.frame_duration
    a = chan.energy_rates(sys)
    v, p = slot_values(dual, sys, chan)
    vmax = float(v.max())
    value = T * vmax
    tied = v >= vmax - TIE_TOL * max(1.0, abs(vmax))
    tau = None
    if tied[0] and tied[1:].any():
        cand = _closure(p, tied[1:], a, T)
        e = p * cand[1:]
        if np.all(e <= a * np.cumsum(cand)[:-1] * (1 + 1e-12)):
            tau = cand
    if tau is None:
        tau = np.zeros(chan.hop_count + 1)
        tau[int(np.argmax(v))] = T
        e = p * tau[1:]
    grad = e - a * np.cumsum(tau)[:-1]
    return MuEvaluation(value, grad, tau, e)


@dataclass
class KKTPoint:
    mu: np.ndarray
    powers: np.ndarray
    active: np.ndarray
    value: float


def _tie_power(c: float, m: float) -> float:
    """Root z >= 0 of ``ln(1+z) - (z + c)/(1+z) = m``.

    Closed form ``1 + z = exp(m + 1 + W0((c - 1) e^{-m-1}))``, then one Newton
    polish for accuracy near the branch point.
    """
    w = lambert_w0((c - 1.0) * math.exp(-m - 1.0))
    z = math.expm1(m + 1.0 + w)
    if z <= 0.0:
        z = math.sqrt(2.0 * c) if c > 0 else 0.0
    if 0.0 < z < 1e100:
        h = math.log1p(z) - (z + c) / (1.0 + z) - m
        dh = (z + c) / (1.0 + z) ** 2
        if dh > 0:
            z = max(z - h / dh, 0.5 * z)
    return z


class _Instance:
    """Per-instance constants as plain floats for the hot loops."""

    __slots__ = ("K", "T", "a", "b", "eta")

    def __init__(self, sys: SystemParams, chan: ChannelRealization):
        self.K = chan.hop_count
        self.T = sys.frame_duration
        self.a = chan.energy_rates(sys).tolist()
        self.b = chan.power_caps(sys).tolist()
        self.eta = chan.eta.tolist()

    def kkt(self, lam):
        """Stationary multipliers, powers and active hops for weights lam."""
        A = 0.0
        mu, powers, active = [], [], []
        for k in range(self.K):
            lk = max(lam[k], LAMBDA_FLOOR)
            ek, ak, bk = self.eta[k], self.a[k], self.b[k]
            if ek <= 0.0:
                mu.append(0.0)
                powers.append(0.0)
                active.append(False)
                continue
            m = min(LN2 * A / lk, 700.0)
            z = _tie_power(ak * ek, m)
            zcap = bk * ek
            if z <= zcap:
                pk = z / ek
                muk = lk * ek / (LN2 * (1.0 + z))
                act = pk > 0.0
            else:
                pk = bk
                muk = (lk * (math.log1p(zcap) / LN2) - A) / (ak + bk)
                act = muk > 0.0
                if not act:
                    muk = 0.0
            mu.append(muk)
            powers.append(pk)
            active.append(act)
            A += muk * ak
        return mu, powers, active, self.T * A

    def closure_rates(self, powers, active):
        """Per-hop rates of the energy-binding allocation over the active hops."""
        acc = 1.0
        t = []
        for k in range(self.K):
            if active[k] and powers[k] > 0.0:
                tk = self.a[k] * acc / powers[k]
                acc += tk
            else:
                tk = 0.0
            t.append(tk)
        tau0 = self.T / acc
        return [t[k] * tau0 * (math.log1p(powers[k] * self.eta[k]) / LN2) for k in range(self.K)]

    def equal_rate(self, powers) -> float:
        """Max-min rate of the best time split for fixed powers (see equal_throughput_allocation)."""
        tail = 0.0
        best = math.inf
        for k in range(self.K - 1, -1, -1):
            p = min(powers[k], self.b[k])
            r = math.log1p(p * self.eta[k]) / LN2 if p > 0 else 0.0
            if r <= 0.0 or self.a[k] <= 0.0 or not math.isfinite(p):
                return 0.0
            tail += 1.0 / r
            best = min(best, self.T / (p / (r * self.a[k]) + tail))
        return best


def solve_kkt(lam, sys: SystemParams, chan: ChannelRealization) -> KKTPoint:
    """Minimizer of the weighted-problem dual G'(mu) from the stationarity system."""
    mu, powers, active, value = _Instance(sys, chan).kkt(np.asarray(lam, dtype=float).tolist())
    return KKTPoint(np.array(mu), np.array(powers), np.array(active), value)


@dataclass
class WeightedSolution:
    tau: np.ndarray
    e: np.ndarray
    throughputs: np.ndarray
    value: float
    mu: np.ndarray
    powers: np.ndarray
    iterations: int = 0
    method: str = "kkt"


def _mu_search_center(lam, sys: SystemParams, chan: ChannelRealization) -> np.ndarray:
    k = chan.hop_count
    per_slot = np.median(chan.energy_rates(sys) * np.arange(1, k + 1))
    eta = chan.eta
    return np.maximum(lam * eta / (LN2 * (1.0 + per_slot * eta)), 10 * MU_FLOOR)


def solve_weighted(
    lam, sys: SystemParams, chan: ChannelRealization, method: str = "kkt", tol: float = 1e-9
) -> WeightedSolution:
    """Maximize ``sum_k lam_k R_k`` over the feasible set through the mu-dual."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (chan.hop_count,) or np.any(lam < 0) or not lam.sum() > 0:
        raise ValueError("weights must be nonnegative, not all zero, one per hop")
    lam = lam / lam.sum()
    T = sys.frame_duration
    a = chan.energy_rates(sys)
    if method == "kkt":
        kp = solve_kkt(lam, sys, chan)
        tau = _closure(kp.powers, kp.active, a, T)
        e = kp.powers * tau[1:]
        e = np.minimum(e, a * np.cumsum(tau)[:-1])
        rates = np.where(tau[1:] > 0, tau[1:] * (np.log1p(kp.powers * chan.eta) / LN2), 0.0)
        return WeightedSolution(tau, e, rates, kp.value, kp.mu, kp.powers, 1, method)
    if method != "ellipsoid":
        raise ValueError(f"unknown mu method {method!r}")

    center = _mu_search_center(lam, sys, chan)
    radius = 1e3 * float(np.linalg.norm(center))

    def oracle(mu):
        ev = dual_value_mu(mu, lam, sys, chan)
        # The budget-violation vector is minus a subgradient of G'.
        return ev.value, -ev.subgradient

    def constraint(mu):
        low = mu < MU_FLOOR
        if low.any():
            g = np.zeros_like(mu)
            g[np.argmax(low)] = -1.0
            return g
        return None

    scale = max(T * float(np.max(np.log1p(np.minimum(a, chan.power_caps(sys)) * chan.eta)) / LN2), 1e-300)
    res = ellipsoid_optimize(oracle, center, radius, tol=tol * scale, constraint=constraint)
    dual = DualState.make(lam, res.point, sys, chan)
    # Slot ties make the inner maximizer ambiguous near the optimum; the water-filling
    # powers are not, and closing them with binding budgets gives the matching primal.
    powers = water_filling_power(dual, sys, chan)
    # A hop priced near the floor may belong to the silent set; the approximate
    # mu cannot say, so silence hops greedily while the weighted rate improves.
    rate = np.log1p(powers * chan.eta) / LN2

    def score(active):
        tau = _closure(powers, active, a, T)
        return float(np.dot(lam, tau[1:] * rate)), tau

    active = powers > 0
    best, tau = score(active)
    improved = True
    while improved:
        improved = False
        for i in np.flatnonzero(active):
            trial = active.copy()
            trial[i] = False
            val, t = score(trial)
            if val > best:
                best, tau, active, improved = val, t, trial, True
    powers = np.where(active, powers, 0.0)
    e = np.minimum(powers * tau[1:], a * np.cumsum(tau)[:-1])
    rates = tau[1:] * np.where(active, rate, 0.0)
    return WeightedSolution(tau, e, rates, res.value, dual.mu, powers, res.iterations, method)


def dual_value_lambda(
    lam, R: float, sys: SystemParams, chan: ChannelRealization, mu_method: str = "kkt"
) -> tuple[float, np.ndarray, WeightedSolution]:
    """Feasibility dual ``G(lam) = -sum_k lam_k (R_k* - R)`` and its subgradient ``R_k* - R``.

    The value uses the weighted-problem optimum, which for the ellipsoid route is
    an upper bound, so G is never overstated.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("weights must be nonnegative")
    total = lam.sum()
    if total == 0:
        return 0.0, np.zeros_like(lam), None
    ws = solve_weighted(lam, sys, chan, method=mu_method)
    # solve_weighted normalizes the weights; G is homogeneous of degree one.
    G = total * (R - ws.value)
    return G, ws.throughputs - R, ws


def throughput_upper_bound(sys: SystemParams, chan: ChannelRealization) -> float:
    """Bracket top: no hop beats a full frame at the better of its two power ceilings."""
    a = chan.energy_rates(sys)
    p = np.minimum(a, chan.power_caps(sys))
    return float(np.min(sys.frame_duration * np.log1p(chan.eta * p) / LN2))


@dataclass
class FeasibilityOutcome:
    feasible: bool
    witness: Allocation | None
    dual_value: float
    lam: np.ndarray
    witness_rate: float = 0.0
    upper_bound: float = math.inf
    iterations: int = 0
    decided: bool = True
    reason: str = ""
    best_powers: np.ndarray | None = None


def _simplex_radius(x0: np.ndarray) -> float:
    n = x0.size
    verts = np.vstack([np.zeros(n), np.eye(n)])
    return float(np.max(np.linalg.norm(verts - x0, axis=1))) * 1.01 + 1e-9


def feasibility_check(
    R: float,
    sys: SystemParams,
    chan: ChannelRealization,
    lam0=None,
    rate_tol: float | None = None,
    max_iter: int | None = None,
    mu_method: str = "kkt",
    state: EllipsoidState | None = None,
    _inst: _Instance | None = None,
) -> FeasibilityOutcome:
    """Decide whether every hop can reach rate R.

    Maximizes G over the weight simplex with the ellipsoid method (minimizing
    ``Phi(lam) - R`` where Phi is the weighted optimum). Exits infeasible as soon
    as some weight vector has G > 0. Exits feasible as soon as the powers read off
    the current dual point admit a time split with every hop at rate R or better;
    that witness is returned. When the dual upper bound and the witness rate are
    within ``rate_tol`` of each other the test is decided at that tolerance.

    The subgradient of G in the free simplex coordinates, ``R_i - R_K``, does not
    involve R, so the cuts are valid for every target. Passing ``state`` resumes
    an ellipsoid left by an earlier test instead of starting from the full
    simplex ball; ``lam0`` is ignored in that case.
    """
    if R < 0:
        raise ValueError("target rate must be nonnegative")
    k = chan.hop_count
    inst = _inst or _Instance(sys, chan)
    if rate_tol is None:
        rate_tol = sys.rel_tol * max(throughput_upper_bound(sys, chan), 1e-300)
    lam0 = np.full(k, 1.0 / k) if lam0 is None else np.asarray(lam0, dtype=float)
    if R == 0:
        return FeasibilityOutcome(True, Allocation.idle(k, sys.frame_duration), -0.0, lam0, 0.0, reason="R=0")

    def evaluate(lam):
        if mu_method == "kkt":
            mu, powers, active, phi = inst.kkt(lam)
            rates = inst.closure_rates(powers, active)
        else:
            ws = solve_weighted(np.asarray(lam), sys, chan, method=mu_method)
            phi, rates, powers = ws.value, ws.throughputs.tolist(), ws.powers.tolist()
        return phi, rates, powers

    best_rate, best_powers = -math.inf, None
    upper = math.inf
    best_lam, best_phi = lam0, math.inf

    def outcome(feasible, reason, iterations, decided=True):
        witness = None
        if feasible:
            witness = equal_throughput_allocation(best_powers, sys, chan)
        return FeasibilityOutcome(
            feasible,
            witness,
            R - best_phi,
            np.asarray(best_lam),
            max(best_rate, 0.0),
            upper,
            iterations,
            decided,
            reason,
            None if best_powers is None else np.asarray(best_powers),
        )

    if k == 1:
        phi, rates, powers = evaluate([1.0])
        upper, best_phi, best_lam = phi, phi, np.ones(1)
        best_rate, best_powers = inst.equal_rate(powers), powers
        if phi < R:
            return outcome(False, "G>0", 1)
        return outcome(best_rate >= R - rate_tol, "K=1", 1)

    if state is None:
        x0 = lam0[:-1].copy()
        state = EllipsoidState.ball(x0, _simplex_radius(x0))
    n = state.n
    if max_iter is None:
        max_iter = 500 * n * n
    evals = 0
    stop = state.iterations + max_iter
    while state.iterations < stop:
        x = state.center
        if np.any(x < 0):
            g = np.zeros(n)
            g[int(np.argmin(x))] = -1.0
            state.cut(g)
            continue
        if x.sum() > 1.0:
            state.cut(np.ones(n))
            continue
        lam = np.append(x, 1.0 - x.sum()).tolist()
        phi, rates, powers = evaluate(lam)
        evals += 1
        if phi < best_phi:
            best_phi, best_lam = phi, lam
        upper = min(upper, phi)
        if phi < R:
            return outcome(False, "G>0", evals)
        rate = inst.equal_rate(powers)
        if rate > best_rate:
            best_rate, best_powers = rate, powers
        if best_rate >= R:
            return outcome(True, "witness", evals)
        if upper - best_rate <= rate_tol:
            return outcome(best_rate >= R - rate_tol, "gap", evals)
        g = np.array(rates[:-1]) - rates[-1]
        if not np.any(g):
            # Flat dual: the current weights already minimize Phi.
            return outcome(best_rate >= R - rate_tol, "stationary", evals)
        state.record(phi, g)
        if state.lower_bound > R:
            # Certified: min Phi exceeds R, so R is strictly below the optimum.
            if best_rate >= R - rate_tol:
                return outcome(True, "certified", evals)
    return outcome(False, "max_iter", evals, decided=False)


def saturate_energy(alloc: Allocation, sys: SystemParams, chan: ChannelRealization) -> Allocation:
    """Among allocations with the same equal per-hop rate, pick the one spending the most energy.

    Harvest for hop k accrues over every earlier slot, so a hop off the
    bottleneck can trade time for power without touching anyone else's rate.
    Going from the last hop back, each power is raised until energy causality or
    the interference cap binds, holding every hop at the common rate R.
    The max-min value is unchanged.
    """
    k = chan.hop_count
    T = sys.frame_duration
    t = alloc.tau[1:]
    if not np.all(t > 0):
        return alloc
    R = float(np.min(t * (np.log1p(alloc.e * chan.eta / t) / LN2)))
    if not R > 0:
        return alloc
    a = chan.energy_rates(sys)
    caps = chan.power_caps(sys)
    eta = chan.eta
    p = alloc.e / t
    inv = np.empty(k)
    tail = 0.0
    for i in range(k - 1, -1, -1):
        # Need (p/a + 1) / log2(1 + p eta) <= T/R - tail; the sublevel set is an interval.
        c = T / R - tail

        def excess(q, i=i, c=c):
            return (q / a[i] + 1.0) / (math.log1p(q * eta[i]) / LN2) - c

        lo = p[i]
        hi = caps[i]
        if not math.isfinite(hi):
            hi = max(2.0 * lo, 1.0 / eta[i])
            while excess(hi) <= 0:
                hi *= 2.0
        if excess(hi) <= 0:
            p[i] = hi
        elif excess(lo) <= 0:
            p[i] = brentq(excess, lo, hi, xtol=1e-12 * hi, maxiter=200)
        inv[i] = LN2 / math.log1p(p[i] * eta[i])
        tail += inv[i]
    tau = np.empty(k + 1)
    tau[1:] = R * inv
    tau[0] = T - tau[1:].sum()
    if tau[0] < 0:
        return alloc
    e = np.minimum(p * tau[1:], a * np.cumsum(tau)[:-1])
    return Allocation(tau, e)


def jotpa_solve(sys: SystemParams, chan: ChannelRealization, mu_method: str = "kkt") -> SolveResult:
    """End-to-end rate maximization by bisection over feasibility tests.

    Every feasibility test returns both a witness rate (a valid lower bound) and
    the smallest weighted optimum it saw (a valid upper bound), and the bracket is
    tightened with both in addition to the midpoint verdict.
    """
    k = chan.hop_count
    T = sys.frame_duration
    inst = _Instance(sys, chan)
    r_max = throughput_upper_bound(sys, chan)
    if not r_max > 0:
        return make_result(Allocation.idle(k, T), sys, chan, "jotpa", iterations={"bisection": 0, "dual": 0})
    delta = sys.bisection_tol if sys.bisection_tol is not None else sys.rel_tol * r_max
    lo, hi = 0.0, r_max
    lam = np.full(k, 1.0 / k)
    state = None
    if k > 1:
        state = EllipsoidState.ball(lam[:-1], _simplex_radius(lam[:-1]))
    best_powers = None
    best_rate = 0.0
    feasible_seq, infeasible_seq = [], []
    steps = dual_iters = 0
    undecided = 0
    while hi - lo >= delta:
        R = 0.5 * (lo + hi)
        out = feasibility_check(
            R, sys, chan, lam0=lam, rate_tol=0.5 * delta, mu_method=mu_method, state=state, _inst=inst
        )
        steps += 1
        dual_iters += out.iterations
        lam = out.lam
        if out.best_powers is not None and out.witness_rate > best_rate:
            best_rate, best_powers = out.witness_rate, out.best_powers
        lo = max(lo, best_rate)
        hi = min(hi, out.upper_bound)
        if out.feasible:
            feasible_seq.append(R)
        else:
            infeasible_seq.append(R)
            if not out.decided:
                undecided += 1
            hi = min(hi, R)
        if hi < lo:
            hi = lo
    if best_powers is None:
        alloc = Allocation.idle(k, T)
    else:
        alloc = saturate_energy(equal_throughput_allocation(best_powers, sys, chan), sys, chan)
    return make_result(
        alloc,
        sys,
        chan,
        "jotpa",
        iterations={"bisection": steps, "dual": dual_iters},
        converged=undecided == 0,
        diagnostics={
            "bracket": (lo, hi),
            "delta": delta,
            "lambda": np.asarray(lam).tolist(),
            "feasible_targets": feasible_seq,
            "infeasible_targets": infeasible_seq,
            "upper_bound": hi,
        },
    )
