"""Comparison schemes: optimal time with one common power (OTEPA), equal time with optimal power (ETOPA)."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

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

SCAN_POINTS = 48


def _common_power_rate(P: float, sys: SystemParams, chan: ChannelRealization) -> float:
    alloc = equal_throughput_allocation(np.full(chan.hop_count, P), sys, chan)
    t = alloc.tau[1:]
    if not np.all(t > 0):
        return 0.0
    return float(np.min(t * (np.log1p(alloc.e * chan.eta / t) / LN2)))


def otepa_solve(
    sys: SystemParams,
    chan: ChannelRealization,
    power_mode: str = "optimized",
    fixed_power: float | None = None,
) -> SolveResult:
    """Every SU transmits at the same power P; time is then split for the best max-min rate.

    With powers fixed the best split gives all hops the same rate and leaves the
    rest of the frame to harvesting (see :func:`equal_throughput_allocation`).
    ``power_mode="optimized"`` searches P over ``(0, min_k I_p/g_I,k]`` with a
    log-spaced scan followed by a bounded Brent refinement around the best scan
    point. ``power_mode="fixed"`` uses ``fixed_power`` (default: the tightest cap).
    """
    k = chan.hop_count
    T = sys.frame_duration
    caps = chan.power_caps(sys)
    p_hi = float(np.min(caps))
    if not math.isfinite(p_hi):
        # No interference link: the power can never usefully exceed all energy in the shortest slot.
        p_hi = float(np.max(chan.energy_rates(sys))) * T / sys.eps_tau
    if not p_hi > 0 or not np.any(chan.eta > 0):
        return make_result(Allocation.idle(k, T), sys, chan, "otepa", diagnostics={"power": 0.0})

    if power_mode == "fixed":
        P = p_hi if fixed_power is None else min(float(fixed_power), p_hi)
        if not P > 0:
            raise ValueError("fixed power must be positive")
        alloc = equal_throughput_allocation(np.full(k, P), sys, chan)
        return make_result(alloc, sys, chan, "otepa", diagnostics={"power": P, "mode": "fixed"})
    if power_mode != "optimized":
        raise ValueError(f"unknown OTEPA power mode {power_mode!r}")

    grid = p_hi * np.logspace(-9, 0, SCAN_POINTS)
    values = np.array([_common_power_rate(P, sys, chan) for P in grid])
    i = int(np.argmax(values))
    best_p, best_r = float(grid[i]), float(values[i])
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, SCAN_POINTS - 1)])
    if best_r > 0 and hi > lo:
        res = minimize_scalar(
            lambda x: -_common_power_rate(math.exp(x), sys, chan),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -res.fun > best_r:
            best_p, best_r = math.exp(res.x), -res.fun
    alloc = equal_throughput_allocation(np.full(k, best_p), sys, chan)
    return make_result(alloc, sys, chan, "otepa", diagnostics={"power": best_p, "mode": "optimized"})


def etopa_solve(sys: SystemParams, chan: ChannelRealization) -> SolveResult:
    """Equal slots for everyone; each SU sends at the largest power both caps allow."""
    k = chan.hop_count
    T = sys.frame_duration
    tau = np.full(k + 1, T / (k + 1))
    budget = harvested_energies(sys, chan, tau)
    e = np.minimum(chan.power_caps(sys) * tau[1:], budget)
    return make_result(Allocation(tau, e), sys, chan, "etopa")
