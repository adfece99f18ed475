"""Domain types and closed-form physics for the harvest-then-transmit multi-hop network.

All powers are linear and normalized by the receiver noise power; decibels only
appear at the configuration boundary (see :func:`db_to_linear`).

Indexing follows the frame layout: ``tau[0]`` is the harvest-only slot of the
source, ``tau[k]`` (k >= 1) is the transmit slot of SU_k, and ``e[k-1]`` is the
energy SU_k spends in that slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

LN2 = math.log(2.0)


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Physical constants plus solver controls.

    ``pt_power`` and ``peak_interference`` are linear and in the same unit as
    ``noise_power`` (with the default unit noise they are SNR-normalized).
    """

    frame_duration: float = 1.0
    pt_power: float = 1e4
    peak_interference: float = 10 ** 0.5
    harvest_efficiency: float = 0.8
    noise_power: float = 1.0
    path_loss_exponent: float = 2.0
    reference_distance: float = 1.0
    tau_floor: float | None = None  # None -> 1e-6 * T
    bisection_tol: float | None = None  # absolute; None -> rel_tol * R_max
    rel_tol: float = 1e-7
    fixed_point_tol: float = 1e-9
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.frame_duration > 0:
            raise ValueError("frame_duration must be positive")
        if not self.pt_power > 0:
            raise ValueError("pt_power must be positive")
        if not self.peak_interference >= 0:
            raise ValueError("peak_interference must be nonnegative")
        if not 0.0 <= self.harvest_efficiency <= 1.0:
            raise ValueError("harvest_efficiency must lie in [0, 1]")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not self.path_loss_exponent >= 0:
            raise ValueError("path_loss_exponent must be nonnegative")
        if not self.reference_distance > 0:
            raise ValueError("reference_distance must be positive")
        if self.tau_floor is not None and not 0 < self.tau_floor < self.frame_duration:
            raise ValueError("tau_floor must lie in (0, T)")
        if self.bisection_tol is not None and not self.bisection_tol > 0:
            raise ValueError("bisection_tol must be positive")

    @classmethod
    def from_db(cls, pt_db: float = 40.0, ip_db: float = 5.0, **kwargs) -> "SystemParams":
        return cls(pt_power=db_to_linear(pt_db), peak_interference=db_to_linear(ip_db), **kwargs)

    @property
    def eps_tau(self) -> float:
        return self.tau_floor if self.tau_floor is not None else 1e-6 * self.frame_duration

    @property
    def harvest_gain(self) -> float:
        """xi * P_t, the energy-per-unit-time factor multiplying g_E."""
        return self.harvest_efficiency * self.pt_power


@dataclass(frozen=True)
class Topology:
    """Node positions in meters. ``su_positions`` holds SU_1 .. SU_{K+1}."""

    pt_position: tuple[float, float]
    pr_position: tuple[float, float]
    su_positions: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.su_positions) < 2:
            raise ValueError("need at least two SUs (K >= 1)")

    @property
    def hop_count(self) -> int:
        return len(self.su_positions) - 1

    def energy_distances(self) -> np.ndarray:
        """PT -> SU_k for k = 1..K+1."""
        return np.hypot(*(np.asarray(self.su_positions) - self.pt_position).T)

    def interference_distances(self) -> np.ndarray:
        """SU_k -> PR for k = 1..K."""
        return np.hypot(*(np.asarray(self.su_positions[:-1]) - self.pr_position).T)

    def data_distances(self) -> np.ndarray:
        """SU_k -> SU_{k+1} for k = 1..K."""
        su = np.asarray(self.su_positions)
        return np.hypot(*(su[1:] - su[:-1]).T)


@dataclass(frozen=True)
class ChannelRealization:
    """Power gains of one fading block.

    ``g_e`` has K+1 entries to mirror the harvested-energy definition for every
    SU; the destination entry is carried but never used by the solvers.
    """

    g_e: np.ndarray
    g_i: np.ndarray
    g_d: np.ndarray
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g_e", _frozen(self.g_e))
        object.__setattr__(self, "g_i", _frozen(self.g_i))
        object.__setattr__(self, "g_d", _frozen(self.g_d))
        k = self.g_d.shape[0]
        if k < 1 or self.g_i.shape != (k,) or self.g_e.shape != (k + 1,):
            raise ValueError(
                f"gain shapes inconsistent: g_e {self.g_e.shape}, g_i {self.g_i.shape}, g_d {self.g_d.shape}"
            )
        for name in ("g_e", "g_i", "g_d"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and nonnegative")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")

    @property
    def hop_count(self) -> int:
        return self.g_d.shape[0]

    @property
    def eta(self) -> np.ndarray:
        return self.g_d / self.noise_power

    def energy_rates(self, sys: SystemParams) -> np.ndarray:
        """xi P_t g_E,k for the K transmitting SUs (energy per unit harvest time)."""
        return sys.harvest_gain * self.g_e[:-1]

    def power_caps(self, sys: SystemParams) -> np.ndarray:
        """Interference-limited power I_p / g_I,k (inf when the link to PR is null)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            caps = np.where(self.g_i > 0, sys.peak_interference / np.where(self.g_i > 0, self.g_i, 1.0), np.inf)
        return caps

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.g_e, self.g_i, self.g_d):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class Allocation:
    tau: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", _frozen(self.tau))
        object.__setattr__(self, "e", _frozen(self.e))
        if self.tau.shape != (self.e.shape[0] + 1,):
            raise ValueError(f"tau must have K+1 entries, got {self.tau.shape} for K={self.e.shape[0]}")

    @property
    def hop_count(self) -> int:
        return self.e.shape[0]

    @property
    def power(self) -> np.ndarray:
        tau = self.tau[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(tau > 0, self.e / np.where(tau > 0, tau, 1.0), 0.0)

    @classmethod
    def idle(cls, k: int, frame_duration: float = 1.0) -> "Allocation":
        """Whole frame spent harvesting, nothing transmitted (always feasible, R = 0)."""
        tau = np.zeros(k + 1)
        tau[0] = frame_duration
        return cls(tau, np.zeros(k))


@dataclass
class SolveResult:
    allocation: Allocation
    r_star: float
    harvested: np.ndarray
    algorithm: str = ""
    iterations: dict[str, int] = field(default_factory=dict)
    converged: bool = True
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def power(self) -> np.ndarray:
        return self.allocation.power

    @property
    def utilization(self) -> float:
        """Allocated over harvested energy, summed over the transmitting SUs."""
        total = math.fsum(self.harvested)
        return math.fsum(self.allocation.e) / total if total > 0 else 0.0

    def summary(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "r_star": self.r_star,
            "tau": self.allocation.tau.tolist(),
            "energy": self.allocation.e.tolist(),
            "power": self.power.tolist(),
            "harvested": np.asarray(self.harvested).tolist(),
            "utilization": self.utilization,
            "iterations": dict(self.iterations),
            "converged": self.converged,
        }


def make_result(alloc: Allocation, sys: SystemParams, chan: ChannelRealization, algorithm: str, **kw) -> SolveResult:
    return SolveResult(
        allocation=alloc,
        r_star=end_to_end_throughput(alloc, chan),
        harvested=harvested_energies(sys, chan, alloc.tau),
        algorithm=algorithm,
        **kw,
    )


def db_to_linear(x_db: float) -> float:
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db}")
    return 10.0 ** (x_db / 10.0)


def channel_gain(h_sq, d, d0: float = 1.0, alpha: float = 2.0):
    """Fading power times distance-based path loss ``(d/d0)^-alpha``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or d0 <= 0:
        raise ValueError("distances must be positive")
    out = np.asarray(h_sq, dtype=float) * (d / d0) ** (-alpha)
    return float(out) if out.ndim == 0 else out


def harvested_energy(sys: SystemParams, chan: ChannelRealization, tau, k: int) -> float:
    """Energy SU_k has gathered from PT before its own slot (k is 1-based, up to K+1)."""
    if not 1 <= k <= chan.hop_count + 1:
        raise IndexError(f"SU index {k} outside 1..{chan.hop_count + 1}")
    tau = np.asarray(tau, dtype=float)
    return sys.harvest_gain * chan.g_e[k - 1] * math.fsum(tau[:k])


def harvested_energies(sys: SystemParams, chan: ChannelRealization, tau) -> np.ndarray:
    """Harvested energy of each transmitting SU_1..SU_K."""
    tau = np.asarray(tau, dtype=float)
    return chan.energy_rates(sys) * np.cumsum(tau)[:-1]


def hop_throughput(tau_k: float, e_k: float, eta_k: float) -> float:
    if tau_k < 0 or e_k < 0:
        raise ValueError("tau and energy must be nonnegative")
    if tau_k == 0:
        if e_k > 0:
            raise ValueError("positive energy in a zero-length slot")
        return 0.0
    return tau_k * math.log1p(e_k * eta_k / tau_k) / LN2


def hop_throughputs(alloc: Allocation, chan: ChannelRealization) -> np.ndarray:
    if alloc.hop_count != chan.hop_count:
        raise ValueError(f"allocation has K={alloc.hop_count}, channel has K={chan.hop_count}")
    tau = alloc.tau[1:]
    safe = np.where(tau > 0, tau, 1.0)
    if np.any((tau <= 0) & (alloc.e > 0)):
        raise ValueError("positive energy in a zero-length slot")
    return np.where(tau > 0, tau * np.log1p(alloc.e * chan.eta / safe) / LN2, 0.0)


def end_to_end_throughput(alloc: Allocation, chan: ChannelRealization) -> float:
    """Bottleneck (minimum) hop throughput."""
    return float(np.min(hop_throughputs(alloc, chan)))


@dataclass(frozen=True)
class Residuals:
    """Signed constraint residuals; a constraint holds when its residual is <= 0."""

    c1: np.ndarray
    c2: np.ndarray
    c3: float
    c4: np.ndarray
    c1_scale: np.ndarray
    c2_scale: np.ndarray
    frame_duration: float

    def relative(self) -> np.ndarray:
        """All residuals divided by the magnitude of the terms they compare."""
        tiny = np.finfo(float).tiny
        return np.concatenate(
            [
                self.c1 / np.maximum(self.c1_scale, tiny),
                self.c2 / np.maximum(self.c2_scale, tiny),
                [self.c3 / self.frame_duration],
                self.c4 / self.frame_duration,
            ]
        )

    def max_relative(self) -> float:
        return float(np.max(self.relative()))

    def feasible(self, tol: float = 1e-8) -> bool:
        return self.max_relative() <= tol


def constraint_residuals(alloc: Allocation, sys: SystemParams, chan: ChannelRealization) -> Residuals:
    tau, e = alloc.tau, alloc.e
    budget = harvested_energies(sys, chan, tau)
    interference = e * chan.g_i
    cap = sys.peak_interference * tau[1:]
    return Residuals(
        c1=e - budget,
        c2=interference - cap,
        c3=math.fsum(tau) - sys.frame_duration,
        c4=np.maximum(-tau, tau - sys.frame_duration),
        c1_scale=np.maximum(np.abs(e), np.abs(budget)),
        c2_scale=np.maximum(np.abs(interference), np.abs(cap)),
        frame_duration=sys.frame_duration,
    )


def equal_throughput_allocation(powers, sys: SystemParams, chan: ChannelRealization) -> Allocation:
    """Best time split for fixed transmit powers.

    With powers fixed, hop k delivers ``tau_k * r_k`` with ``r_k = log2(1 + P_k eta_k)``,
    so the max-min time split gives every hop the same throughput R and hands the
    remaining frame to the source harvest slot. Energy causality for hop k then
    reads ``R (P_k/r_k + a_k sum_{j>=k} 1/r_j) <= a_k T``, and R is the largest
    value meeting all K of these. Powers above the interference cap are clipped.
    """
    k = chan.hop_count
    T = sys.frame_duration
    p = np.minimum(np.asarray(powers, dtype=float), chan.power_caps(sys))
    if p.shape != (k,):
        raise ValueError(f"need {k} powers, got {p.shape}")
    rate = np.log1p(p * chan.eta) / LN2
    a = chan.energy_rates(sys)
    if np.any(rate <= 0) or np.any(a <= 0) or not np.all(np.isfinite(p)):
        return Allocation.idle(k, T)
    inv = 1.0 / rate
    tail = np.cumsum(inv[::-1])[::-1]
    r = float(np.min(T / (p * inv / a + tail)))
    tau = np.empty(k + 1)
    tau[1:] = r * inv
    tau[0] = T - r * tail[0]
    e = p * tau[1:]
    # Round-off can push the binding hop a few ulps over its budget.
    e = np.minimum(e, a * np.cumsum(tau)[:-1])
    return Allocation(tau, e)
