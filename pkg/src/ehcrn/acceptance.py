"""Acceptance checks shared by the test suite and ``ehcrn validate``.

Each check returns a :class:`CheckResult`; ``quick=True`` shrinks sample
counts for a fast smoke run but keeps every tolerance unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import etopa_solve, otepa_solve
from .harness import ExperimentConfig, run_sweep
from .jotpa import jotpa_solve
from .model import (
    Allocation,
    ChannelRealization,
    SystemParams,
    constraint_residuals,
    hop_throughput,
    hop_throughputs,
)
from .numerics import bisection, bisection_steps, lambert_w0
from .oracle import oracle_solve
from .scenarios import SeededRng, build_topology, sample_channels

EXPECTED_GAIN_3_TO_4 = 0.2372
EXPECTED_GAIN_4_TO_5 = 0.1086


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    warnings: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.passed and self.warnings:
            status = "PASS (warn)"
        return f"[{status}] {self.number:2d}. {self.name}: {self.detail}"


@dataclass
class _SuiteCase:
    scenario: str
    K: int
    ip_db: float
    seed: int
    sys: SystemParams
    chan: ChannelRealization
    jotpa: object
    oracle: object
    otepa: object
    etopa: object


_SUITE_CACHE: dict[bool, list[_SuiteCase]] = {}
SUITE_SEED = 20240


def oracle_suite(quick: bool = False) -> list[_SuiteCase]:
    """K in 1..3, every scenario, P_t = 40 dB, I_p in {0, 5, 10} dB, 20 seeded blocks each."""
    if quick in _SUITE_CACHE:
        return _SUITE_CACHE[quick]
    n = 3 if quick else 20
    cases = []
    for scenario in ("S1", "S2", "S3"):
        for k in (1, 2, 3):
            topo = build_topology(scenario, k)
            for ip in (0.0, 5.0, 10.0):
                sys = SystemParams.from_db(40.0, ip)
                for i in range(n):
                    chan = sample_channels(topo, sys, SeededRng(SUITE_SEED, i))
                    cases.append(
                        _SuiteCase(
                            scenario, k, ip, i, sys, chan,
                            jotpa_solve(sys, chan), oracle_solve(sys, chan),
                            otepa_solve(sys, chan), etopa_solve(sys, chan),
                        )
                    )
    _SUITE_CACHE[quick] = cases
    return cases


def check_oracle_equivalence(quick: bool = False) -> CheckResult:
    cases = oracle_suite(quick)
    errs = [abs(c.jotpa.r_star - c.oracle.r_star) / max(c.oracle.r_star, 1e-6) for c in cases]
    worst = int(np.argmax(errs))
    bad = sum(e > 0.02 for e in errs)
    c = cases[worst]
    return CheckResult(
        1, "oracle equivalence", bad == 0,
        f"{len(cases)} instances, max rel err {errs[worst]:.2e} (tol 2e-2) at {c.scenario} K={c.K} Ip={c.ip_db:g}dB seed {c.seed}; {bad} violations",
    )


def check_optimal_structure(quick: bool = False) -> CheckResult:
    cases = oracle_suite(quick)
    worst_sum, worst_spread, bad = 0.0, 0.0, 0
    for c in cases:
        T = c.sys.frame_duration
        a = c.jotpa.allocation
        r = hop_throughputs(a, c.chan)
        delta = c.jotpa.diagnostics.get("delta", 0.0)
        tot = abs(float(np.sum(a.tau)) - T)
        spread = float(r.max() - r.min())
        allowed = max(10 * delta, 1e-3 * c.jotpa.r_star)
        worst_sum = max(worst_sum, tot / T)
        worst_spread = max(worst_spread, spread / allowed if allowed > 0 else (0.0 if spread == 0 else math.inf))
        if tot > 1e-6 * T or spread > allowed:
            bad += 1
    return CheckResult(
        2, "full frame and equal hop rates", bad == 0,
        f"max |sum tau - T|/T {worst_sum:.1e} (tol 1e-6), max spread/allowed {worst_spread:.2e} (tol 1); {bad} violations",
    )


def check_constraint_validity(quick: bool = False) -> CheckResult:
    cases = oracle_suite(quick)
    worst = {}
    for c in cases:
        for name in ("jotpa", "oracle", "otepa", "etopa"):
            res = constraint_residuals(getattr(c, name).allocation, c.sys, c.chan)
            worst[name] = max(worst.get(name, -math.inf), res.max_relative())
    overall = max(worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return CheckResult(3, "constraint validity", overall <= 1e-8, f"max relative residual: {detail} (tol 1e-8)")


def check_dominance(quick: bool = False) -> CheckResult:
    n = 15 if quick else 100
    topo = build_topology("S2", 3)
    violations, worst = 0, math.inf
    for pt in (30.0, 40.0, 50.0):
        sys = SystemParams.from_db(pt, 5.0)
        for i in range(n):
            chan = sample_channels(topo, sys, SeededRng(7001, i))
            rj = jotpa_solve(sys, chan).r_star
            for base in (otepa_solve(sys, chan).r_star, etopa_solve(sys, chan).r_star):
                margin = rj - base
                worst = min(worst, margin)
                if margin < -1e-6:
                    violations += 1
    return CheckResult(
        4, "dominance over OTEPA and ETOPA", violations == 0,
        f"{3 * n} paired blocks, min R_JOTPA - R_baseline {worst:.2e} (tol -1e-6); {violations} violations",
    )


def _sweep(quick: bool, **kw):
    cfg = ExperimentConfig(**kw)
    if quick:
        cfg.realizations = max(10, cfg.realizations // 20)
    return run_sweep(cfg)


def check_interference_saturation(quick: bool = False) -> CheckResult:
    grid = [float(v) for v in range(-30, 61, 10)]
    table = _sweep(quick, scenarios=["S2"], hops=[2, 4, 6], ip_db=grid, realizations=500, seed=8001)
    ok = True
    notes = []
    for k in (2, 4, 6):
        rows = sorted(table.select(K=k), key=lambda r: r.ip_db)
        for lo, hi in zip(rows, rows[1:]):
            if hi.mean_r < lo.mean_r - max(lo.ci95, hi.ci95):
                ok = False
                notes.append(f"K={k} drop {lo.ip_db:g}->{hi.ip_db:g}dB")
        m40 = next(r.mean_r for r in rows if r.ip_db == 40.0)
        m60 = next(r.mean_r for r in rows if r.ip_db == 60.0)
        rel = abs(m40 - m60) / max(m60, 1e-12)
        notes.append(f"K={k} |R40-R60|/R60={rel:.2%}")
        if rel >= 0.02:
            ok = False
    return CheckResult(5, "I_p saturation", ok, "; ".join(notes))


def check_scenario_ordering(quick: bool = False) -> CheckResult:
    table = _sweep(quick, scenarios=["S1", "S2", "S3"], hops=[6], ip_db=[0.0], realizations=1000, seed=8002)
    row = {r.scenario: r for r in table.rows}
    s1, s2, s3 = row["S1"], row["S2"], row["S3"]
    ok1 = s1.mean_r - s3.mean_r > s1.ci95 + s3.ci95
    ok2 = s2.mean_r - s3.mean_r > s2.ci95 + s3.ci95
    detail = (
        f"mean R* S1 {s1.mean_r:.4f}+-{s1.ci95:.4f}, S2 {s2.mean_r:.4f}+-{s2.ci95:.4f}, "
        f"S3 {s3.mean_r:.4f}+-{s3.ci95:.4f}"
    )
    return CheckResult(6, "scenario ordering", ok1 and ok2, detail)


def check_hop_gains(quick: bool = False) -> CheckResult:
    table = _sweep(quick, scenarios=["S2"], hops=[3, 4, 5], ip_db=[5.0], realizations=1000, seed=8003, dump_samples=True)
    mean = {r.K: r.mean_r for r in table.rows}
    g34 = mean[4] / mean[3] - 1.0
    g45 = mean[5] / mean[4] - 1.0
    # Paired bootstrap-free CI for the gains via the delta method on per-block samples.
    samples = {k: np.array([s.r_star for s in table.samples if s.K == k]) for k in (3, 4, 5)}
    ci34 = _ratio_ci(samples[4], samples[3])
    ci45 = _ratio_ci(samples[5], samples[4])
    warnings = []
    if abs(g34 - EXPECTED_GAIN_3_TO_4) > 0.05:
        warnings.append(f"gain 3->4 {g34:.2%} outside 23.72% +- 5pp")
    if abs(g45 - EXPECTED_GAIN_4_TO_5) > 0.05:
        warnings.append(f"gain 4->5 {g45:.2%} outside 10.86% +- 5pp")
    detail = f"gain 3->4 {g34:.2%} (+-{ci34:.2%}), gain 4->5 {g45:.2%} (+-{ci45:.2%})"
    if warnings:
        detail += "; warn: " + "; ".join(warnings)
    return CheckResult(7, "diminishing hop gains", g34 > g45, detail, warnings)


def _ratio_ci(num: np.ndarray, den: np.ndarray) -> float:
    n = len(num)
    mn, md = num.mean(), den.mean()
    if n < 2 or md <= 0:
        return math.nan
    resid = num - (mn / md) * den
    return 1.96 * resid.std(ddof=1) / (md * math.sqrt(n))


def check_joint_concavity(quick: bool = False) -> CheckResult:
    rng = np.random.default_rng(9001)
    n = 200 if quick else 1000
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(1, 7))
        eta = rng.exponential(size=k) * rng.uniform(0.01, 10.0)
        tau = rng.dirichlet(np.ones(k + 1), size=2)
        e = rng.exponential(size=(2, k)) * rng.uniform(0.01, 100.0)
        theta = float(rng.uniform(0.0, 1.0))
        chan = ChannelRealization(np.ones(k + 1), np.ones(k), eta)
        vals = [float(np.min(hop_throughputs(Allocation(tau[j], e[j]), chan))) for j in range(2)]
        mid = Allocation(theta * tau[0] + (1 - theta) * tau[1], theta * e[0] + (1 - theta) * e[1])
        gap = theta * vals[0] + (1 - theta) * vals[1] - float(np.min(hop_throughputs(mid, chan)))
        worst = max(worst, gap)
    return CheckResult(8, "joint concavity", worst <= 1e-9, f"{n} random pairs, max chord-minus-midpoint {worst:.2e} (tol 1e-9)")


def check_numerics(quick: bool = False) -> CheckResult:
    rng = np.random.default_rng(9002)
    n = 10_000
    xs = np.concatenate(
        [
            -math.exp(-1.0) + rng.uniform(0.0, 1.0, n // 4) * math.exp(-1.0),
            rng.uniform(-math.exp(-1.0), 10.0, n // 4),
            np.exp(rng.uniform(math.log(10.0), math.log(1e6), n - 2 * (n // 4) - 2)),
            [-math.exp(-1.0), 1e6],
        ]
    )
    worst_w = 0.0
    for x in xs:
        w = lambert_w0(x)
        worst_w = max(worst_w, abs(w * math.exp(w) - x) / max(1.0, abs(x)))
    worst_p = 0.0
    for _ in range(1000):
        t, e, eta, s = rng.uniform(1e-3, 1.0), rng.uniform(0.0, 100.0), rng.uniform(1e-3, 10.0), rng.uniform(1e-3, 1e3)
        base = hop_throughput(t, e, eta)
        worst_p = max(worst_p, abs(hop_throughput(s * t, s * e, eta) - s * base) / max(abs(s * base), 1e-300))
    count_ok = True
    for _ in range(200):
        lo, width, delta = rng.uniform(-5, 5), rng.uniform(0.1, 100.0), 10 ** rng.uniform(-9, -1)
        root = lo + rng.uniform(0, width)
        calls = [0]

        def pred(r, root=root):
            calls[0] += 1
            return r <= root

        bisection(pred, lo, lo + width, delta)
        count_ok &= calls[0] == bisection_steps(lo, lo + width, delta) + 1
        count_ok &= bisection_steps(lo, lo + width, delta) == math.ceil(math.log2(width / delta))
    ok = worst_w <= 1e-12 and worst_p <= 1e-12 and count_ok
    return CheckResult(
        9, "numerics", ok,
        f"Lambert W max residual {worst_w:.1e} over {len(xs)} samples; perspective scaling {worst_p:.1e}; bisection counts exact: {count_ok}",
    )


def check_energy_utilization(quick: bool = False) -> CheckResult:
    table = _sweep(quick, scenarios=["S2"], hops=[6], ip_db=[0.0, 10.0], realizations=500, seed=8004)
    u = {r.ip_db: r.utilization for r in table.rows}
    ok = u[10.0] >= 0.95 and u[0.0] <= 0.5
    return CheckResult(
        10, "energy utilization", ok,
        f"mean utilization {u[10.0]:.3f} at 10 dB (need >= 0.95), {u[0.0]:.3f} at 0 dB (need <= 0.5)",
    )


CHECKS = {
    1: check_oracle_equivalence,
    2: check_optimal_structure,
    3: check_constraint_validity,
    4: check_dominance,
    5: check_interference_saturation,
    6: check_scenario_ordering,
    7: check_hop_gains,
    8: check_joint_concavity,
    9: check_numerics,
    10: check_energy_utilization,
}
QUICK_SET = (1, 2, 3, 4, 8, 9)


def run_checks(numbers=None, quick: bool = False, report=print) -> list[CheckResult]:
    out = []
    for num in numbers or CHECKS:
        res = CHECKS[num](quick=quick)
        if report:
            report(res.line())
        out.append(res)
    return out
