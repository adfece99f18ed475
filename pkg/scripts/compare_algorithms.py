#!/usr/bin/env python3
"""Paired comparison of JOTPA, OTEPA and ETOPA against the brute-force oracle.

Every algorithm sees the same fading block per realization. The oracle grid
search is only available for up to three hops.
"""
import argparse

import numpy as np

from ehcrn import (
    SeededRng,
    SystemParams,
    build_topology,
    constraint_residuals,
    etopa_solve,
    jotpa_solve,
    oracle_solve,
    otepa_solve,
    sample_channels,
)
from ehcrn.model import db_to_linear

SOLVERS = {"jotpa": jotpa_solve, "otepa": otepa_solve, "etopa": etopa_solve}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="S2")
    parser.add_argument("--hops", type=int, default=3)
    parser.add_argument("--realizations", type=int, default=20)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--pt-db", type=float, default=40.0)
    parser.add_argument("--ip-db", type=float, default=5.0)
    args = parser.parse_args(argv)

    sys = SystemParams(pt_power=db_to_linear(args.pt_db), peak_interference=db_to_linear(args.ip_db))
    topo = build_topology(args.scenario, args.hops)
    use_oracle = args.hops <= 3
    names = list(SOLVERS) + (["oracle"] if use_oracle else [])
    rates = {n: [] for n in names}
    util = {n: [] for n in names}
    worst = 0.0
    print("realization," + ",".join(names))
    for r in range(args.realizations):
        chan = sample_channels(topo, sys, SeededRng(args.seed, r))
        results = {n: f(sys, chan) for n, f in SOLVERS.items()}
        if use_oracle:
            results["oracle"] = oracle_solve(sys, chan)
        for n, res in results.items():
            rates[n].append(res.r_star)
            util[n].append(res.utilization)
            worst = max(worst, constraint_residuals(res.allocation, sys, chan).max_relative())
        print(f"{r}," + ",".join(f"{results[n].r_star:.6g}" for n in names))

    print()
    for n in names:
        print(f"{n:>6}: mean R* {np.mean(rates[n]):.5g}  mean utilization {np.mean(util[n]):.3f}")
    if use_oracle:
        gap = np.abs(np.array(rates["jotpa"]) - rates["oracle"]) / np.maximum(rates["oracle"], 1e-300)
        print(f"largest relative JOTPA/oracle gap: {gap.max():.2e}")
    print(f"largest relative constraint residual: {worst:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
