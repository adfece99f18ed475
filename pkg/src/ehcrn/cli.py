"""Command line entry point: ``ehcrn {solve,sweep,validate,figure}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .acceptance import CHECKS, QUICK_SET, run_checks
from .harness import FIGURES, ExperimentConfig, figure_config, run_figure, run_sweep, solve
from .model import constraint_residuals
from .scenarios import SeededRng, build_topology, sample_channels


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--realizations", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--quick", action="store_true", help="small sample counts")

    p = argparse.ArgumentParser(prog="ehcrn", description="Time and power allocation for multi-hop EH cognitive radio")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve one fading block and print the result")
    s.add_argument("--realization", type=int, default=0, help="fading block index")
    sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep to CSV/JSON")
    v = sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    v.add_argument("--check", type=int, action="append", choices=sorted(CHECKS), help="run only these checks")
    f = sub.add_parser("figure", parents=[common], help="data series for a figure recipe")
    f.add_argument("figure", choices=sorted(FIGURES, key=lambda n: int(n[3:])))
    return p


def _config(args, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else (base or ExperimentConfig())
    cfg = cfg.with_env()
    updates = {k: getattr(args, k) for k in ("format", "seed", "realizations", "jobs") if getattr(args, k) is not None}
    if args.out:
        updates["out"] = args.out
    if args.quick:
        updates.setdefault("realizations", min(cfg.realizations, 20))
    return replace(cfg, **updates) if updates else cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    cfg = _config(args)
    scenario, k, pt, ip, alpha, xi = cfg.points()[0]
    sys_params = cfg.system(pt, ip, alpha, xi)
    chan = sample_channels(build_topology(scenario, k), sys_params, SeededRng(cfg.seed, args.realization))
    report = {
        "scenario": scenario, "K": k, "pt_db": pt, "ip_db": ip, "alpha": alpha, "xi": xi,
        "seed": cfg.seed, "realization": args.realization, "digest": chan.digest(), "results": [],
    }
    for alg in cfg.algorithms:
        res = solve(alg, sys_params, chan, cfg)
        entry = res.summary()
        entry["max_residual"] = constraint_residuals(res.allocation, sys_params, chan).max_relative()
        report["results"].append(entry)
    _emit(json.dumps(report, indent=2, default=float) + "\n", cfg.out)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    table = run_sweep(cfg)
    text = table.to_csv() if cfg.format == "csv" else table.to_json()
    if cfg.out:
        table.write(cfg.out, cfg.format)
    else:
        sys.stdout.write(text)
    failed = sum(r.failures for r in table.rows)
    if failed:
        print(f"warning: {failed} solver failures (see JSON 'failures')", file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    numbers = args.check or (QUICK_SET if args.quick else tuple(CHECKS))
    results = run_checks(numbers, quick=args.quick)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _cmd_figure(args) -> int:
    kind = FIGURES[args.figure][0]
    cfg = _config(args, figure_config(args.figure))
    _emit(run_figure(cfg, kind), cfg.out)
    return 0


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"solve": _cmd_solve, "sweep": _cmd_sweep, "validate": _cmd_validate, "figure": _cmd_figure}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"ehcrn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
