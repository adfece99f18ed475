#!/usr/bin/env python3
"""Run the bundled experiment recipes and write one result file per recipe."""
import argparse
import sys
import time
from pathlib import Path

from ehcrn.harness import FIGURES, ExperimentConfig, run_figure

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("names", nargs="*", help=f"recipes to run (default: all of {sorted(FIGURES)})")
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--realizations", type=int, help="override the sample size")
    parser.add_argument("--jobs", type=int, help="worker processes")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    args = parser.parse_args(argv)

    names = args.names or sorted(FIGURES, key=lambda n: int(n[3:]))
    unknown = [n for n in names if n not in FIGURES]
    if unknown:
        parser.error(f"unknown recipe(s) {unknown}")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        kind = FIGURES[name][0]
        cfg = ExperimentConfig.load(CONFIG_DIR / f"{name}.json").to_dict()
        cfg["format"] = args.format
        if args.realizations is not None:
            cfg["realizations"] = args.realizations
        if args.jobs is not None:
            cfg["jobs"] = args.jobs
        start = time.perf_counter()
        text = run_figure(ExperimentConfig(**cfg), kind)
        path = args.out_dir / f"{name}.{args.format}"
        path.write_text(text)
        print(f"{name}: {kind} sweep -> {path} ({time.perf_counter() - start:.1f} s)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
