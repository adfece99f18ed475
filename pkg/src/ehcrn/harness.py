"""Monte Carlo sweeps over scenarios, hop counts, algorithms and system parameters.

Every realization index maps to one fading block per sweep point, and all
requested algorithms run on that same block, so algorithm comparisons are
paired. Results aggregate into one :class:`ResultRow` per sweep point and
algorithm and can be written as CSV or JSON.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np
from scipy import stats

from .baselines import etopa_solve, otepa_solve
from .jotpa import jotpa_solve
from .model import ChannelRealization, SolveResult, SystemParams, db_to_linear, harvested_energies
from .oracle import oracle_solve
from .scenarios import ScenarioId, SeededRng, build_topology, sample_channels

ALGORITHMS = ("jotpa", "otepa", "etopa", "oracle")
CSV_COLUMNS = ("scenario", "K", "algorithm", "pt_db", "ip_db", "alpha", "xi", "n", "mean_r", "std_r", "ci95", "utilization")
ENERGY_COLUMNS = (
    "scenario", "K", "algorithm", "pt_db", "ip_db", "alpha", "xi", "n", "su", "mean_tau", "mean_e", "mean_harvested",
)
SOLVER_KEYS = ("rel_tol", "bisection_tol", "fixed_point_tol", "max_iter", "tau_floor")
ENV_PREFIX = "EHCRN_"


@dataclass
class ExperimentConfig:
    """One sweep: the Cartesian product of every list field, N fading blocks per point.

    Defaults are the standard simulation setup: unit frame, xi = 0.8,
    P_t = 40 dB, I_p = 5 dB, path-loss exponent 2.
    """

    scenarios: list[str] = field(default_factory=lambda: ["S2"])
    hops: list[int] = field(default_factory=lambda: [3])
    algorithms: list[str] = field(default_factory=lambda: ["jotpa"])
    pt_db: list[float] = field(default_factory=lambda: [40.0])
    ip_db: list[float] = field(default_factory=lambda: [5.0])
    alpha: list[float] = field(default_factory=lambda: [2.0])
    xi: list[float] = field(default_factory=lambda: [0.8])
    realizations: int = 500
    seed: int = 2024
    frame_duration: float = 1.0
    noise_power: float = 1.0
    out: str | None = None
    format: str = "csv"
    jobs: int = 1
    solver: dict[str, float] = field(default_factory=dict)
    otepa_power_mode: str = "optimized"
    oracle_method: str = "grid"
    dump_samples: bool = False
    name: str = ""

    def __post_init__(self):
        self.scenarios = [ScenarioId.parse(s).label for s in self.scenarios]
        for name in ("scenarios", "hops", "algorithms", "pt_db", "ip_db", "alpha", "xi"):
            if not list(getattr(self, name)):
                raise ValueError(f"{name} must be a nonempty list")
        if any(int(k) < 1 for k in self.hops):
            raise ValueError("hop counts must be >= 1")
        self.hops = [int(k) for k in self.hops]
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        for name in ("pt_db", "ip_db", "alpha", "xi"):
            vals = [float(v) for v in getattr(self, name)]
            # -inf dB is the only way to ask for a zero interference budget.
            ok = [math.isfinite(v) or (name == "ip_db" and v == -math.inf) for v in vals]
            if not all(ok):
                raise ValueError(f"{name} entries must be finite")
            setattr(self, name, vals)
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        bad = set(self.solver) - set(SOLVER_KEYS)
        if bad:
            raise ValueError(f"unknown solver overrides {sorted(bad)}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def with_env(self, environ=None) -> "ExperimentConfig":
        """Apply ``EHCRN_REALIZATIONS``, ``EHCRN_SEED`` and ``EHCRN_JOBS`` overrides."""
        env = os.environ if environ is None else environ
        updates = {}
        for key in ("realizations", "seed", "jobs"):
            val = env.get(ENV_PREFIX + key.upper())
            if val is not None:
                updates[key] = int(val)
        return replace(self, **updates) if updates else self

    def system(self, pt_db: float, ip_db: float, alpha: float, xi: float) -> SystemParams:
        return SystemParams(
            pt_power=db_to_linear(pt_db),
            peak_interference=0.0 if ip_db == -math.inf else db_to_linear(ip_db),
            harvest_efficiency=xi,
            path_loss_exponent=alpha,
            frame_duration=self.frame_duration,
            noise_power=self.noise_power,
            **self.solver,
        )

    def points(self) -> list[tuple]:
        return list(itertools.product(self.scenarios, self.hops, self.pt_db, self.ip_db, self.alpha, self.xi))


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    K: int
    algorithm: str
    pt_db: float
    ip_db: float
    alpha: float
    xi: float
    n: int
    mean_r: float
    std_r: float
    ci95: float
    utilization: float
    failures: int = 0

    def csv_values(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


@dataclass(frozen=True)
class Sample:
    """Outcome of one algorithm on one fading block."""

    scenario: str
    K: int
    algorithm: str
    pt_db: float
    ip_db: float
    alpha: float
    xi: float
    realization: int
    r_star: float
    utilization: float
    digest: str
    ok: bool = True


@dataclass
class ResultTable:
    rows: list[ResultRow]
    samples: list[Sample] = field(default_factory=list)

    def select(self, **match) -> list[ResultRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow(row.csv_values())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2) + "\n"

    def samples_csv(self) -> str:
        buf = io.StringIO()
        cols = [f.name for f in fields(Sample)]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for s in self.samples:
            w.writerow([_fmt(getattr(s, c)) for c in cols])
        return buf.getvalue()

    def write(self, path, fmt: str = "csv") -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())
        if self.samples:
            path.with_suffix(".samples.csv").write_text(self.samples_csv())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_csv(path_or_text) -> list[ResultRow]:
    """Parse a file written by :meth:`ResultTable.write` back into rows."""
    text = Path(path_or_text).read_text() if not str(path_or_text).startswith("scenario,") else path_or_text
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        out.append(
            ResultRow(
                rec["scenario"], int(rec["K"]), rec["algorithm"],
                *(float(rec[c]) for c in ("pt_db", "ip_db", "alpha", "xi")),
                int(rec["n"]),
                *(float(rec[c]) for c in ("mean_r", "std_r", "ci95", "utilization")),
            )
        )
    return out


def summarize(values: Iterable[float]) -> tuple[float, float, float]:
    """Mean, sample standard deviation and 95% t-interval half-width (exact summation)."""
    x = [float(v) for v in values]
    n = len(x)
    if n == 0:
        return math.nan, math.nan, math.nan
    mean = math.fsum(x) / n
    if n == 1:
        return mean, 0.0, 0.0
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in x) / (n - 1))
    ci = float(stats.t.ppf(0.975, n - 1)) * std / math.sqrt(n)
    return mean, std, ci


def solve(algorithm: str, sys: SystemParams, chan: ChannelRealization, config: ExperimentConfig | None = None) -> SolveResult:
    """Dispatch one algorithm by name."""
    cfg = config or ExperimentConfig()
    if algorithm == "jotpa":
        return jotpa_solve(sys, chan)
    if algorithm == "otepa":
        return otepa_solve(sys, chan, power_mode=cfg.otepa_power_mode)
    if algorithm == "etopa":
        return etopa_solve(sys, chan)
    if algorithm == "oracle":
        method = cfg.oracle_method if chan.hop_count <= 3 or cfg.oracle_method != "grid" else "projected-subgradient"
        return oracle_solve(sys, chan, method=method)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _run_point(args) -> list[tuple[str, int, float, float, str, bool, np.ndarray, np.ndarray, np.ndarray]]:
    """All algorithms on realizations ``idx`` of one sweep point."""
    cfg, point, idx = args
    scenario, k, pt, ip, alpha, xi = point
    sys = cfg.system(pt, ip, alpha, xi)
    topo = build_topology(scenario, k)
    out = []
    for i in idx:
        chan = sample_channels(topo, sys, SeededRng(cfg.seed, i))
        digest = chan.digest()
        for alg in cfg.algorithms:
            try:
                res = solve(alg, sys, chan, cfg)
            except (ValueError, ArithmeticError, RuntimeError):
                out.append((alg, i, math.nan, math.nan, digest, False, None, None, None))
                continue
            a = res.allocation
            out.append((alg, i, res.r_star, res.utilization, digest, res.converged, a.tau, a.e, res.harvested))
    return out


def _map(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _tasks(cfg: ExperimentConfig) -> list:
    chunk = max(1, math.ceil(cfg.realizations / max(1, 4 * cfg.jobs)))
    tasks = []
    for point in cfg.points():
        for start in range(0, cfg.realizations, chunk):
            tasks.append((cfg, point, range(start, min(start + chunk, cfg.realizations))))
    return tasks


def _collect(cfg: ExperimentConfig) -> dict[tuple, list]:
    tasks = _tasks(cfg)
    results = _map(_run_point, tasks, cfg.jobs)
    per_point: dict[tuple, list] = {p: [] for p in cfg.points()}
    for (_, point, _), recs in zip(tasks, results):
        per_point[point].extend(recs)
    return per_point


def run_sweep(config: ExperimentConfig) -> ResultTable:
    """Aggregate R* and utilization per sweep point and algorithm.

    A realization where a solver raised, or flagged non-convergence, counts
    toward ``failures``; raised ones are left out of the mean, flagged ones keep
    their (feasible) witness value.
    """
    per_point = _collect(config)
    rows, samples = [], []
    for point, recs in per_point.items():
        scenario, k, pt, ip, alpha, xi = point
        for alg in config.algorithms:
            mine = sorted((r for r in recs if r[0] == alg), key=lambda r: r[1])
            good = [r for r in mine if not math.isnan(r[2])]
            mean, std, ci = summarize(r[2] for r in good)
            util = math.fsum(r[3] for r in good) / len(good) if good else math.nan
            failures = sum(1 for r in mine if not r[5])
            rows.append(ResultRow(scenario, k, alg, pt, ip, alpha, xi, len(good), mean, std, ci, util, failures))
            if config.dump_samples:
                samples.extend(
                    Sample(scenario, k, alg, pt, ip, alpha, xi, r[1], r[2], r[3], r[4], r[5]) for r in mine
                )
    return ResultTable(rows, samples)


@dataclass(frozen=True)
class EnergyRow:
    """Harvested energy, spent energy and slot time of one SU."""

    su: int
    harvested: float
    allocated: float
    time: float


def energy_report(sys: SystemParams, chan: ChannelRealization, result: SolveResult) -> list[EnergyRow]:
    """Per-SU ledger for the transmitting SUs, with E_k evaluated at the returned times."""
    a = result.allocation
    harvested = harvested_energies(sys, chan, a.tau)
    return [
        EnergyRow(k + 1, float(harvested[k]), float(min(a.e[k], harvested[k])), float(a.tau[k + 1]))
        for k in range(chan.hop_count)
    ]


@dataclass(frozen=True)
class EnergySeriesRow:
    scenario: str
    K: int
    algorithm: str
    pt_db: float
    ip_db: float
    alpha: float
    xi: float
    n: int
    su: int
    mean_tau: float
    mean_e: float
    mean_harvested: float


def run_energy_sweep(config: ExperimentConfig) -> list[EnergySeriesRow]:
    """Per-SU averages of slot time, spent energy and harvested energy."""
    per_point = _collect(config)
    out = []
    for point, recs in per_point.items():
        scenario, k, pt, ip, alpha, xi = point
        for alg in config.algorithms:
            good = [r for r in recs if r[0] == alg and r[6] is not None]
            n = len(good)
            for s in range(k):
                out.append(
                    EnergySeriesRow(
                        scenario, k, alg, pt, ip, alpha, xi, n, s + 1,
                        math.fsum(r[6][s + 1] for r in good) / n if n else math.nan,
                        math.fsum(r[7][s] for r in good) / n if n else math.nan,
                        math.fsum(r[8][s] for r in good) / n if n else math.nan,
                    )
                )
    return out


def energy_csv(rows: list[EnergySeriesRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ENERGY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in ENERGY_COLUMNS])
    return buf.getvalue()


def energy_json(rows: list[EnergySeriesRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def _recipe(**kw) -> ExperimentConfig:
    return ExperimentConfig(**kw)


# name -> (kind, config). "rate" recipes go through run_sweep, "energy" ones through run_energy_sweep.
FIGURES: dict[str, tuple[str, Callable[[], ExperimentConfig]]] = {
    "fig3": ("rate", lambda: _recipe(name="fig3", scenarios=["S1", "S2", "S3"], hops=[1, 2, 3, 4, 5, 6], ip_db=[10.0])),
    "fig4": ("energy", lambda: _recipe(name="fig4", scenarios=["S1", "S2", "S3"], hops=[6], ip_db=[10.0])),
    "fig5": ("rate", lambda: _recipe(name="fig5", scenarios=["S1", "S2", "S3"], hops=[1, 2, 3, 4, 5, 6], ip_db=[0.0])),
    "fig6": ("energy", lambda: _recipe(name="fig6", scenarios=["S1", "S2", "S3"], hops=[6], ip_db=[0.0])),
    "fig7": (
        "rate",
        lambda: _recipe(name="fig7", hops=[2, 4, 6], ip_db=[float(v) for v in range(-30, 61, 10)]),
    ),
    "fig8": (
        "rate",
        lambda: _recipe(
            name="fig8",
            algorithms=["jotpa", "otepa", "etopa"],
            pt_db=[float(v) for v in range(20, 51, 5)],
            xi=[0.5, 0.8],
        ),
    ),
    "fig9": ("energy", lambda: _recipe(name="fig9", algorithms=["jotpa", "otepa", "etopa"])),
    "fig10": (
        "rate",
        lambda: _recipe(name="fig10", hops=[3, 4, 5], algorithms=["jotpa", "otepa", "etopa"], alpha=[2.0, 2.5, 3.0, 3.5, 4.0]),
    ),
}


def figure_config(name: str) -> ExperimentConfig:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    return FIGURES[name][1]()


def run_figure(config: ExperimentConfig, kind: str) -> str:
    """Run a recipe and render it in the configured format."""
    if kind == "energy":
        rows = run_energy_sweep(config)
        return energy_csv(rows) if config.format == "csv" else energy_json(rows)
    table = run_sweep(config)
    return table.to_csv() if config.format == "csv" else table.to_json()
