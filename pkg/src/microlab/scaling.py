"""Parameter sweeps over the regularization strength, exponent fitting, and
the two-sided scaling-band check.

A sweep evaluates the closed-form competitors (flat field always, branched
microstructure when epsilon <= theta^p) at each epsilon, optionally refines
with the grid minimizer, and flags the cheapest row per epsilon as "best".
The best curve is an upper bound for the infimum; fitting its log-log slope
against epsilon is how the predicted exponent p/(p+1) is checked.
"""

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .constructions import branching_profile, constant_profile
from .energy import EnergyBreakdown, EnergyParams, energy_analytic, energy_grid
from .minimizer import INIT_BRANCHING, INIT_CONSTANT, MinimizeOptions, minimize

__all__ = [
    "SweepRecord",
    "SandwichReport",
    "CONSTRUCTION_CONSTANT",
    "CONSTRUCTION_BRANCHING",
    "CONSTRUCTION_MINIMIZER",
    "sweep",
    "write_sweep_csv",
    "read_sweep_csv",
    "fit_exponent",
    "sandwich_check",
]

CONSTRUCTION_CONSTANT = "constant"
CONSTRUCTION_BRANCHING = "branching"
CONSTRUCTION_MINIMIZER = "minimizer"

_KNOWN = (CONSTRUCTION_CONSTANT, CONSTRUCTION_BRANCHING)

CSV_COLUMNS = ["p", "theta", "epsilon", "sigma", "construction",
               "elastic_d1", "elastic_d2", "interfacial", "total",
               "best_flag"]


@dataclass
class SweepRecord:
    p: float
    theta: float
    epsilon: float
    sigma: float
    construction: str
    breakdown: Optional[EnergyBreakdown]
    best: bool = False
    wall_time: float = 0.0
    error: Optional[str] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.breakdown is None and self.error is None:
            raise ValueError("record needs a breakdown or an error message")

    @property
    def total(self) -> float:
        if self.breakdown is None:
            raise ValueError(f"record {self.construction!r} failed: {self.error}")
        return self.breakdown.total


def _evaluate_point(p: float, theta: float, eps: float,
                    constructions: Sequence[str],
                    refine: bool,
                    minimizer_options: Optional[MinimizeOptions]) -> List[SweepRecord]:
    params = EnergyParams.unrescaled(p, theta, eps)
    sigma = eps / theta ** p
    rows: List[SweepRecord] = []

    def attempt(label: str, fn) -> None:
        t0 = time.perf_counter()
        try:
            bd = fn()
        except Exception as exc:  # record the failure, keep sweeping
            rows.append(SweepRecord(p, theta, eps, sigma, label, None,
                                    wall_time=time.perf_counter() - t0,
                                    error=f"{type(exc).__name__}: {exc}"))
            return
        rows.append(SweepRecord(p, theta, eps, sigma, label, bd,
                                wall_time=time.perf_counter() - t0))

    if CONSTRUCTION_CONSTANT in constructions:
        attempt(CONSTRUCTION_CONSTANT,
                lambda: energy_analytic(constant_profile(), params))
    if CONSTRUCTION_BRANCHING in constructions and eps <= theta ** p:
        attempt(CONSTRUCTION_BRANCHING,
                lambda: energy_analytic(branching_profile(params)[0], params))
    if refine:
        opts = minimizer_options or MinimizeOptions(
            nx=48, ny=48, max_iter=60, delta_schedule=(0.1, 0.01))
        init = (INIT_BRANCHING if eps <= theta ** p else INIT_CONSTANT)

        def run_minimizer() -> EnergyBreakdown:
            res = minimize(params, opts, init)
            return energy_grid(res.field, params)

        attempt(CONSTRUCTION_MINIMIZER, run_minimizer)

    ok = [r for r in rows if r.breakdown is not None]
    if ok:
        min(ok, key=lambda r: r.breakdown.total).best = True
    return rows


def sweep(p: float, theta: float, eps_list: Sequence[float],
          constructions: Optional[Set[str]] = None,
          refine_with_minimizer: bool = False,
          minimizer_options: Optional[MinimizeOptions] = None,
          threads: int = 1) -> List[SweepRecord]:
    """Evaluate the requested constructions at every epsilon.  Failures are
    captured per row; output is ordered by epsilon regardless of threads."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValueError("eps_list must be nonempty and positive")
    if sorted(eps_list) != eps_list:
        raise ValueError("eps_list must be sorted ascending")
    if constructions is None:
        constructions = {CONSTRUCTION_CONSTANT, CONSTRUCTION_BRANCHING}
    if not constructions:
        raise ValueError("empty construction set: nothing to evaluate")
    unknown = set(constructions) - set(_KNOWN)
    if unknown:
        raise ValueError(f"unknown constructions: {sorted(unknown)}")
    labels = sorted(constructions)

    def work(eps: float) -> List[SweepRecord]:
        return _evaluate_point(p, theta, eps, labels,
                               refine_with_minimizer, minimizer_options)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, eps_list))
    else:
        chunks = [work(e) for e in eps_list]
    return [row for chunk in chunks for row in chunk]


# ---------------------------------------------------------------------------
# CSV round trip (pinned column order, %.17g floats)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "%.17g" % x


def write_sweep_csv(records: Iterable[SweepRecord], path: str) -> None:
    """Failed rows carry no numbers, so only successful ones are written."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            if r.breakdown is None:
                continue
            b = r.breakdown
            w.writerow([_fmt(r.p), _fmt(r.theta), _fmt(r.epsilon),
                        _fmt(r.sigma), r.construction, _fmt(b.elastic_d1),
                        _fmt(b.elastic_d2), _fmt(b.interfacial),
                        _fmt(b.total), int(r.best)])


def read_sweep_csv(path: str) -> List[SweepRecord]:
    out: List[SweepRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected sweep CSV header: {reader.fieldnames}")
        for row in reader:
            bd = EnergyBreakdown(float(row["elastic_d1"]),
                                 float(row["elastic_d2"]),
                                 float(row["interfacial"]),
                                 float(row["total"]), None)
            out.append(SweepRecord(float(row["p"]), float(row["theta"]),
                                   float(row["epsilon"]), float(row["sigma"]),
                                   row["construction"], bd,
                                   best=bool(int(row["best_flag"]))))
    return out


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------

def _best_per_eps(records: Sequence[SweepRecord]) -> List[Tuple[float, float]]:
    by_eps = {}
    for r in records:
        if r.breakdown is None:
            continue
        cur = by_eps.get(r.epsilon)
        if cur is None or r.breakdown.total < cur:
            by_eps[r.epsilon] = r.breakdown.total
    return sorted(by_eps.items())


def _uniform(records: Sequence[SweepRecord], attr: str) -> float:
    vals = {getattr(r, attr) for r in records}
    if len(vals) != 1:
        raise ValueError(f"records mix several values of {attr}: {sorted(vals)}")
    return vals.pop()


def fit_exponent(records: Sequence[SweepRecord]) -> Tuple[float, float, float]:
    """Least-squares slope of log(best energy) vs log(epsilon), restricted to
    the deep branching regime epsilon <= theta^p / 16.  Returns
    (slope, intercept, max abs log-deviation)."""
    if not records:
        raise ValueError("no records to fit")
    p = _uniform(records, "p")
    theta = _uniform(records, "theta")
    cutoff = theta ** p / 16.0
    pts = [(e, b) for e, b in _best_per_eps(records) if e <= cutoff]
    if len(pts) < 4:
        raise ValueError(
            f"need at least 4 points with epsilon <= theta^p/16, got {len(pts)}")
    if any(b <= 0 for _, b in pts):
        raise ValueError("nonpositive best energy in fit window")
    lx = np.log([e for e, _ in pts])
    ly = np.log([b for _, b in pts])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return float(slope), float(intercept), residual


@dataclass
class SandwichReport:
    ratios: List[Tuple[float, float]]  # (epsilon, best / envelope)
    min_ratio: float
    max_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "ratios": [{"epsilon": e, "ratio": r} for e, r in self.ratios],
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "passed": self.passed,
        }


def sandwich_check(records: Sequence[SweepRecord]) -> SandwichReport:
    """Ratio of the best energy to theta^p * min{1, (eps/theta^p)^(p/(p+1))}
    per epsilon.  Pass = the band is narrow (max/min <= 100) and the whole
    curve sits below 100x the envelope.  Only the upper side is rigorous —
    best is an upper bound; the lower side is a plausibility check."""
    p = _uniform(records, "p")
    theta = _uniform(records, "theta")
    best = _best_per_eps(records)
    if not best:
        raise ValueError("no successful records")
    ratios = []
    for eps, val in best:
        envelope = theta ** p * min(1.0, (eps / theta ** p) ** (p / (p + 1.0)))
        ratios.append((eps, val / envelope))
    rvals = [r for _, r in ratios]
    lo, hi = min(rvals), max(rvals)
    passed = (hi / lo <= 100.0) and (hi <= 100.0) and math.isfinite(hi)
    return SandwichReport(ratios, lo, hi, passed)
