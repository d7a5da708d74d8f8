"""Ensembles over random media: periods, mean-square displacement, fits.

Realization ``i`` of an ensemble draws its medium from
``derive_seed(master_seed, i)``, so results do not depend on how the runs are
scheduled across threads.  The compiled kernel releases the GIL, which is
what makes a plain thread pool worthwhile here.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from .dynamics import DEFAULT_STEP_CAP, PERIODIC
from .engine import FastRun, simulate
from .hashing import derive_seed
from .medium import LEFT, RIGHT, MediumSpec
from .structures import ANNIHILATION, REFLECTOR_CONFIRMED, analyze

MODELS = ("iid", "family", "admissible", "all-left", "all-right")


class AllRunsCapped(RuntimeError):
    pass


class DegenerateRange(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    model: str = "iid"
    p: Optional[float] = 0.5
    realizations: int = 200
    step_cap: int = min(DEFAULT_STEP_CAP, 10_000_000)
    master_seed: int = 0
    msd_horizon: int = 3000
    record_every: int = 10
    color_class: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.step_cap < 1 or self.msd_horizon < 1 or self.record_every < 1:
            raise ValueError("step_cap, msd_horizon and record_every must be >= 1")

    def seed(self, index: int) -> int:
        return derive_seed(self.master_seed, index)

    def medium(self, index: int) -> MediumSpec:
        seed = self.seed(index)
        if self.model == "iid":
            return MediumSpec.iid(self.p, seed)
        if self.model == "family":
            return MediumSpec.example5(self.p, seed)
        if self.model == "admissible":
            return MediumSpec.admissible(self.p, seed, self.color_class)
        return MediumSpec.homogeneous(LEFT if self.model == "all-left" else RIGHT)


@dataclass
class RunSummary:
    index: int
    seed: int
    outcome: str
    period: Optional[int]
    steps: int
    origin_returns: int
    reflectors: Optional[int] = None
    annihilations: Optional[int] = None


@dataclass
class SeriesResult:
    times: list
    values: list
    counts: list
    summary: dict = field(default_factory=dict)


def _map(fn: Callable, items: Sequence, threads: Optional[int]) -> list:
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _summarize(spec: EnsembleSpec, index: int, res: FastRun, structures: bool) -> RunSummary:
    s = RunSummary(index, spec.seed(index), res.kind, res.period, res.steps,
                   len(res.origin_returns))
    if structures:
        an = analyze(res.log)
        s.reflectors = an.count(REFLECTOR_CONFIRMED)
        s.annihilations = an.count(ANNIHILATION)
    return s


def run_ensemble(spec: EnsembleSpec, threads: Optional[int] = None,
                 structures: bool = False) -> list[RunSummary]:
    """Run every realization to periodicity or the cap.

    With ``structures=True`` each trajectory is also fed to the structure
    analyzer (slow: it is pure Python and needs the whole position log).
    """
    def one(i):
        res = simulate(spec.medium(i), spec.step_cap, log=structures)
        return _summarize(spec, i, res, structures)

    return _map(one, list(range(spec.realizations)), threads)


def period_summary(runs: Sequence[RunSummary], cap: int) -> dict:
    periods = [r.period for r in runs if r.outcome == PERIODIC]
    n = len(runs)
    capped = n - len(periods)
    if not periods:
        raise AllRunsCapped(f"none of {n} runs became periodic within {cap} steps")
    combined = float(np.median([r.period if r.outcome == PERIODIC else cap for r in runs]))
    return {
        "meanPeriod": float(np.mean(periods)),
        "medianPeriod": float(np.median(periods)),
        "stdPeriod": float(np.std(periods, ddof=1)) if len(periods) > 1 else 0.0,
        "cappedFraction": capped / n,
        "n_periodic": len(periods),
        "combined": combined,
    }


def average_period(spec: EnsembleSpec, threads: Optional[int] = None,
                   runs: Optional[Sequence[RunSummary]] = None) -> SeriesResult:
    """Mean period over the runs that became periodic.

    Capped runs never enter the mean; they show up in ``cappedFraction`` and
    in ``combined``, the median over all runs with capped ones counted at the
    cap.
    """
    runs = list(runs) if runs is not None else run_ensemble(spec, threads)
    summary = period_summary(runs, spec.step_cap)
    periods = [r.period for r in runs if r.outcome == PERIODIC]
    return SeriesResult([spec.p], [summary["meanPeriod"]], [len(periods)], summary)


def sample_times(horizon: int, every: int) -> np.ndarray:
    t = np.arange(0, horizon + 1, every, dtype=np.int64)
    if t[-1] != horizon:
        t = np.append(t, horizon)
    return t


def msd_series(spec: EnsembleSpec, threads: Optional[int] = None,
               times: Optional[Sequence[int]] = None) -> SeriesResult:
    """Ensemble mean of |r(t)|^2 at the recorded times.

    Runs continue past their first recurrence, so every realization
    contributes at every time up to the horizon.
    """
    st = (np.asarray(times, dtype=np.int64) if times is not None
          else sample_times(spec.msd_horizon, spec.record_every))
    horizon = int(st[-1])

    def one(i):
        if horizon == 0:
            return np.zeros(st.size)
        res = simulate(spec.medium(i), horizon, stop_on_period=False, sample_times=st)
        return res.samples

    rows = _map(one, list(range(spec.realizations)), threads)
    total = np.zeros(st.size)
    for r in rows:
        total += r
    values = total / spec.realizations
    return SeriesResult([int(t) for t in st], [float(v) for v in values],
                        [spec.realizations] * st.size, {})


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float
    points: int


def powerlaw_fit(times: Sequence[float], values: Sequence[float],
                 t_min: float, t_max: float) -> PowerLawFit:
    """Least-squares line through (log t, log value) for t in [t_min, t_max]."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= t_min) & (t <= t_max)
    t, v = t[sel], v[sel]
    if t.size < 3:
        raise DegenerateRange(f"only {t.size} points in [{t_min}, {t_max}]")
    if np.any(t <= 0) or np.any(v <= 0):
        raise DegenerateRange("power-law fit needs positive times and values")
    x, y = np.log(t), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return PowerLawFit(float(slope), float(math.exp(intercept)),
                       float(np.sqrt(np.mean(resid ** 2))), int(t.size))


def sweep(base: EnsembleSpec, grid: Sequence[float],
          threads: Optional[int] = None) -> list[dict]:
    """``average_period`` summary per p; grids that leave every run capped
    report NaN statistics rather than aborting the sweep."""
    rows = []
    for p in grid:
        spec = EnsembleSpec(base.model, p, base.realizations, base.step_cap,
                            base.master_seed, base.msd_horizon, base.record_every,
                            base.color_class)
        runs = run_ensemble(spec, threads)
        try:
            s = period_summary(runs, spec.step_cap)
        except AllRunsCapped:
            s = {"meanPeriod": math.nan, "medianPeriod": math.nan, "cappedFraction": 1.0,
                 "n_periodic": 0, "combined": float(spec.step_cap)}
        rows.append({"p": p, **s})
    return rows


# -- CSV ------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_periods_csv(fh: TextIO, runs: Sequence[RunSummary], p) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["seed_index", "p", "outcome", "period", "origin_returns",
                "reflectors", "annihilations"])
    for r in runs:
        w.writerow([r.index, _fmt(p), r.outcome, _fmt(r.period), r.origin_returns,
                    _fmt(r.reflectors), _fmt(r.annihilations)])


def write_msd_csv(fh: TextIO, series: SeriesResult) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "mean_sq_disp", "n"])
    for t, v, n in zip(series.times, series.values, series.counts):
        w.writerow([t, _fmt(float(v)), n])


def write_tav_csv(fh: TextIO, rows: Sequence[dict]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["p", "mean_period", "median_period", "capped_fraction", "n_periodic"])
    for r in rows:
        w.writerow([_fmt(float(r["p"])), _fmt(r["meanPeriod"]), _fmt(r["medianPeriod"]),
                    _fmt(float(r["cappedFraction"])), r["n_periodic"]])
