"""Experiment orchestration: interval sweeps and ensemble averaging.

:func:`epps_sweep` runs a set of estimators over a list of return
intervals for one instrument pair and collects the results in an
:class:`EppsCurve`; per-cell estimator failures are recorded, not
fatal.  :func:`ensemble_average` normalizes many curves by their own
anchor value and averages them with dispersion bars.

Cells of a sweep execute in a thread pool whose size is bounded by the
``EPPS_THREADS`` environment variable (default 1); every cell is a
pure function and results merge by fixed index, so output is
bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

import numpy as np

from . import estimators as est
from ._core import (
    ASYNC,
    COMBINED,
    COMBINED_APPROX,
    ESTIMATOR_KINDS,
    HAYASHI_YOSHIDA,
    PLAIN,
    TICK,
    TICK_APPROX,
)
from .errors import DataError, EppsError, ParseError
from .market_data import TickSeries, previous_tick_sample
from .overlap import DEFAULT_WEIGHT_CAP, compute_overlaps, overlap_stats
from .tick_correction import (
    DEFAULT_MIN_CHANGES,
    TRIANGULAR,
    DiscretizationMoments,
    build_histogram,
    corr_tick,
    corr_tick_approx,
    corrected_sigma,
    estimate_moments,
)

GRID_ESTIMATORS = (PLAIN, ASYNC, TICK, TICK_APPROX, COMBINED, COMBINED_APPROX)
MOMENT_ESTIMATORS = frozenset({TICK, TICK_APPROX, COMBINED, COMBINED_APPROX})

CURVE_HEADER = (
    "dt,estimator,value,n_samples,mean_frac_overlap,"
    "sigma_raw_1,sigma_hat_1,sigma_raw_2,sigma_hat_2"
)
ENSEMBLE_HEADER = "dt,estimator,mean_norm,two_sigma,n_pairs"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else the EPPS_THREADS variable, else 1."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("EPPS_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return 1


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class SweepConfig:
    """Knobs shared by every cell of a sweep."""

    w_max: float = DEFAULT_WEIGHT_CAP
    prior: str = TRIANGULAR
    moments: str = "auto"  # auto | interpolated | uniform_null | zero
    min_hist_changes: int = DEFAULT_MIN_CHANGES
    include_all: bool = False

    def __post_init__(self):
        if self.moments not in ("auto", "interpolated", "uniform_null", "zero"):
            raise ValueError(f"unknown moments mode {self.moments!r}")


@dataclass(frozen=True)
class CellResult:
    """One (dt, estimator) cell: a value or a recorded failure."""

    dt: int
    estimator: str
    value: float
    n_samples: int
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class DtStats:
    """Per-interval diagnostics shared by all estimators of that dt."""

    dt: int
    n_samples: int
    mean_frac_overlap: float
    sigma_raw_1: float
    sigma_hat_1: float
    sigma_raw_2: float
    sigma_hat_2: float


@dataclass
class EppsCurve:
    """Estimator values per return interval for one instrument pair."""

    dts: tuple[int, ...]
    estimators: tuple[str, ...]
    cells: dict[tuple[int, str], CellResult]
    stats: dict[int, DtStats]

    def value(self, dt: int, estimator: str) -> float:
        return self.cells[(dt, estimator)].value

    def errors(self) -> list[CellResult]:
        return [c for c in self.cells.values() if not c.ok]

    def to_csv(self, sink: IO[str]) -> None:
        sink.write(CURVE_HEADER + "\n")
        for dt in self.dts:
            s = self.stats[dt]
            for name in self.estimators:
                cell = self.cells[(dt, name)]
                sink.write(
                    f"{dt},{name},{_fmt(cell.value)},{cell.n_samples},"
                    f"{_fmt(s.mean_frac_overlap)},{_fmt(s.sigma_raw_1)},"
                    f"{_fmt(s.sigma_hat_1)},{_fmt(s.sigma_raw_2)},{_fmt(s.sigma_hat_2)}\n"
                )

    @classmethod
    def from_csv(cls, source: IO[str]) -> "EppsCurve":
        header = source.readline().strip()
        if header != CURVE_HEADER:
            raise ParseError(f"unexpected curve header {header!r}", line=1)
        dts: list[int] = []
        names: list[str] = []
        cells: dict[tuple[int, str], CellResult] = {}
        stats: dict[int, DtStats] = {}
        for lineno, line in enumerate(source, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ParseError(f"expected 9 fields, got {len(parts)}", line=lineno)
            dt = int(parts[0])
            name = parts[1]
            value = float(parts[2])
            n_samples = int(parts[3])
            if dt not in dts:
                dts.append(dt)
                stats[dt] = DtStats(
                    dt=dt,
                    n_samples=n_samples,
                    mean_frac_overlap=float(parts[4]),
                    sigma_raw_1=float(parts[5]),
                    sigma_hat_1=float(parts[6]),
                    sigma_raw_2=float(parts[7]),
                    sigma_hat_2=float(parts[8]),
                )
            if name not in names:
                names.append(name)
            error = None if math.isfinite(value) else "failed (from csv)"
            cells[(dt, name)] = CellResult(
                dt=dt, estimator=name, value=value, n_samples=n_samples, error=error
            )
        return cls(dts=tuple(dts), estimators=tuple(names), cells=cells, stats=stats)


def _auto_moments_mode(series1: TickSeries, series2: TickSeries, cfg: SweepConfig) -> str:
    if cfg.moments != "auto":
        return cfg.moments
    if series1.is_tick_discrete() and series2.is_tick_discrete():
        return "interpolated"
    return "zero"


def _cell_moments(
    samples, mode: str, cfg: SweepConfig
) -> tuple[DiscretizationMoments, DiscretizationMoments]:
    if mode == "uniform_null":
        return (
            DiscretizationMoments.uniform_null(samples.q1),
            DiscretizationMoments.uniform_null(samples.q2),
        )
    if mode == "zero":
        return (
            DiscretizationMoments.zero(samples.q1),
            DiscretizationMoments.zero(samples.q2),
        )
    inc = samples.included
    h1 = build_histogram(samples.k1[inc], samples.dt, samples.q1, cfg.min_hist_changes)
    h2 = build_histogram(samples.k2[inc], samples.dt, samples.q2, cfg.min_hist_changes)
    return (
        estimate_moments(h1, prior=cfg.prior),
        estimate_moments(h2, prior=cfg.prior),
    )


def _sweep_dt(
    series1: TickSeries,
    series2: TickSeries,
    dt: int,
    names: Sequence[str],
    cfg: SweepConfig,
    moments_mode: str,
) -> tuple[dict[tuple[int, str], CellResult], DtStats]:
    origin = max(series1.first_time, series2.first_time)
    end = min(series1.last_time, series2.last_time)
    n_points = (end - origin) // dt

    cells: dict[tuple[int, str], CellResult] = {}

    def fail_all(message: str) -> tuple[dict, DtStats]:
        for name in names:
            cells[(dt, name)] = CellResult(dt, name, math.nan, 0, message)
        empty = DtStats(dt, 0, math.nan, math.nan, math.nan, math.nan, math.nan)
        return cells, empty

    if n_points < 2:
        return fail_all(f"data span supports {n_points} grid steps at dt={dt}, need 2")

    path1 = previous_tick_sample(series1, origin, dt, int(n_points))
    path2 = previous_tick_sample(series2, origin, dt, int(n_points))
    samples = compute_overlaps(path1, path2, w_max=cfg.w_max)
    if samples.n_included == 0:
        return fail_all("no overlapping samples")
    ostats = overlap_stats(samples)

    # sigma diagnostics want moments even when no tick estimator runs
    moments_error: str | None = None
    moments1 = moments2 = None
    try:
        moments1, moments2 = _cell_moments(samples, moments_mode, cfg)
    except EppsError as err:
        moments_error = f"{type(err).__name__}: {err}"

    inc = samples.included
    sigma = {}
    for side, (r, s, k, m) in enumerate(
        (
            (samples.r1[inc], samples.s1[inc], samples.k1[inc], moments1),
            (samples.r2[inc], samples.s2[inc], samples.k2[inc], moments2),
        ),
        start=1,
    ):
        d = r - np.mean(r)
        sigma[f"raw_{side}"] = float(np.sqrt(np.mean(d * d)))
        sigma[f"hat_{side}"] = math.nan
        if m is not None:
            try:
                sigma[f"hat_{side}"] = corrected_sigma(r, s, k, m, dt).sigma_hat
            except EppsError:
                pass

    def run(name: str) -> CellResult:
        try:
            if name == PLAIN:
                e = est.pearson(samples, include_all=cfg.include_all)
            elif name == ASYNC:
                e = est.corr_async(samples)
            elif name in MOMENT_ESTIMATORS:
                if moments_error is not None:
                    return CellResult(dt, name, math.nan, 0, moments_error)
                func = {
                    TICK: corr_tick,
                    TICK_APPROX: corr_tick_approx,
                    COMBINED: est.corr_combined,
                    COMBINED_APPROX: est.corr_combined_approx,
                }[name]
                e = func(samples, moments1, moments2)
            else:
                raise ValueError(f"unknown estimator {name!r}")
            return CellResult(dt, name, e.value, e.n_samples, None)
        except EppsError as err:
            return CellResult(dt, name, math.nan, 0, f"{type(err).__name__}: {err}")

    for name in names:
        cells[(dt, name)] = run(name)

    stats = DtStats(
        dt=dt,
        n_samples=samples.n_included,
        mean_frac_overlap=ostats.mean_fractional_overlap,
        sigma_raw_1=sigma["raw_1"],
        sigma_hat_1=sigma["hat_1"],
        sigma_raw_2=sigma["raw_2"],
        sigma_hat_2=sigma["hat_2"],
    )
    return cells, stats


def epps_sweep(
    series1: TickSeries,
    series2: TickSeries,
    dt_list: Sequence[int],
    estimator_names: Sequence[str] = GRID_ESTIMATORS,
    config: SweepConfig = SweepConfig(),
    threads: int | None = None,
) -> EppsCurve:
    """Run the requested estimators over every return interval.

    The shared grid starts at the first timestamp where both
    instruments have traded and ends at the earlier of the two last
    trades.  The Hayashi-Yoshida estimator, having no grid, is
    computed once over that whole window and repeated per row.
    Estimator failures are recorded in their cells and do not abort
    the sweep.
    """
    if not dt_list:
        raise ValueError("dt_list must not be empty")
    dts = [int(dt) for dt in dt_list]
    if sorted(set(dts)) != dts:
        raise ValueError("dt_list must be strictly increasing")
    names = list(estimator_names)
    for name in names:
        if name not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator {name!r}")

    moments_mode = _auto_moments_mode(series1, series2, config)
    grid_names = [n for n in names if n != HAYASHI_YOSHIDA]

    n_workers = resolve_threads(threads)
    tasks: list[Callable[[], tuple[dict, DtStats]]] = [
        (lambda d=dt: _sweep_dt(series1, series2, d, grid_names, config, moments_mode))
        for dt in dts
    ]
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(lambda f: f(), tasks))
    else:
        outcomes = [f() for f in tasks]

    cells: dict[tuple[int, str], CellResult] = {}
    stats: dict[int, DtStats] = {}
    for dt, (dt_cells, dt_stats) in zip(dts, outcomes):
        cells.update(dt_cells)
        stats[dt] = dt_stats

    if HAYASHI_YOSHIDA in names:
        origin = max(series1.first_time, series2.first_time)
        end = min(series1.last_time, series2.last_time)
        try:
            hy = est.hayashi_yoshida(series1, series2, window=(origin, end))
            hy_cell = lambda dt: CellResult(dt, HAYASHI_YOSHIDA, hy.value, hy.n_samples)
        except EppsError as err:
            message = f"{type(err).__name__}: {err}"
            hy_cell = lambda dt: CellResult(dt, HAYASHI_YOSHIDA, math.nan, 0, message)
        for dt in dts:
            cells[(dt, HAYASHI_YOSHIDA)] = hy_cell(dt)

    return EppsCurve(dts=tuple(dts), estimators=tuple(names), cells=cells, stats=stats)


@dataclass
class EnsembleResult:
    """Normalized ensemble means with 2-sigma dispersion bars."""

    dts: tuple[int, ...]
    estimators: tuple[str, ...]
    mean_norm: dict[tuple[int, str], float]
    two_sigma: dict[tuple[int, str], float]
    n_pairs: dict[tuple[int, str], int]
    anchor_dt: int
    anchor_estimator: str
    excluded: list[tuple[int, str]] = field(default_factory=list)

    def to_csv(self, sink: IO[str]) -> None:
        sink.write(ENSEMBLE_HEADER + "\n")
        for dt in self.dts:
            for name in self.estimators:
                key = (dt, name)
                sink.write(
                    f"{dt},{name},{_fmt(self.mean_norm[key])},"
                    f"{_fmt(self.two_sigma[key])},{self.n_pairs[key]}\n"
                )


def ensemble_average(
    curves: Sequence[EppsCurve],
    anchor_dt: int,
    anchor_estimator: str = COMBINED,
) -> EnsembleResult:
    """Average curves after normalizing each by its own anchor value.

    The anchor is the pair's corrected (by default combined) estimate
    at ``anchor_dt``, the saturation value.  Pairs whose anchor is
    missing, non-finite or non-positive are excluded and reported.
    Dispersion is twice the population standard deviation across
    pairs.
    """
    if not curves:
        raise ValueError("need at least one curve")
    dts = curves[0].dts
    names = curves[0].estimators
    for c in curves[1:]:
        if c.dts != dts or c.estimators != names:
            raise ValueError("curves must share dt grid and estimator set")
    if anchor_dt not in dts:
        raise ValueError(f"anchor dt {anchor_dt} not in curve dts {dts}")
    if anchor_estimator not in names:
        raise ValueError(f"anchor estimator {anchor_estimator!r} not in curves")

    excluded: list[tuple[int, str]] = []
    usable: list[tuple[EppsCurve, float]] = []
    for i, curve in enumerate(curves):
        cell = curve.cells[(anchor_dt, anchor_estimator)]
        if not cell.ok or not math.isfinite(cell.value) or cell.value <= 0.0:
            excluded.append((i, f"anchor value {cell.value} unusable"))
            continue
        usable.append((curve, cell.value))
    if not usable:
        raise DataError("every pair lost its normalization anchor")

    mean_norm: dict[tuple[int, str], float] = {}
    two_sigma: dict[tuple[int, str], float] = {}
    n_pairs: dict[tuple[int, str], int] = {}
    for dt in dts:
        for name in names:
            vals = []
            for curve, anchor in usable:
                cell = curve.cells[(dt, name)]
                if cell.ok and math.isfinite(cell.value):
                    vals.append(cell.value / anchor)
            key = (dt, name)
            if vals:
                arr = np.asarray(vals)
                mean_norm[key] = float(np.mean(arr))
                two_sigma[key] = float(2.0 * np.std(arr))
                n_pairs[key] = len(vals)
            else:
                mean_norm[key] = math.nan
                two_sigma[key] = math.nan
                n_pairs[key] = 0

    return EnsembleResult(
        dts=dts,
        estimators=names,
        mean_norm=mean_norm,
        two_sigma=two_sigma,
        n_pairs=n_pairs,
        anchor_dt=anchor_dt,
        anchor_estimator=anchor_estimator,
        excluded=excluded,
    )
