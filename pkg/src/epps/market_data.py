"""Trade ingestion and previous-tick sampling.

A :class:`TickSeries` holds the time-ordered trades of one instrument
with prices expressed as tick counts (price divided by the tick size),
so discretization structure is exact by representation.  Rounded data
has integer-valued tick counts; simulator output with rounding
disabled carries continuous tick counts through the same pipeline.

:func:`previous_tick_sample` puts a series on a regular grid by taking
at each grid time the price of the last trade at or before it, and
records that trade's timestamp (the point of last trade, ``gamma``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple

import numpy as np

from .errors import (
    EmptySeriesError,
    GridViolationError,
    NoPriorTradeError,
    ParseError,
)

CSV_HEADER = ("symbol", "timestamp", "price")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TickSeries:
    """Time-ordered trades of one instrument.

    Parameters
    ----------
    symbol : str
        Instrument identifier.
    times : array of int64
        Trade timestamps in whole seconds from session start,
        non-decreasing.  Equal timestamps are allowed; at sampling the
        last one wins.
    prices : array of float64
        Trade prices in tick counts, strictly positive.  Integer-valued
        for tick-discretized data.
    tick_size : float
        Currency units per tick (e.g. 0.01).
    """

    symbol: str
    times: np.ndarray
    prices: np.ndarray
    tick_size: float = 0.01

    def __post_init__(self):
        times = _frozen_array(self.times, np.int64)
        prices = _frozen_array(self.prices, np.float64)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        if times.size == 0:
            raise EmptySeriesError(f"{self.symbol}: no trades")
        if times.shape != prices.shape:
            raise ValueError("times and prices must have equal length")
        if np.any(np.diff(times) < 0):
            raise ValueError(f"{self.symbol}: timestamps must be non-decreasing")
        if not np.all(prices > 0):
            raise ValueError(f"{self.symbol}: prices must be strictly positive")
        if not (self.tick_size > 0):
            raise ValueError("tick_size must be positive")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def first_time(self) -> int:
        return int(self.times[0])

    @property
    def last_time(self) -> int:
        return int(self.times[-1])

    def is_tick_discrete(self, tol: float = 1e-9) -> bool:
        """True when every price sits on an integer tick count."""
        return bool(np.all(np.abs(self.prices - np.rint(self.prices)) <= tol))


@dataclass(frozen=True)
class SampledPath:
    """Previous-tick prices of one instrument on a regular grid.

    ``gammas[i]`` is the timestamp of the trade whose price is reported
    at grid time ``times[i]``; it never exceeds the grid time and is
    non-decreasing along the grid.
    """

    symbol: str
    grid_origin: int
    dt: int
    times: np.ndarray
    prices: np.ndarray
    gammas: np.ndarray
    tick_size: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen_array(self.times, np.int64))
        object.__setattr__(self, "prices", _frozen_array(self.prices, np.float64))
        object.__setattr__(self, "gammas", _frozen_array(self.gammas, np.int64))
        if np.any(self.gammas > self.times):
            raise ValueError("gamma must not exceed its grid time")
        if np.any(np.diff(self.gammas) < 0):
            raise ValueError("gamma must be non-decreasing along the grid")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def n_points(self) -> int:
        return int(self.times.size)


class PathReturns(NamedTuple):
    """Arithmetic returns of a sampled path, one entry per grid step."""

    t: np.ndarray            # interval start times
    value: np.ndarray        # (S(t+dt) - S(t)) / S(t)
    gamma_left: np.ndarray   # point of last trade at interval start
    gamma_right: np.ndarray  # point of last trade at interval end


@dataclass(frozen=True)
class CsvTradeFormat:
    """How to interpret a trade CSV.

    ``grid="strict"`` rejects prices off the declared tick grid (the
    normal case for exchange data); ``grid="free"`` keeps fractional
    tick counts, for continuous simulated prices.
    """

    tick_size: float = 0.01
    session: tuple[int, int] | None = None
    grid: str = "strict"

    def __post_init__(self):
        if self.grid not in ("strict", "free"):
            raise ValueError(f"unknown grid mode {self.grid!r}")
        if not (self.tick_size > 0):
            raise ValueError("tick_size must be positive")


def load_trades(source: IO[str] | str, fmt: CsvTradeFormat = CsvTradeFormat()) -> TickSeries:
    """Read a trade CSV into a :class:`TickSeries`.

    The file must carry the header ``symbol,timestamp,price`` with
    integer-second timestamps and decimal currency prices.  Prices are
    converted to tick counts; under strict grid mode a price deviating
    from the tick grid by more than ``1e-6 * tick_size`` raises
    :class:`GridViolationError`.  Rows are stably sorted by timestamp
    and rows outside the optional session window are dropped.

    Raises
    ------
    ParseError
        Malformed header or row (reported with its line number).
    GridViolationError
        Off-grid price under strict grid mode.
    EmptySeriesError
        No rows survive parsing and filtering.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)

    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input, expected header 'symbol,timestamp,price'", line=1)
    if tuple(h.strip().lower() for h in header) != CSV_HEADER:
        raise ParseError(
            f"expected header 'symbol,timestamp,price', got {','.join(header)!r}", line=1
        )

    q = fmt.tick_size
    symbol: str | None = None
    times: list[int] = []
    ticks: list[float] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # trailing blank line
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        sym, ts_field, price_field = (f.strip() for f in row)
        if symbol is None:
            symbol = sym
        elif sym != symbol:
            raise ParseError(f"mixed symbols {symbol!r} and {sym!r}", line=lineno)
        try:
            ts = int(ts_field)
        except ValueError:
            raise ParseError(f"bad timestamp {ts_field!r}", line=lineno)
        try:
            price = float(price_field)
        except ValueError:
            raise ParseError(f"bad price {price_field!r}", line=lineno)
        if not math.isfinite(price) or price <= 0:
            raise ParseError(f"price must be positive and finite, got {price_field}", line=lineno)

        raw_ticks = price / q
        if fmt.grid == "strict":
            k = round(raw_ticks)
            if abs(raw_ticks - k) > 1e-6:
                raise GridViolationError(
                    f"price {price_field} is off the tick grid (tick size {q})", line=lineno
                )
            raw_ticks = float(k)
        if fmt.session is not None:
            lo, hi = fmt.session
            if not (lo <= ts <= hi):
                continue
        times.append(ts)
        ticks.append(raw_ticks)

    if not times:
        raise EmptySeriesError("no trades after parsing and session filtering")

    order = np.argsort(np.asarray(times, dtype=np.int64), kind="stable")
    times_arr = np.asarray(times, dtype=np.int64)[order]
    ticks_arr = np.asarray(ticks, dtype=np.float64)[order]
    return TickSeries(symbol=symbol or "", times=times_arr, prices=ticks_arr, tick_size=q)


def write_trades(series: TickSeries, sink: IO[str]) -> None:
    """Write a series in the ``symbol,timestamp,price`` CSV format.

    Integer tick counts render as exact decimals at the tick size's
    precision; fractional tick counts (rounding disabled in the
    simulator) render with 17 significant digits so they survive a
    round trip.
    """
    q = series.tick_size
    decimals = _decimal_places(q)
    discrete = series.is_tick_discrete()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t, p in zip(series.times.tolist(), series.prices.tolist()):
        if discrete and decimals is not None:
            price_field = f"{p * q:.{decimals}f}"
        else:
            price_field = f"{p * q:.17g}"
        writer.writerow([series.symbol, t, price_field])


def _decimal_places(q: float, max_places: int = 12) -> int | None:
    """Smallest decimal precision that renders multiples of q exactly."""
    for d in range(max_places + 1):
        scaled = q * 10**d
        if abs(scaled - round(scaled)) < 1e-9:
            return d
    return None


def previous_tick_sample(
    series: TickSeries, grid_origin: int, dt: int, n_points: int
) -> SampledPath:
    """Sample a series on the grid ``grid_origin + k*dt``, k = 0..n_points.

    Each grid point gets the price of the latest trade at or before it
    and that trade's timestamp as gamma.  Ties on trade timestamps are
    resolved in favour of the last trade.

    Raises
    ------
    NoPriorTradeError
        The grid starts before the first trade, so no price exists.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_points < 0:
        raise ValueError("n_points must be non-negative")
    if grid_origin < series.first_time:
        raise NoPriorTradeError(
            f"{series.symbol}: grid origin {grid_origin} precedes first trade "
            f"at {series.first_time}"
        )
    grid = grid_origin + dt * np.arange(n_points + 1, dtype=np.int64)
    idx = np.searchsorted(series.times, grid, side="right") - 1
    return SampledPath(
        symbol=series.symbol,
        grid_origin=int(grid_origin),
        dt=int(dt),
        times=grid,
        prices=series.prices[idx],
        gammas=series.times[idx],
        tick_size=series.tick_size,
    )


def arithmetic_returns(path: SampledPath) -> PathReturns:
    """Per-step relative price changes ``(S(t+dt) - S(t)) / S(t)``.

    Computed on tick counts; the tick-size factors cancel.  Also
    reports the points of last trade at both interval ends, which the
    overlap computation needs.
    """
    if len(path) < 2:
        raise ValueError("path must have at least 2 grid points")
    s = path.prices
    value = (s[1:] - s[:-1]) / s[:-1]
    return PathReturns(
        t=path.times[:-1],
        value=value,
        gamma_left=path.gammas[:-1],
        gamma_right=path.gammas[1:],
    )


def ticks_from_path(path: SampledPath) -> TickSeries:
    """View a sampled path as a tick series (one trade per grid point)."""
    return TickSeries(
        symbol=path.symbol,
        times=path.times,
        prices=path.prices,
        tick_size=path.tick_size,
    )
