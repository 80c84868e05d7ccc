"""Synthetic market with known ground-truth correlation.

Two return series share one innovation stream (weight ``sqrt(c)``) on
top of individual innovations, scaled by a GARCH(1,1) volatility that
is common to the pair: the variance recursion is driven by the pooled
squared return of both instruments.  A common volatility path is what
makes ``c`` the true correlation of the returns themselves; with
separate per-instrument volatility recursions the realized correlation
sits well below ``c`` (the two volatility paths decorrelate), and the
rig would have no usable ground truth.  Prices follow by compounding
arithmetic returns.  Trades are then sampled with exponential waiting
times per instrument and the traded prices optionally rounded to whole
ticks, producing tick series that carry both asynchrony and
discretization, with the underlying correlation still known exactly.

The default GARCH parameters give an unconditional return variance of
``alpha0 / (1 - alpha1 - beta1)`` = 0.024 per step.  Compounded over
year-length series that much per-step variance drives prices to zero,
so pair simulation accepts a ``scale`` factor on the returns (GARCH is
exactly scale-equivariant); the experiment harness defaults it to
1e-3, which keeps per-step price moves in the sub-tick range a
1000-tick instrument actually shows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigError, PriceCollapseError
from .market_data import TickSeries

DEFAULT_ALPHA0 = 2.4e-4
DEFAULT_ALPHA1 = 0.15
DEFAULT_BETA1 = 0.84
BURN_IN = 1000


@dataclass(frozen=True)
class GarchConfig:
    """Parameters of the correlated GARCH(1,1) return generator."""

    c: float
    n_steps: int
    seed: int
    alpha0: float = DEFAULT_ALPHA0
    alpha1: float = DEFAULT_ALPHA1
    beta1: float = DEFAULT_BETA1
    scale: float = 1.0
    burn_in: int = BURN_IN

    def __post_init__(self):
        if not (self.alpha0 > 0):
            raise ConfigError("alpha0 must be positive")
        if self.alpha1 < 0 or self.beta1 < 0:
            raise ConfigError("alpha1 and beta1 must be non-negative")
        if self.alpha1 + self.beta1 >= 1.0:
            raise ConfigError(
                f"alpha1 + beta1 = {self.alpha1 + self.beta1} is not covariance stationary"
            )
        if not (0.0 <= self.c <= 1.0):
            raise ConfigError("c must lie in [0, 1]")
        if self.n_steps <= 0:
            raise ConfigError("n_steps must be positive")
        if not (self.scale > 0):
            raise ConfigError("scale must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")

    @property
    def stationary_variance(self) -> float:
        return self.alpha0 / (1.0 - self.alpha1 - self.beta1)


@dataclass(frozen=True)
class SimMarketConfig:
    """How the underlying prices are observed as trades."""

    start_price: float = 1000.0
    mean_waiting_times: tuple[float, float] = (15.0, 25.0)
    rounding: bool = True
    q_scale: float = 1.0
    tick_size: float = 0.01
    symbols: tuple[str, str] = ("SIMA", "SIMB")

    def __post_init__(self):
        if not (self.start_price > 0):
            raise ConfigError("start_price must be positive")
        if any(w <= 0 for w in self.mean_waiting_times):
            raise ConfigError("waiting times must be positive")
        if not (self.q_scale > 0):
            raise ConfigError("q_scale must be positive")


@numba.njit(cache=True)
def _garch_pair(z1, z2, alpha0, alpha1, beta1):  # pragma: no cover - compiled
    n = z1.shape[0]
    r1 = np.empty(n)
    r2 = np.empty(n)
    var = alpha0 / (1.0 - alpha1 - beta1)  # stationary start
    for t in range(n):
        sigma = np.sqrt(var)
        r1[t] = sigma * z1[t]
        r2[t] = sigma * z2[t]
        pooled = 0.5 * (r1[t] * r1[t] + r2[t] * r2[t])
        var = alpha0 + alpha1 * pooled + beta1 * var
    return r1, r2


def generate_correlated_garch(
    config: GarchConfig, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Two correlated GARCH(1,1) return series of length ``n_steps``.

    Per step, both series share one standard normal innovation with
    weight ``sqrt(c)`` and add individual innovations with weight
    ``sqrt(1-c)``.  The variance recursion is common to the pair,
    driven by the pooled squared return, starts at its stationary
    value, and ``burn_in`` initial steps are discarded.  Fixed seeds
    give bit-identical output; the sample correlation of the two
    series recovers ``c``.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    total = config.n_steps + config.burn_in
    eta = rng.standard_normal(total)
    eps1 = rng.standard_normal(total)
    eps2 = rng.standard_normal(total)
    w_shared = np.sqrt(config.c)
    w_own = np.sqrt(1.0 - config.c)
    z1 = w_shared * eta + w_own * eps1
    z2 = w_shared * eta + w_own * eps2
    r1, r2 = _garch_pair(z1, z2, config.alpha0, config.alpha1, config.beta1)
    if config.scale != 1.0:
        r1 = r1 * config.scale
        r2 = r2 * config.scale
    return r1[config.burn_in :], r2[config.burn_in :]


def returns_to_prices(returns: np.ndarray, start_price: float) -> np.ndarray:
    """Compound arithmetic returns into a price path.

    ``S(t+1) = S(t) * (1 + r(t+1))`` with ``S(0) = start_price``.

    Raises
    ------
    PriceCollapseError
        A return of -100% or worse, or a price that underflowed to
        zero, at the reported step.
    """
    r = np.asarray(returns, dtype=np.float64)
    if np.any(r <= -1.0):
        raise PriceCollapseError(int(np.argmax(r <= -1.0)))
    prices = np.empty(r.size + 1)
    prices[0] = start_price
    prices[1:] = start_price * np.cumprod(1.0 + r)
    if not np.all(prices > 0.0):
        raise PriceCollapseError(int(np.argmax(prices <= 0.0)))
    return prices


def _exponential_trade_times(
    horizon: int, mean_waiting_time: float, rng: np.random.Generator
) -> np.ndarray:
    """Cumulative exponential waiting times floored to whole seconds.

    May contain duplicates (several draws inside one second); callers
    coalesce.  A waiting time of one or less degenerates to dense
    per-second trading, the synchronous limit.
    """
    if mean_waiting_time <= 1.0:
        return np.arange(horizon + 1, dtype=np.int64)
    expected = int(horizon / mean_waiting_time * 1.2) + 16
    gaps = rng.exponential(scale=mean_waiting_time, size=expected)
    cum = np.cumsum(gaps)
    while cum.size and cum[-1] <= horizon:
        more = rng.exponential(scale=mean_waiting_time, size=expected)
        cum = np.append(cum, cum[-1] + np.cumsum(more))
    times = np.floor(cum).astype(np.int64)
    return times[times <= horizon]


def sample_trades(
    prices: np.ndarray,
    mean_waiting_time: float,
    rounding: bool,
    seed,
    tick_size: float = 0.01,
    q_scale: float = 1.0,
    symbol: str = "SIM",
) -> TickSeries:
    """Observe a price path through an asynchronous trade process.

    Trade timestamps are cumulative exponential waiting times floored
    to whole seconds; draws landing in one second coalesce to a single
    trade and the first trade is forced at t=0.  The traded price is
    the underlying price at that step, rounded half away from zero to
    a whole (possibly rescaled) tick when ``rounding`` is on.

    With ``q_scale`` < 1 the rounding grid is finer: prices are stored
    in units of ``tick_size * q_scale``.  Without rounding the
    underlying prices pass through unchanged.
    """
    prices = np.asarray(prices, dtype=np.float64)
    rng = np.random.default_rng(seed)
    horizon = prices.size - 1
    raw_times = _exponential_trade_times(horizon, mean_waiting_time, rng)
    times = np.unique(np.concatenate(([0], raw_times)))
    observed = prices[times]
    if rounding:
        ticks = np.floor(observed / q_scale + 0.5)
        return TickSeries(
            symbol=symbol, times=times, prices=ticks, tick_size=tick_size * q_scale
        )
    return TickSeries(symbol=symbol, times=times, prices=observed, tick_size=tick_size)


@dataclass(frozen=True)
class SimulatedPair:
    """A simulated pair with its underlying ground truth."""

    series1: TickSeries
    series2: TickSeries
    returns1: np.ndarray
    returns2: np.ndarray
    n_rejected_seeds: int


def simulate_pair(
    garch: GarchConfig, market: SimMarketConfig = SimMarketConfig(), max_attempts: int = 100
) -> SimulatedPair:
    """Full pipeline: correlated returns -> prices -> asynchronous trades.

    Seeds whose price path collapses (a one-step return of -100% or
    worse) are rejected and redrawn deterministically from the base
    seed; the number of rejections is reported.  The two instruments'
    trade processes use independent sub-seeds, so swapping the waiting
    times together with the sub-seeds swaps the outputs exactly.
    """
    last_error: PriceCollapseError | None = None
    for attempt in range(max_attempts):
        rng = np.random.default_rng([garch.seed, 0, attempt])
        r1, r2 = generate_correlated_garch(garch, rng=rng)
        try:
            prices1 = returns_to_prices(r1, market.start_price)
            prices2 = returns_to_prices(r2, market.start_price)
        except PriceCollapseError as err:
            last_error = err
            continue
        w1, w2 = market.mean_waiting_times
        series1 = sample_trades(
            prices1, w1, market.rounding, [garch.seed, 1],
            tick_size=market.tick_size, q_scale=market.q_scale, symbol=market.symbols[0],
        )
        series2 = sample_trades(
            prices2, w2, market.rounding, [garch.seed, 2],
            tick_size=market.tick_size, q_scale=market.q_scale, symbol=market.symbols[1],
        )
        return SimulatedPair(
            series1=series1,
            series2=series2,
            returns1=r1,
            returns2=r2,
            n_rejected_seeds=attempt,
        )
    raise PriceCollapseError(last_error.step if last_error else -1)
