"""Correlation estimators over pair sample streams.

Four families share one axis:

* ``pearson`` -- the plain product-moment coefficient.
* ``corr_async`` -- compensates asynchronous trading by weighting each
  normalized return product with the inverse fractional overlap
  ``dt / dt_o`` of the two effective return intervals.
* ``hayashi_yoshida`` -- the grid-free baseline that sums products of
  tick-to-tick returns with overlapping intervals; reported here as a
  correlation (normalized by tick-level realized standard deviations,
  centered) so it is directly comparable to the others.
* ``corr_combined`` -- applies the overlap weighting to the return
  products and the discretization-error terms of the tick
  compensation in one expression.

Unless ``include_all`` is requested, every estimator averages products
only over samples whose effective intervals actually overlap, so
compensated and plain curves differ only by the compensation.

Normalization conventions differ by family, deliberately.  Exclusion
correlates with stale intervals, which inflates return variance
conditional on inclusion; in a pure ratio (Pearson, tick) that
inflation cancels between numerator and denominator, but the
overlap-weighted numerators are already conditionally debiased, so
the weighted estimators normalize with moments over the *full* sample
set instead.  On synchronous data nothing is excluded and the
conventions coincide exactly.
"""

from __future__ import annotations

import numpy as np

from ._core import (
    ASYNC,
    COMBINED,
    COMBINED_APPROX,
    HAYASHI_YOSHIDA,
    PLAIN,
    CorrelationEstimate,
    normalized,
    pop_cov,
)
from .errors import (
    DegenerateVarianceError,
    InsufficientDataError,
    NoOverlapError,
)
from .market_data import TickSeries
from .overlap import PairSamples
from .tick_correction import (
    DiscretizationMoments,
    _check_tick_sizes,
    _theta_over_price,
    corrected_sigma,
)


def _included(samples: PairSamples, include_all: bool = False):
    if include_all:
        n = samples.n_total
        return samples.r1, samples.r2, np.ones(n)
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    return samples.r1[inc], samples.r2[inc], samples.weight[inc]


def pearson(samples: PairSamples, include_all: bool = False) -> CorrelationEstimate:
    """Plain Pearson correlation over the included samples.

    Population (1/n) normalization; the value is confined to [-1, 1].
    ``include_all`` restores the textbook estimator over every sample
    regardless of overlap.
    """
    r1, r2, _ = _included(samples, include_all)
    g1 = normalized(r1, "first return series")
    g2 = normalized(r2, "second return series")
    value = float(np.clip(np.mean(g1 * g2), -1.0, 1.0))
    return CorrelationEstimate(value=value, n_samples=int(r1.size), kind=PLAIN)


def corr_async(samples: PairSamples) -> CorrelationEstimate:
    """Asynchrony-compensated correlation.

    Mean of ``g1 * g2 * dt/dt_o`` over the included samples, where the
    g's are the returns normalized by mean and population standard
    deviation over the full sample set.  With every sample included
    and every weight equal to 1 this reproduces ``pearson`` exactly.
    """
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    g1 = normalized(samples.r1, "first return series")
    g2 = normalized(samples.r2, "second return series")
    w = samples.weight[inc]
    value = float(np.mean(g1[inc] * g2[inc] * w))
    return CorrelationEstimate(value=value, n_samples=int(w.size), kind=ASYNC)


def _tick_returns(series: TickSeries, window: tuple[int, int] | None):
    """Deduplicated in-window trades and their tick-to-tick returns."""
    times, prices = series.times, series.prices
    if window is not None:
        lo, hi = window
        mask = (times >= lo) & (times <= hi)
        times, prices = times[mask], prices[mask]
    if times.size:
        # multiple trades on one timestamp: the last one wins
        last = np.r_[times[1:] != times[:-1], True]
        times, prices = times[last], prices[last]
    if times.size < 2:
        raise InsufficientDataError(
            f"{series.symbol}: need at least 2 distinct trade times in window"
        )
    returns = np.diff(prices) / prices[:-1]
    return times, returns


def hayashi_yoshida(
    ticks1: TickSeries,
    ticks2: TickSeries,
    window: tuple[int, int] | None = None,
) -> CorrelationEstimate:
    """Cumulative overlapping-interval correlation, grid-free.

    Sums products of centered tick-to-tick returns whose trade
    intervals ``(t_{i-1}, t_i]`` intersect, and normalizes by the
    tick-level realized standard deviations, so the result is a
    correlation on the same axis as the grid estimators.

    Raises
    ------
    InsufficientDataError
        Fewer than 2 distinct in-window trades on either series.
    NoOverlapError
        No pair of trade intervals intersects.
    DegenerateVarianceError
        Zero realized variance on either series.
    """
    t1, d1 = _tick_returns(ticks1, window)
    t2, d2 = _tick_returns(ticks2, window)
    d1 = d1 - np.mean(d1)
    d2 = d2 - np.mean(d2)

    var1 = float(np.sum(d1 * d1))
    var2 = float(np.sum(d2 * d2))
    if var1 <= 0.0 or var2 <= 0.0:
        raise DegenerateVarianceError("zero realized variance at tick level")

    l1, r1_edge = t1[:-1], t1[1:]
    l2, r2_edge = t2[:-1], t2[1:]
    n1, n2 = d1.size, d2.size

    cov = 0.0
    n_pairs = 0
    j_start = 0
    for i in range(n1):
        a_left = l1[i]
        a_right = r1_edge[i]
        while j_start < n2 and r2_edge[j_start] <= a_left:
            j_start += 1
        j = j_start
        while j < n2 and l2[j] < a_right:
            cov += d1[i] * d2[j]
            n_pairs += 1
            j += 1
    if n_pairs == 0:
        raise NoOverlapError("no overlapping trade intervals inside the window")

    value = cov / np.sqrt(var1 * var2)
    return CorrelationEstimate(value=float(value), n_samples=n_pairs, kind=HAYASHI_YOSHIDA)


def corr_combined(
    samples: PairSamples,
    moments1: DiscretizationMoments,
    moments2: DiscretizationMoments,
) -> CorrelationEstimate:
    """Joint compensation of asynchrony and tick-size discretization.

    The overlap weighting applies to the raw return products, the
    discretization terms enter once for the whole series, and the mean
    product correction rides with the average weight:

        [ <r1 r2 dt/dt_o>
          + (cov(r1, theta2/S2) + cov(r2, theta1/S1)
             + cov(theta1/S1, theta2/S2) - <r1><r2>) * <dt/dt_o> ]
        / (sigma_hat_1 * sigma_hat_2)

    The weighted product mean runs over the included samples; all
    other moments, including the corrected sigmas, use the full
    sample set.
    """
    _check_tick_sizes(samples, moments1, moments2)
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    r1, r2 = samples.r1, samples.r2
    w = samples.weight[inc]

    sig1 = corrected_sigma(r1, samples.s1, samples.k1, moments1, samples.dt)
    sig2 = corrected_sigma(r2, samples.s2, samples.k2, moments2, samples.dt)
    a1, _ = _theta_over_price(moments1, samples.k1, samples.s1)
    a2, _ = _theta_over_price(moments2, samples.k2, samples.s2)

    numerator = float(np.mean(r1[inc] * r2[inc] * w)) + (
        pop_cov(r1, a2)
        + pop_cov(r2, a1)
        + pop_cov(a1, a2)
        - float(np.mean(r1)) * float(np.mean(r2))
    ) * float(np.mean(w))
    value = numerator / (sig1.sigma_hat * sig2.sigma_hat)
    return CorrelationEstimate(value=value, n_samples=int(w.size), kind=COMBINED)


def corr_combined_approx(
    samples: PairSamples,
    moments1: DiscretizationMoments,
    moments2: DiscretizationMoments,
) -> CorrelationEstimate:
    """Fast variant: overlap-weighted product mean over corrected sigmas."""
    _check_tick_sizes(samples, moments1, moments2)
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    r1, r2, w = samples.r1[inc], samples.r2[inc], samples.weight[inc]
    s1, s2 = samples.s1[inc], samples.s2[inc]
    k1, k2 = samples.k1[inc], samples.k2[inc]

    sig1 = corrected_sigma(r1, s1, k1, moments1, samples.dt)
    sig2 = corrected_sigma(r2, s2, k2, moments2, samples.dt)
    value = float(np.mean(r1 * r2 * w)) / (sig1.sigma_hat * sig2.sigma_hat)
    return CorrelationEstimate(value=value, n_samples=int(r1.size), kind=COMBINED_APPROX)
