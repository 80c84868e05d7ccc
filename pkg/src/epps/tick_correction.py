"""Compensation of tick-size discretization noise.

Observed price changes sit on the tick grid.  Writing the true change
of an interval as the observed change plus an error ``theta``, the
error of a price *difference* is the difference of two endpoint
rounding errors; for endpoint errors uniform on [-q/2, q/2] that
difference follows a triangular distribution on [-q, q].  Because the
distribution of price changes is convex around zero, the error
conditional on an observed change of k ticks is not symmetric: its
conditional moments

    e1[k] = E[theta | observed change = k*q]
    e2[k] = E[theta^2 | observed change = k*q]

are estimated here by combining the triangular (or uniform) error
kernel with a piecewise-exponential interpolation of the price-change
histogram.  The moments feed a corrected return standard deviation
``sigma_hat`` and corrected covariance terms; the main effect of
discretization is an overestimated sigma, which sigma_hat removes.

All moment integrals run on a fixed Simpson grid in units of the tick
size, so bin boundaries and the kernel's kink land on quadrature
panel edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np
from scipy.integrate import simpson

from ._core import (
    TICK,
    TICK_APPROX,
    CorrelationEstimate,
    pop_cov,
    pop_mean,
)
from .errors import (
    ConfigError,
    CorrectionOvershootError,
    DegenerateVarianceError,
    IncompleteMomentsError,
    InsufficientDataError,
    NoOverlapError,
)

TRIANGULAR = "triangular"
UNIFORM = "uniform"

METHOD_INTERPOLATED = "interpolated"
METHOD_UNIFORM_NULL = "uniform_null"
METHOD_ZERO = "zero"

DEFAULT_MIN_CHANGES = 100
SIMPSON_NODES = 201


@dataclass(frozen=True)
class PriceChangeHistogram:
    """Counts of tick-discretized price changes at one return interval."""

    dt: int
    counts: dict[int, int]
    q: float

    def __post_init__(self):
        if not self.counts:
            raise ValueError("histogram must not be empty")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("histogram counts must be non-negative")
        if self.total <= 0:
            raise ValueError("histogram total must be positive")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def support(self) -> tuple[int, int]:
        ks = self.counts.keys()
        return min(ks), max(ks)


@dataclass(frozen=True)
class DiscretizationMoments:
    """Conditional discretization-error moments per price-change bin.

    ``e1`` is in currency units, ``e2`` in currency squared.  The
    ``uniform_null`` method carries the prior-only moments (0, q^2/6)
    for every bin; ``zero`` disables the correction entirely, which is
    the right null for continuous (unrounded) prices.
    """

    q: float
    method: str
    e1: dict[int, float] = field(default_factory=dict)
    e2: dict[int, float] = field(default_factory=dict)
    prior: str | None = None
    n_fallback: int = 0

    def __post_init__(self):
        ks = np.array(sorted(self.e1), dtype=np.int64)
        object.__setattr__(self, "_ks", ks)
        object.__setattr__(self, "_e1v", np.array([self.e1[k] for k in ks.tolist()]))
        object.__setattr__(self, "_e2v", np.array([self.e2[k] for k in ks.tolist()]))

    @classmethod
    def uniform_null(cls, q: float) -> "DiscretizationMoments":
        return cls(q=q, method=METHOD_UNIFORM_NULL)

    @classmethod
    def zero(cls, q: float) -> "DiscretizationMoments":
        return cls(q=q, method=METHOD_ZERO)

    def lookup(self, bins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample (e1[k], e2[k]) arrays for an array of bins.

        Raises
        ------
        IncompleteMomentsError
            A bin occurs that has no estimated moments.
        """
        bins = np.asarray(bins, dtype=np.int64)
        if self.method == METHOD_ZERO:
            z = np.zeros(bins.shape)
            return z, z
        if self.method == METHOD_UNIFORM_NULL:
            return np.zeros(bins.shape), np.full(bins.shape, self.q**2 / 6.0)
        ks: np.ndarray = self._ks  # type: ignore[attr-defined]
        idx = np.searchsorted(ks, bins)
        bad = (idx >= ks.size) | (ks[np.minimum(idx, ks.size - 1)] != bins)
        if np.any(bad):
            missing = np.unique(bins[bad]).tolist()
            raise IncompleteMomentsError(f"no moments for price-change bins {missing}")
        return self._e1v[idx], self._e2v[idx]  # type: ignore[attr-defined]


@dataclass(frozen=True)
class CorrectedSigma:
    """Raw and discretization-corrected return standard deviations.

    On discretized data the raw sigma overestimates; ``inflated`` is
    set in the unexpected case sigma_hat > sigma_raw.
    """

    sigma_raw: float
    sigma_hat: float
    dt: int

    @property
    def inflated(self) -> bool:
        return self.sigma_hat > self.sigma_raw


def build_histogram(
    changes: np.ndarray,
    dt: int,
    q: float,
    min_changes: int = DEFAULT_MIN_CHANGES,
) -> PriceChangeHistogram:
    """Count tick-discretized price changes for one instrument.

    Raises
    ------
    InsufficientDataError
        Fewer than ``min_changes`` observations.
    """
    changes = np.asarray(changes, dtype=np.int64)
    if changes.size < min_changes:
        raise InsufficientDataError(
            f"{changes.size} price changes, need at least {min_changes}"
        )
    ks, counts = np.unique(changes, return_counts=True)
    return PriceChangeHistogram(
        dt=int(dt),
        counts={int(k): int(c) for k, c in zip(ks, counts)},
        q=q,
    )


def _segment_slopes(log_counts: np.ndarray) -> np.ndarray:
    """Per-bin log-density slopes from neighbouring log counts.

    Centered differences inside the support, one-sided at the edges,
    zero for a single-bin support.  Units: per tick.
    """
    n = log_counts.size
    b = np.zeros(n)
    if n >= 2:
        b[0] = log_counts[1] - log_counts[0]
        b[-1] = log_counts[-1] - log_counts[-2]
    if n >= 3:
        b[1:-1] = 0.5 * (log_counts[2:] - log_counts[:-2])
    return b


def _quadrature_grid(prior: str, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes (tick units) and prior weights on them."""
    if prior == TRIANGULAR:
        u = np.linspace(-1.0, 1.0, n_nodes)
        w = 1.0 - np.abs(u)
    elif prior == UNIFORM:
        u = np.linspace(-0.5, 0.5, n_nodes)
        w = np.ones(n_nodes)
    else:
        raise ValueError(f"unknown prior {prior!r}")
    return u, w


def estimate_moments(
    hist: PriceChangeHistogram,
    prior: str = TRIANGULAR,
    n_nodes: int = SIMPSON_NODES,
) -> DiscretizationMoments:
    """Estimate conditional error moments for every bin in the support.

    The histogram is turned into a piecewise-exponential density: bin k
    carries ``f(x) = A_k * exp(b_k * (x - k*q))`` with slope ``b_k``
    from centered log-count differences (one-sided at the support
    edges) and amplitude matching the bin count.  Zero-count gap bins
    get 0.5 pseudo-counts to keep the logs finite.  Outside the
    support the nearest edge segment is extended.  The error posterior
    of bin k weighs that density with the triangular kernel on [-q, q]
    (or a uniform kernel on [-q/2, q/2]); its first two moments come
    from composite Simpson quadrature with ``n_nodes`` nodes.

    Bins whose posterior mass degenerates numerically fall back to the
    uniform-null moments (0, q^2/6) and are counted in ``n_fallback``.
    """
    if n_nodes < SIMPSON_NODES:
        raise ValueError(f"need at least {SIMPSON_NODES} quadrature nodes")
    if n_nodes % 2 == 0:
        n_nodes += 1  # composite Simpson needs an odd node count

    q = hist.q
    k_min, k_max = hist.support
    ks = np.arange(k_min, k_max + 1)
    counts = np.array([hist.counts.get(int(k), 0) for k in ks], dtype=np.float64)
    smoothed = np.where(counts > 0, counts, 0.5)
    b = _segment_slopes(np.log(smoothed))

    # amplitude so each unit-width segment integrates to its count
    mass = np.where(b == 0.0, 1.0, 2.0 * np.sinh(b / 2.0) / np.where(b == 0.0, 1.0, b))
    amp = smoothed / mass

    u, w = _quadrature_grid(prior, n_nodes)

    e1: dict[int, float] = {}
    e2: dict[int, float] = {}
    n_fallback = 0
    for k in ks.tolist():
        x = k + u
        seg = np.clip(np.floor(x + 0.5).astype(np.int64), k_min, k_max) - k_min
        g = amp[seg] * np.exp(b[seg] * (x - (seg + k_min)))
        p = g * w
        z = float(simpson(p, x=u))
        m1 = float(simpson(u * p, x=u))
        m2 = float(simpson(u * u * p, x=u))
        if not np.isfinite(z) or z <= 0.0 or not np.isfinite(m1 + m2):
            e1[k] = 0.0
            e2[k] = q * q / 6.0
            n_fallback += 1
            continue
        e1[k] = q * m1 / z
        e2[k] = q * q * m2 / z

    return DiscretizationMoments(
        q=q,
        method=METHOD_INTERPOLATED,
        e1=e1,
        e2=e2,
        prior=prior,
        n_fallback=n_fallback,
    )


def write_moments(moments: DiscretizationMoments, sink: IO[str]) -> None:
    """Dump per-bin moments as ``k,e1,e2`` CSV for inspection."""
    sink.write("k,e1,e2\n")
    for k in sorted(moments.e1):
        sink.write(f"{k},{moments.e1[k]:.17g},{moments.e2[k]:.17g}\n")


def _theta_over_price(
    moments: DiscretizationMoments, bins: np.ndarray, prices: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample E[theta]/S and E[theta^2]/S^2 with S in currency."""
    e1k, e2k = moments.lookup(bins)
    s_currency = np.asarray(prices, dtype=np.float64) * moments.q
    return e1k / s_currency, e2k / (s_currency * s_currency)


def corrected_sigma(
    returns: np.ndarray,
    prices: np.ndarray,
    bins: np.ndarray,
    moments: DiscretizationMoments,
    dt: int = 0,
) -> CorrectedSigma:
    """Discretization-corrected return standard deviation.

    Substitutes the conditional moments per sample:

        var(theta/S) = <e2[k(t)]/S(t)^2> - <e1[k(t)]/S(t)>^2
        cov(dS/S, theta/S) = cov(r, e1[k(t)]/S(t))

    and returns ``sqrt(var(r) + var(theta/S) + 2 cov(dS/S, theta/S))``.

    Raises
    ------
    DegenerateVarianceError
        Constant return series.
    CorrectionOvershootError
        The corrected variance came out non-positive (reported with
        its three terms).
    IncompleteMomentsError
        A bin occurs without moments.
    """
    r = np.asarray(returns, dtype=np.float64)
    d = r - np.mean(r)
    var_r = float(np.mean(d * d))
    if var_r <= 0.0:
        raise DegenerateVarianceError("return series has zero variance")

    a, b2 = _theta_over_price(moments, bins, prices)
    var_theta = pop_mean(b2) - pop_mean(a) ** 2
    cov_term = pop_cov(r, a)
    radicand = var_r + var_theta + 2.0 * cov_term
    if radicand <= 0.0:
        raise CorrectionOvershootError(var_r, var_theta, cov_term)
    return CorrectedSigma(
        sigma_raw=float(np.sqrt(var_r)),
        sigma_hat=float(np.sqrt(radicand)),
        dt=int(dt),
    )


def _check_tick_sizes(samples, moments1, moments2) -> None:
    if not np.isclose(moments1.q, samples.q1) or not np.isclose(moments2.q, samples.q2):
        raise ConfigError(
            f"moment tick sizes ({moments1.q}, {moments2.q}) do not match "
            f"the sample tick sizes ({samples.q1}, {samples.q2})"
        )


def corr_tick(samples, moments1, moments2) -> CorrelationEstimate:
    """Tick-size-compensated correlation of a pair sample set.

    Adds the three estimated error covariance terms to the observed
    return covariance and normalizes everything by the corrected
    sigmas:

        [cov(r1, r2) + cov(r1, theta2/S2) + cov(r2, theta1/S1)
         + cov(theta1/S1, theta2/S2)] / (sigma_hat_1 * sigma_hat_2)

    Cross-instrument error products use conditional independence given
    the two bins, i.e. E[theta1 * theta2 | k1, k2] = e1[k1] * e1[k2].
    """
    _check_tick_sizes(samples, moments1, moments2)
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    r1, r2 = samples.r1[inc], samples.r2[inc]
    s1, s2 = samples.s1[inc], samples.s2[inc]
    k1, k2 = samples.k1[inc], samples.k2[inc]

    sig1 = corrected_sigma(r1, s1, k1, moments1, samples.dt)
    sig2 = corrected_sigma(r2, s2, k2, moments2, samples.dt)
    a1, _ = _theta_over_price(moments1, k1, s1)
    a2, _ = _theta_over_price(moments2, k2, s2)

    g1 = (r1 - np.mean(r1)) / sig1.sigma_hat
    g2 = (r2 - np.mean(r2)) / sig2.sigma_hat
    base = float(np.mean(g1 * g2))
    cross = pop_cov(r1, a2) + pop_cov(r2, a1) + pop_cov(a1, a2)
    value = base + cross / (sig1.sigma_hat * sig2.sigma_hat)
    return CorrelationEstimate(value=value, n_samples=int(r1.size), kind=TICK)


def corr_tick_approx(samples, moments1, moments2) -> CorrelationEstimate:
    """Fast variant: observed covariance over corrected sigmas only.

    The error covariance terms are dropped; correcting the sigma
    overestimation is the dominant part of the compensation.
    """
    _check_tick_sizes(samples, moments1, moments2)
    inc = samples.included
    if not np.any(inc):
        raise NoOverlapError("all samples excluded, nothing to correlate")
    r1, r2 = samples.r1[inc], samples.r2[inc]
    s1, s2 = samples.s1[inc], samples.s2[inc]
    k1, k2 = samples.k1[inc], samples.k2[inc]

    sig1 = corrected_sigma(r1, s1, k1, moments1, samples.dt)
    sig2 = corrected_sigma(r2, s2, k2, moments2, samples.dt)
    g1 = (r1 - np.mean(r1)) / sig1.sigma_hat
    g2 = (r2 - np.mean(r2)) / sig2.sigma_hat
    value = float(np.mean(g1 * g2))
    return CorrelationEstimate(value=value, n_samples=int(r1.size), kind=TICK_APPROX)
