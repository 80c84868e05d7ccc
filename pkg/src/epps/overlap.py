"""Effective-interval overlaps for a pair of sampled paths.

A return computed on a previous-tick grid really spans the interval
between the points of last trade at its two ends.  For two instruments
those effective intervals rarely coincide; only their overlap carries
common information.  The overlap of step ``t`` is

    dt_o(t) = min(gamma1(t+dt), gamma2(t+dt)) - max(gamma1(t), gamma2(t))

and can be negative (disjoint effective intervals), or larger than dt.
Steps without a positive overlap are excluded from every estimator in
this package, so compensated and uncompensated curves differ only by
the compensation itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DegenerateStatisticsError, GridMismatchError
from .market_data import SampledPath, arithmetic_returns

DEFAULT_WEIGHT_CAP = 50.0


class ReturnPairSample(NamedTuple):
    """One grid step of a pair: returns, overlap and inverse-overlap weight."""

    t: int
    r1: float
    r2: float
    dt: int
    dt_o: int
    weight: float  # dt / dt_o, capped; nan when dt_o <= 0


@dataclass(frozen=True)
class PairSamples:
    """Per-step pair data for one grid, stored as parallel arrays.

    ``weight`` holds ``dt / dt_o`` capped at ``w_max`` where
    ``included`` is set and nan elsewhere.  ``s1``/``s2`` are the
    start-of-interval prices (tick counts) and ``k1``/``k2`` the signed
    price changes in whole ticks, which the tick-size correction bins
    on.
    """

    dt: int
    t: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    dt_o: np.ndarray
    included: np.ndarray
    weight: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    q1: float
    q2: float
    w_max: float
    n_capped: int

    @property
    def n_total(self) -> int:
        return int(self.t.size)

    @property
    def n_included(self) -> int:
        return int(np.count_nonzero(self.included))

    @property
    def n_excluded(self) -> int:
        return self.n_total - self.n_included

    def rows(self) -> Iterator[ReturnPairSample]:
        for i in range(self.n_total):
            yield ReturnPairSample(
                t=int(self.t[i]),
                r1=float(self.r1[i]),
                r2=float(self.r2[i]),
                dt=self.dt,
                dt_o=int(self.dt_o[i]),
                weight=float(self.weight[i]),
            )

    @classmethod
    def from_returns(
        cls,
        r1,
        r2,
        dt: int = 1,
        dt_o=None,
        s1=None,
        s2=None,
        k1=None,
        k2=None,
        q1: float = 0.01,
        q2: float = 0.01,
        w_max: float = DEFAULT_WEIGHT_CAP,
    ) -> "PairSamples":
        """Build a sample set directly from return arrays.

        Defaults give a fully synchronous set: every overlap equals dt,
        every weight is exactly 1.  Intended for tests and small
        experiments.
        """
        r1 = np.asarray(r1, dtype=np.float64)
        r2 = np.asarray(r2, dtype=np.float64)
        n = r1.size
        if dt_o is None:
            dt_o = np.full(n, dt, dtype=np.int64)
        else:
            dt_o = np.asarray(dt_o, dtype=np.int64)
        included = dt_o > 0
        weight = np.full(n, np.nan)
        with np.errstate(divide="ignore"):
            w = dt / dt_o.astype(np.float64)
        weight[included] = np.minimum(w[included], w_max)
        n_capped = int(np.count_nonzero(w[included] > w_max))
        ones = np.ones(n)
        return cls(
            dt=dt,
            t=np.arange(n, dtype=np.int64) * dt,
            r1=r1,
            r2=r2,
            dt_o=dt_o,
            included=included,
            weight=weight,
            s1=np.asarray(s1, dtype=np.float64) if s1 is not None else 1000.0 * ones,
            s2=np.asarray(s2, dtype=np.float64) if s2 is not None else 1000.0 * ones,
            k1=np.asarray(k1, dtype=np.int64) if k1 is not None else np.zeros(n, np.int64),
            k2=np.asarray(k2, dtype=np.int64) if k2 is not None else np.zeros(n, np.int64),
            q1=q1,
            q2=q2,
            w_max=w_max,
            n_capped=n_capped,
        )


@dataclass(frozen=True)
class OverlapStats:
    """Mean fractional overlap of the included steps of one grid."""

    dt: int
    mean_fractional_overlap: float
    n_included: int
    n_excluded: int


def compute_overlaps(
    path1: SampledPath, path2: SampledPath, w_max: float = DEFAULT_WEIGHT_CAP
) -> PairSamples:
    """Pair two sampled paths and compute per-step overlaps and weights.

    Both paths must share origin, spacing and length.  Steps with
    ``dt_o <= 0`` are flagged excluded; weights above ``w_max`` are
    capped and counted in ``n_capped``.

    Raises
    ------
    GridMismatchError
        The two paths were sampled on different grids.
    """
    if (
        path1.grid_origin != path2.grid_origin
        or path1.dt != path2.dt
        or len(path1) != len(path2)
    ):
        raise GridMismatchError(
            f"grids differ: ({path1.grid_origin}, dt={path1.dt}, n={len(path1)}) vs "
            f"({path2.grid_origin}, dt={path2.dt}, n={len(path2)})"
        )
    if w_max <= 0:
        raise ValueError("w_max must be positive")

    ret1 = arithmetic_returns(path1)
    ret2 = arithmetic_returns(path2)
    dt = path1.dt

    dt_o = (
        np.minimum(ret1.gamma_right, ret2.gamma_right)
        - np.maximum(ret1.gamma_left, ret2.gamma_left)
    )
    included = dt_o > 0
    weight = np.full(dt_o.shape, np.nan)
    with np.errstate(divide="ignore"):
        raw_w = dt / dt_o.astype(np.float64)
    weight[included] = np.minimum(raw_w[included], w_max)
    n_capped = int(np.count_nonzero(raw_w[included] > w_max))

    return PairSamples(
        dt=dt,
        t=ret1.t,
        r1=ret1.value,
        r2=ret2.value,
        dt_o=dt_o,
        included=included,
        weight=weight,
        s1=path1.prices[:-1],
        s2=path2.prices[:-1],
        k1=np.rint(np.diff(path1.prices)).astype(np.int64),
        k2=np.rint(np.diff(path2.prices)).astype(np.int64),
        q1=path1.tick_size,
        q2=path2.tick_size,
        w_max=w_max,
        n_capped=n_capped,
    )


def overlap_stats(samples: PairSamples) -> OverlapStats:
    """Mean of ``dt_o / dt`` over included steps, with inclusion counts.

    Raises
    ------
    DegenerateStatisticsError
        Every step was excluded.
    """
    if samples.n_total == 0:
        raise DegenerateStatisticsError("no samples")
    if samples.n_included == 0:
        raise DegenerateStatisticsError("all samples excluded, no overlap statistics")
    frac = samples.dt_o[samples.included] / float(samples.dt)
    return OverlapStats(
        dt=samples.dt,
        mean_fractional_overlap=float(frac.mean()),
        n_included=samples.n_included,
        n_excluded=samples.n_excluded,
    )
