"""Shared statistical primitives.

Population (1/n) moments throughout, matching the averaging convention
of the estimators.  All reductions go through ``np.sum``/``np.mean``
(fixed-order pairwise summation), so results are bit-reproducible
regardless of how work is distributed across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVarianceError

PLAIN = "plain"
HAYASHI_YOSHIDA = "hayashi_yoshida"
ASYNC = "async"
TICK = "tick"
TICK_APPROX = "tick_approx"
COMBINED = "combined"
COMBINED_APPROX = "combined_approx"

ESTIMATOR_KINDS = (
    PLAIN,
    HAYASHI_YOSHIDA,
    ASYNC,
    TICK,
    TICK_APPROX,
    COMBINED,
    COMBINED_APPROX,
)


@dataclass(frozen=True)
class CorrelationEstimate:
    """A correlation value with its sample count and estimator kind.

    Plain Pearson values are confined to [-1, 1]; compensated
    estimators may exceed that range on noisy data, which
    ``exceeds_unit`` flags without failing.
    """

    value: float
    n_samples: int
    kind: str

    @property
    def exceeds_unit(self) -> bool:
        return abs(self.value) > 1.0


def pop_mean(x: np.ndarray) -> float:
    return float(np.mean(x))


def pop_var(x: np.ndarray) -> float:
    """Population variance, two-pass centered form."""
    d = x - np.mean(x)
    return float(np.mean(d * d))


def pop_cov(x: np.ndarray, y: np.ndarray) -> float:
    """Population covariance, two-pass centered form."""
    return float(np.mean((x - np.mean(x)) * (y - np.mean(y))))


def normalized(x: np.ndarray, what: str) -> np.ndarray:
    """Center by the mean and scale by the population standard deviation.

    Raises
    ------
    DegenerateVarianceError
        The series is constant.
    """
    d = x - np.mean(x)
    var = np.mean(d * d)
    if var <= 0.0:
        raise DegenerateVarianceError(f"{what} has zero variance")
    return d / np.sqrt(var)
