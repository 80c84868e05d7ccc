"""Correlation estimation for asynchronous, tick-discretized trade data.

The package measures and compensates two statistical distortions of
high-frequency correlation estimates: the asynchrony of trading times
(via effective-interval overlaps) and the discretization of prices by
the tick size (via conditional error moments), separately and
combined, plus a simulation rig with known ground-truth correlation to
validate them.
"""

from ._core import (
    ASYNC,
    COMBINED,
    COMBINED_APPROX,
    ESTIMATOR_KINDS,
    HAYASHI_YOSHIDA,
    PLAIN,
    TICK,
    TICK_APPROX,
    CorrelationEstimate,
)
from .errors import (
    ConfigError,
    CorrectionOvershootError,
    DataError,
    DegenerateStatisticsError,
    DegenerateVarianceError,
    EmptySeriesError,
    EppsError,
    GridMismatchError,
    GridViolationError,
    IncompleteMomentsError,
    InsufficientDataError,
    NoOverlapError,
    NoPriorTradeError,
    NumericalError,
    ParseError,
    PriceCollapseError,
)
from .estimators import (
    corr_async,
    corr_combined,
    corr_combined_approx,
    hayashi_yoshida,
    pearson,
)
from .harness import (
    EnsembleResult,
    EppsCurve,
    SweepConfig,
    ensemble_average,
    epps_sweep,
)
from .market_data import (
    CsvTradeFormat,
    PathReturns,
    SampledPath,
    TickSeries,
    arithmetic_returns,
    load_trades,
    previous_tick_sample,
    write_trades,
)
from .overlap import (
    OverlapStats,
    PairSamples,
    ReturnPairSample,
    compute_overlaps,
    overlap_stats,
)
from .simulator import (
    GarchConfig,
    SimMarketConfig,
    SimulatedPair,
    generate_correlated_garch,
    returns_to_prices,
    sample_trades,
    simulate_pair,
)
from .tick_correction import (
    CorrectedSigma,
    DiscretizationMoments,
    PriceChangeHistogram,
    build_histogram,
    corr_tick,
    corr_tick_approx,
    corrected_sigma,
    estimate_moments,
    write_moments,
)

__version__ = "0.1.0"
