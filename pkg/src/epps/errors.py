"""Exception hierarchy shared by all epps modules.

Data problems (bad input files, empty series, too little data) and
numerical degeneracies (zero variance, no overlapping samples,
over-corrected variances) are kept on separate branches so the CLI can
map them to distinct exit codes.
"""


class EppsError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EppsError):
    """Problems with input data (parsing, grids, empty or short series)."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridViolationError(ParseError):
    """A decimal price does not sit on the declared tick grid."""


class EmptySeriesError(DataError):
    """Loading or filtering produced a series with no trades."""


class NoPriorTradeError(DataError):
    """A sampling grid starts before the instrument's first trade."""


class InsufficientDataError(DataError):
    """Fewer observations than an operation's configured minimum."""


class ConfigError(EppsError):
    """Invalid configuration (mismatched grids, bad model parameters)."""


class GridMismatchError(ConfigError):
    """Two sampled paths do not share origin, spacing and length."""


class NumericalError(EppsError):
    """Degenerate statistics that make an estimate undefined."""


class DegenerateVarianceError(NumericalError):
    """A return series has zero variance."""


class DegenerateStatisticsError(NumericalError):
    """No samples survive filtering, so statistics are undefined."""


class NoOverlapError(NumericalError):
    """No pair of effective return intervals overlaps."""


class IncompleteMomentsError(NumericalError):
    """A price-change bin occurs in the data but has no error moments."""


class CorrectionOvershootError(NumericalError):
    """The corrected variance came out non-positive.

    Carries the individual terms so the caller can report what went
    wrong.
    """

    def __init__(self, var_raw: float, var_theta: float, cov_term: float):
        self.var_raw = var_raw
        self.var_theta = var_theta
        self.cov_term = cov_term
        super().__init__(
            "corrected variance is not positive: "
            f"var(r)={var_raw:.6g} + var(theta/S)={var_theta:.6g} "
            f"+ 2*cov={2 * cov_term:.6g}"
        )


class PriceCollapseError(EppsError):
    """A one-step return of -100% or worse made the price path invalid."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"return <= -1 at step {step}; price path aborted")
