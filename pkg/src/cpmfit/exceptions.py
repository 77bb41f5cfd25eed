"""Error types raised by the public API."""


class CpmError(Exception):
    """Base class for all cpmfit errors."""


class InvalidBoundsError(CpmError, ValueError):
    """Censoring bounds are malformed (e.g. L >= U, or non-finite)."""


class IngestionError(CpmError, ValueError):
    """Input data could not be parsed or validated; message names the
    offending row or column."""


class DegenerateDataError(CpmError, ValueError):
    """Data cannot support a fit: fewer than two distinct outcome values,
    or no uncensored observation remains after applying bounds."""


class CollinearityError(CpmError, ValueError):
    """Covariate matrix is rank deficient; message names offending columns."""


class NonMonotoneParametersError(CpmError, ValueError):
    """Likelihood evaluated at a non-monotone alpha vector (some cell
    probability is not positive)."""


class SingularInformationError(CpmError, RuntimeError):
    """Information matrix is not positive definite at the fitted solution,
    so standard errors are unavailable.  The fit itself is still usable."""


class CensoredMeanError(CpmError, ValueError):
    """Conditional mean requested on a fit with censoring bounds.  The mean
    is not identified when tail mass sits at the bounds, so the request is
    refused rather than silently truncated."""


class OutOfRangeError(CpmError, ValueError):
    """Query point lies outside the censoring interval [L, U], where the
    transformation is not identified."""
