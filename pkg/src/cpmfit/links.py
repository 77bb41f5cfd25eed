"""Link functions G used by the cumulative probability model.

Each link is a continuous CDF G with density g = G' and derivative g'.
The model is G^{-1}(P(Y <= y | Z)) = A(y) - beta'Z, so G maps the linear
scale to probabilities and G^{-1} (the quantile) goes back.

Three links are provided:

* probit:        G = standard normal CDF
* logit:         G(x) = e^x / (1 + e^x)
* extreme value: G(x) = 1 - exp(-e^x)   (complementary log-log)

``log_cdf`` and ``log_sf`` are evaluated in log space so they stay finite
and monotone over the whole working range [-40, 40] even where G itself
saturates to 0.0 or 1.0 in double precision (probit saturates beyond
|x| ~ 38, the extreme value upper tail beyond x ~ 3.7).
"""

from __future__ import annotations

import numpy as np
from scipy import special

_LN2 = float(np.log(2.0))
_SQRT_2PI = float(np.sqrt(2.0 * np.pi))

# Kernel dispatch codes; must match _kernels/_core.pyx.
PROBIT_CODE = 0
LOGIT_CODE = 1
EXTREME_VALUE_CODE = 2


def log1mexp(a):
    """log(1 - e^a) for a <= 0, switching branches at -log 2 for accuracy.

    a == 0 yields -inf (the mathematically correct limit); callers that
    must avoid -inf are responsible for keeping a strictly negative.
    """
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.log(-np.expm1(np.minimum(a, 0.0)))
        large = np.log1p(-np.exp(np.minimum(a, 0.0)))
    return np.where(a > -_LN2, small, large)


class Link:
    """A link function with its density, derivatives, and stable log tails."""

    name: str
    code: int

    # -- probabilities -------------------------------------------------

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def dpdf(self, x):
        """g'(x), the derivative of the density."""
        raise NotImplementedError

    def pdf_ratio(self, x):
        """g'(x) / g(x), computed without forming either factor."""
        raise NotImplementedError

    def log_pdf(self, x):
        """log g(x), stable far into the tails."""
        raise NotImplementedError

    # -- log tails -----------------------------------------------------

    def log_cdf(self, x):
        raise NotImplementedError

    def log_sf(self, x):
        """log(1 - G(x))."""
        raise NotImplementedError

    # -- inverse -------------------------------------------------------

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        return self._quantile(p)

    def _quantile(self, p):
        raise NotImplementedError

    def eval(self, x):
        """Return (G(x), g(x), g'(x)) in one call."""
        return self.cdf(x), self.pdf(x), self.dpdf(x)

    def log_tails(self, x):
        """Return (log G(x), log(1 - G(x)))."""
        return self.log_cdf(x), self.log_sf(x)

    def __repr__(self):
        return f"<link {self.name}>"


class _Probit(Link):
    name = "probit"
    code = PROBIT_CODE

    def cdf(self, x):
        return special.ndtr(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / _SQRT_2PI

    def dpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -x * self.pdf(x)

    def pdf_ratio(self, x):
        return -np.asarray(x, dtype=float)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x - np.log(_SQRT_2PI)

    def log_cdf(self, x):
        return special.log_ndtr(x)

    def log_sf(self, x):
        return special.log_ndtr(-np.asarray(x, dtype=float))

    def _quantile(self, p):
        return special.ndtri(p)


class _Logit(Link):
    name = "logit"
    code = LOGIT_CODE

    def cdf(self, x):
        return special.expit(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return special.expit(x) * special.expit(-x)

    def dpdf(self, x):
        return self.pdf(x) * self.pdf_ratio(x)

    def pdf_ratio(self, x):
        x = np.asarray(x, dtype=float)
        return special.expit(-x) - special.expit(x)

    def log_pdf(self, x):
        # g = G(1-G), so log g = log G + log(1-G)
        x = np.asarray(x, dtype=float)
        return -np.logaddexp(0.0, -x) - np.logaddexp(0.0, x)

    def log_cdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.logaddexp(0.0, -x)

    def log_sf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.logaddexp(0.0, x)

    def _quantile(self, p):
        return np.log(p) - np.log1p(-p)


class _ExtremeValue(Link):
    """G(x) = 1 - exp(-e^x); the complementary log-log link."""

    name = "extreme-value"
    code = EXTREME_VALUE_CODE

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(-np.exp(x))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x - np.exp(x))

    def dpdf(self, x):
        return self.pdf(x) * self.pdf_ratio(x)

    def pdf_ratio(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 - np.exp(x)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return x - np.exp(x)

    def log_cdf(self, x):
        x = np.asarray(x, dtype=float)
        return log1mexp(-np.exp(x))

    def log_sf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.exp(x)

    def _quantile(self, p):
        return np.log(-np.log1p(-p))


PROBIT = _Probit()
LOGIT = _Logit()
EXTREME_VALUE = _ExtremeValue()

_REGISTRY = {
    "probit": PROBIT,
    "logit": LOGIT,
    "extreme-value": EXTREME_VALUE,
    # common alias for the extreme value link
    "cloglog": EXTREME_VALUE,
}

LINK_NAMES = ("probit", "logit", "extreme-value")


def get_link(name) -> Link:
    """Look up a link by name ('probit', 'logit', 'extreme-value')."""
    if isinstance(name, Link):
        return name
    try:
        return _REGISTRY[str(name).lower().replace("_", "-")]
    except KeyError:
        raise ValueError(
            f"unknown link {name!r}; choose one of {', '.join(LINK_NAMES)}"
        ) from None
