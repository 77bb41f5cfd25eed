"""Post-fit inference: the estimated transformation, delta-method
variances, conditional summaries, and probability-scale residuals.

The fitted transformation is the right-continuous step function
Ahat(y) = alpha_k at the largest cut a_k <= y.  Above the largest cut the
last finite level is used (the Ahat(U) = Ahat(U-) convention); below the
smallest cut the value is -inf ("below support").  Variances come from
the inverse information at the solution, computed through the cached
block factorization; the full inverse is never materialized.

Every function here accepts a fitted model object exposing ``cuts``,
``alpha``, ``beta``, ``link``, ``bounds`` and ``block_factor()`` (a
CpmFit, or a model reloaded from a saved report).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import CensoredMeanError, OutOfRangeError
from .links import get_link

_BELOW = -np.inf


def _zscore(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    from scipy.special import ndtri

    return float(ndtri(0.5 + 0.5 * level))


def _check_range(fit, y: float):
    if fit.bounds is not None:
        lower, upper = fit.bounds
        if y < lower or y > upper:
            raise OutOfRangeError(
                f"query point {y!r} lies outside the censoring interval "
                f"[{lower!r}, {upper!r}] where the transformation is not identified"
            )


def _cut_index(fit, y: float) -> int:
    """Index of the covering cut: largest cut <= y; -1 when below all cuts.

    Capped at the next-to-last cut, whose alpha is the level of Ahat just
    below the largest cut (and at it, by the right-limit convention)."""
    k = int(np.searchsorted(fit.cuts, y, side="right")) - 1
    return min(k, fit.alpha.shape[0] - 1)


def ahat(fit, y: float) -> float:
    """Ahat(y); -inf below the smallest cut (below support)."""
    _check_range(fit, y)
    k = _cut_index(fit, y)
    if k < 0:
        return _BELOW
    return float(fit.alpha[k])


def ahat_interval(fit, y: float, level: float = 0.95):
    """(estimate, se, (lo, hi)) for Ahat(y) on the link scale."""
    _check_range(fit, y)
    k = _cut_index(fit, y)
    if k < 0:
        return _BELOW, None, (None, None)
    est = float(fit.alpha[k])
    m = fit.alpha.shape[0]
    p = fit.beta.shape[0]
    e_k = np.zeros(m)
    e_k[k] = 1.0
    xa, xb = fit.block_factor().solve(e_k, np.zeros(p))
    se = float(np.sqrt(xa[k]))
    zq = _zscore(level)
    return est, se, (est - zq * se, est + zq * se)


@dataclass
class FunctionalContrast:
    """Linear functional of the transformation: sum_j h(a_j) s_j, with s_j
    the jump of Ahat at cut j.

    The weight at the largest cut is inert (the jump there is not an
    estimable parameter; Ahat(U) = Ahat(U-)).  The implied coefficients on
    alpha follow from s_1 = alpha_1 (the level before the first cut is the
    reporting anchor) and s_j = alpha_j - alpha_{j-1}.
    """

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise ValueError("contrast weights must be one-dimensional")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("contrast weights must be finite")

    @classmethod
    def point(cls, cuts, y: float) -> "FunctionalContrast":
        """Weights selecting Ahat(y) itself (all jumps up through y)."""
        cuts = np.asarray(cuts, dtype=float)
        return cls((cuts <= y).astype(float))

    @classmethod
    def increment(cls, cuts, y0: float, y1: float) -> "FunctionalContrast":
        """Weights for Ahat(y1) - Ahat(y0), an anchor-free contrast."""
        cuts = np.asarray(cuts, dtype=float)
        return cls(((cuts > y0) & (cuts <= y1)).astype(float))

    def alpha_coefficients(self, n_alpha: int) -> np.ndarray:
        h = self.weights
        if h.shape[0] != n_alpha + 1:
            raise ValueError(
                f"contrast has {h.shape[0]} weights but the fit has "
                f"{n_alpha + 1} cuts"
            )
        c = np.empty(n_alpha)
        c[:-1] = h[: n_alpha - 1] - h[1:n_alpha]
        c[-1] = h[n_alpha - 1]
        return c


def functional_variance(
    fit, contrasts: Sequence[FunctionalContrast] = (), include_beta: bool = True
) -> np.ndarray:
    """Joint covariance of (beta, Ahat[h_1], ..., Ahat[h_m]).

    With no contrasts and include_beta=True this is exactly the p x p beta
    covariance (the inverse Schur complement).
    """
    m = fit.alpha.shape[0]
    p = fit.beta.shape[0]
    cols_a = []
    cols_b = []
    if include_beta:
        for i in range(p):
            cols_a.append(np.zeros(m))
            cols_b.append(np.eye(p)[i])
    for h in contrasts:
        cols_a.append(h.alpha_coefficients(m))
        cols_b.append(np.zeros(p))
    if not cols_a:
        return np.zeros((0, 0))
    va = np.column_stack(cols_a)
    vb = np.column_stack(cols_b) if p else np.zeros((p, len(cols_a)))
    xa, xb = fit.block_factor().solve(va, vb)
    return va.T @ xa + (vb.T @ xb if p else 0.0)


def _eta(fit, z):
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != fit.beta.shape[0]:
        raise ValueError(
            f"covariate vector has length {z.shape[0]}, expected {fit.beta.shape[0]}"
        )
    eta = float(z @ fit.beta) if z.size else 0.0
    return eta, z


def _lp_variance(fit, k: int, z: np.ndarray) -> float:
    """Var(alpha_k - z'beta) through the factored information."""
    m = fit.alpha.shape[0]
    p = fit.beta.shape[0]
    va = np.zeros(m)
    va[k] = 1.0
    vb = -z if p else np.zeros(0)
    xa, xb = fit.block_factor().solve(va, vb)
    return float(va @ xa + (vb @ xb if p else 0.0))


@dataclass
class CdfResult:
    estimate: float
    se: Optional[float]
    ci: Tuple[Optional[float], Optional[float]]
    note: Optional[str] = None


def conditional_cdf(fit, y: float, z=(), level: float = 0.95) -> CdfResult:
    """P(Y <= y | Z = z) with a delta-method CI mapped through the link."""
    _check_range(fit, y)
    eta, z = _eta(fit, z)
    link = get_link(fit.link)
    k = int(np.searchsorted(fit.cuts, y, side="right")) - 1
    m = fit.alpha.shape[0]
    if k < 0:
        return CdfResult(0.0, None, (None, None), note="below support")
    if k >= m:
        if fit.bounds is not None:
            # y == U: report the identified left limit
            k = m - 1
            note = "upper bound: left limit F(U-)"
        else:
            return CdfResult(
                1.0, None, (None, None), note="at or above the largest observed value"
            )
    else:
        note = None
    lp = float(fit.alpha[k]) - eta
    var = _lp_variance(fit, k, z)
    se_lp = float(np.sqrt(max(var, 0.0)))
    est = float(link.cdf(lp))
    se = float(link.pdf(lp)) * se_lp
    zq = _zscore(level)
    lo = float(link.cdf(lp - zq * se_lp))
    hi = float(link.cdf(lp + zq * se_lp))
    return CdfResult(est, se, (lo, hi), note=note)


@dataclass
class QuantileResult:
    estimate: float
    ci: Tuple[Optional[float], Optional[float]]
    at_boundary: bool = False
    note: Optional[str] = None


def _invert_curve(ys, fs, q):
    """Invert a nondecreasing piecewise-linear curve f over knots ys.

    Returns (value, at_lower, at_upper)."""
    fs = np.maximum.accumulate(fs)
    if q < fs[0]:
        return float(ys[0]), True, False
    if q > fs[-1]:
        return float(ys[-1]), False, True
    j = int(np.searchsorted(fs, q, side="left"))
    if fs[j] == q:
        return float(ys[j]), False, False
    f0, f1 = fs[j - 1], fs[j]
    y0, y1 = ys[j - 1], ys[j]
    frac = (q - f0) / (f1 - f0)
    return float(y0 + frac * (y1 - y0)), False, False


def _cdf_knots(fit, eta: float):
    """Outcome knots and fitted CDF values there.

    Censored fits stop at F(U-); uncensored fits end with (a_J, 1)."""
    link = get_link(fit.link)
    cuts = fit.cuts
    m = fit.alpha.shape[0]
    lp = fit.alpha - eta
    fs = link.cdf(lp)
    if fit.bounds is None:
        ys = cuts
        fs = np.append(fs, 1.0)
    else:
        ys = cuts[:m]
    return ys, fs, lp


def conditional_quantile(
    fit, q: float, z=(), level: float = 0.95, ci: bool = True
) -> QuantileResult:
    """The q-th conditional quantile by inverting the fitted step CDF,
    linearly interpolated between adjacent cuts.

    No standard error is reported; when requested, the CI comes from
    inverting the pointwise CDF confidence band.  Solutions at or beyond a
    censoring bound are flagged instead of extrapolated.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    eta, z = _eta(fit, z)
    ys, fs, lp = _cdf_knots(fit, eta)
    est, at_lo, at_hi = _invert_curve(ys, fs, q)
    boundary = at_lo or at_hi
    note = None
    if at_lo:
        note = "at or below the smallest cut"
    elif at_hi:
        note = "at or beyond the upper censoring bound"
    if not ci:
        return QuantileResult(est, (None, None), boundary, note)

    link = get_link(fit.link)
    m = fit.alpha.shape[0]
    se_lp = np.sqrt(np.maximum(_lp_variances(fit, z), 0.0))
    zq = _zscore(level)
    upper = link.cdf(lp + zq * se_lp)
    lower = link.cdf(lp - zq * se_lp)
    if fit.bounds is None:
        upper = np.append(upper, 1.0)
        lower = np.append(lower, 1.0)
    lo_y, lo_at_lo, lo_at_hi = _invert_curve(ys, upper, q)
    hi_y, hi_at_lo, hi_at_hi = _invert_curve(ys, lower, q)
    return QuantileResult(est, (lo_y, hi_y), boundary, note)


def _lp_variances(fit, z: np.ndarray) -> np.ndarray:
    """Var(alpha_k - z'beta) for every cut k at once.

    Uses the block-inverse identity: the alpha block of the inverse is
    Haa^{-1} + W S^{-1} W', and the cross block is -W S^{-1}, so the
    variance is diag(Haa^{-1}) plus a rank-p quadratic form per row."""
    factor = fit.block_factor()
    base = factor.alpha_inverse_diag()
    p = fit.beta.shape[0]
    if p == 0:
        return base
    w = factor.w_matrix()
    sinv = factor.beta_cov()
    rows = w + z[None, :]
    return base + np.einsum("mp,pq,mq->m", rows, sinv, rows)


@dataclass
class MeanResult:
    estimate: float
    se: float
    ci: Tuple[float, float]


def conditional_mean(fit, z=(), level: float = 0.95) -> MeanResult:
    """E(Y | Z = z) under the fitted distribution, with a delta-method SE.

    Refused on censored fits: the distribution beyond [L, U] is unknown,
    so the mean is not identified there."""
    if fit.bounds is not None:
        raise CensoredMeanError(
            "conditional mean is not identified when outcomes are censored "
            f"at bounds {fit.bounds!r}; mass at the bounds has unknown location"
        )
    eta, z = _eta(fit, z)
    link = get_link(fit.link)
    cuts = fit.cuts
    m = fit.alpha.shape[0]
    lp = fit.alpha - eta
    fs = link.cdf(lp)
    gs = link.pdf(lp)
    gaps_right = np.diff(cuts)  # a_{k+1} - a_k for k = 1..J-1
    est = float(cuts[-1] - np.sum(fs * gaps_right))
    d_alpha = -gaps_right * gs
    d_beta = float(np.sum(gaps_right * gs)) * z if z.size else np.zeros(0)
    xa, xb = fit.block_factor().solve(d_alpha, d_beta)
    var = float(d_alpha @ xa + (d_beta @ xb if z.size else 0.0))
    se = float(np.sqrt(max(var, 0.0)))
    zq = _zscore(level)
    return MeanResult(est, se, (est - zq * se, est + zq * se))


def probability_scale_residuals(fit) -> np.ndarray:
    """P(Y* < y) - P(Y* > y) residuals under the fitted distribution.

    For an exact observation this is F(y-) + F(y) - 1; censored
    observations use the identified tail: F(L) - 1 on the left, F(U-) on
    the right.  With the encoding's cell convention all three reduce to
    the same cell formula."""
    enc = getattr(fit, "enc", None)
    if enc is None:
        raise ValueError("residuals need the fitted dataset; not available from a report")
    link = get_link(fit.link)
    from .likelihood import linear_predictor

    eta = linear_predictor(enc, fit.beta)
    m = fit.alpha.shape[0]
    c = enc.category - 1
    f_hi = np.where(c <= m - 1, link.cdf(fit.alpha[np.minimum(c, m - 1)] - eta), 1.0)
    f_lo = np.where(c >= 1, link.cdf(fit.alpha[np.maximum(c - 1, 0)] - eta), 0.0)
    return f_lo + f_hi - 1.0
