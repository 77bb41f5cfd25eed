"""Vectorized NumPy fallback for the hot kernels.

Mirrors the compiled backend in ``_core.pyx`` operation for operation.
Reductions use ``np.bincount`` and three-operand ``einsum`` (no BLAS
dispatch), so results are deterministic for a given input ordering.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as _sla

from ..links import EXTREME_VALUE, LOGIT, PROBIT, log1mexp

NAME = "pure"

CLAMP = 40.0
_TINY = 1e-300

_LINK_BY_CODE = {PROBIT.code: PROBIT, LOGIT.code: LOGIT, EXTREME_VALUE.code: EXTREME_VALUE}


def _arguments(alpha, eta, cat):
    """Clamped cell-boundary arguments and the clamp count.

    Returns (xhi, xlo, first, last, mid, n_clamped).  xhi is +inf for the
    top category, xlo is -inf for the bottom one.
    """
    m = alpha.shape[0]
    first = cat == 0
    last = cat == m  # top category index is J-1 == m
    mid = ~(first | last)

    xhi = np.full(eta.shape, np.inf)
    nl = ~last
    xhi[nl] = alpha[cat[nl]] - eta[nl]
    xlo = np.full(eta.shape, -np.inf)
    nf = ~first
    xlo[nf] = alpha[cat[nf] - 1] - eta[nf]

    n_clamped = int(np.count_nonzero(np.abs(xhi[nl]) > CLAMP)) + int(
        np.count_nonzero(np.abs(xlo[nf]) > CLAMP)
    )
    xhi[nl] = np.clip(xhi[nl], -CLAMP, CLAMP)
    xlo[nf] = np.clip(xlo[nf], -CLAMP, CLAMP)
    return xhi, xlo, first, last, mid, n_clamped


def _cell_logprob(link, xhi, xlo, first, last, mid):
    """Per-observation log cell probabilities, evaluated in log space."""
    ll = np.empty(xhi.shape)
    ll[first] = link.log_cdf(xhi[first])
    ll[last] = link.log_sf(xlo[last])

    with np.errstate(divide="ignore", invalid="ignore"):
        low = mid & (xhi <= 0.0)
        if np.any(low):
            lhi = link.log_cdf(xhi[low])
            llo = link.log_cdf(xlo[low])
            ll[low] = lhi + log1mexp(llo - lhi)
        high = mid & (xlo >= 0.0)
        if np.any(high):
            shi = link.log_sf(xhi[high])
            slo = link.log_sf(xlo[high])
            ll[high] = slo + log1mexp(shi - slo)
        straddle = mid & (xlo < 0.0) & (xhi > 0.0)
        if np.any(straddle):
            ll[straddle] = np.log(link.cdf(xhi[straddle]) - link.cdf(xlo[straddle]))
    return ll


def loglik(code, alpha, eta, cat):
    """Total log likelihood and the clamp-event count."""
    link = _LINK_BY_CODE[code]
    xhi, xlo, first, last, mid, n_clamped = _arguments(alpha, eta, cat)
    ll = _cell_logprob(link, xhi, xlo, first, last, mid)
    return float(np.sum(ll)), n_clamped


def score_info(code, alpha, eta, cat, z):
    """Log likelihood, gradient, and negative-Hessian blocks in one pass.

    Returns (ll, n_clamped, grad_a, grad_b, haa_d, haa_e, hab, hbb) where
    haa_d/haa_e are the diagonal and superdiagonal of the (J-1)x(J-1)
    alpha block, hab is (J-1)xp and hbb is pxp.
    """
    link = _LINK_BY_CODE[code]
    m = alpha.shape[0]
    n = eta.shape[0]
    xhi, xlo, first, last, mid, n_clamped = _arguments(alpha, eta, cat)
    ll = _cell_logprob(link, xhi, xlo, first, last, mid)

    c_hi = np.zeros(n)  # d ll / d alpha[hi]
    c_lo = np.zeros(n)  # d ll / d alpha[lo]
    c_b = np.zeros(n)  # beta gradient multiplier of z
    w_hh = np.zeros(n)  # negative Hessian, (hi, hi)
    w_ll = np.zeros(n)  # (lo, lo)
    w_hl = np.zeros(n)  # (lo, hi) off-diagonal
    v_hi = np.zeros(n)  # H_ab row at hi
    v_lo = np.zeros(n)  # H_ab row at lo
    c_bb = np.zeros(n)  # H_bb multiplier of z z'

    if np.any(first):
        # bottom cell: pi = G(xhi); only the hi cut is active
        x = xhi[first]
        r = np.exp(link.log_pdf(x) - link.log_cdf(x))
        t = link.pdf_ratio(x)
        q = r * (r - t)
        c_hi[first] = r
        c_b[first] = -r
        w_hh[first] = q
        v_hi[first] = -q
        c_bb[first] = q

    if np.any(last):
        # top cell: pi = 1 - G(xlo); only the lo cut is active
        x = xlo[last]
        s = np.exp(link.log_pdf(x) - link.log_sf(x))
        t = link.pdf_ratio(x)
        q = s * (s + t)
        c_lo[last] = -s
        c_b[last] = s
        w_ll[last] = q
        v_lo[last] = -q
        c_bb[last] = q

    if np.any(mid):
        xh = xhi[mid]
        xl = xlo[mid]
        pi = np.maximum(np.exp(ll[mid]), _TINY)
        ghi = link.pdf(xh)
        glo = link.pdf(xl)
        gphi = link.dpdf(xh)
        gplo = link.dpdf(xl)
        u = ghi - glo
        rhi = ghi / pi
        rlo = glo / pi
        ru = u / pi
        c_hi[mid] = rhi
        c_lo[mid] = -rlo
        c_b[mid] = -ru
        w_hh[mid] = rhi * rhi - gphi / pi
        w_ll[mid] = rlo * rlo + gplo / pi
        w_hl[mid] = -rhi * rlo
        v_hi[mid] = gphi / pi - rhi * ru
        v_lo[mid] = -gplo / pi + rlo * ru
        c_bb[mid] = ru * ru - (gphi - gplo) / pi

    nl = ~last
    nf = ~first
    hi_idx = cat[nl]
    lo_idx = cat[nf] - 1

    grad_a = np.bincount(hi_idx, weights=c_hi[nl], minlength=m) + np.bincount(
        lo_idx, weights=c_lo[nf], minlength=m
    )
    haa_d = np.bincount(hi_idx, weights=w_hh[nl], minlength=m) + np.bincount(
        lo_idx, weights=w_ll[nf], minlength=m
    )
    if m >= 2:
        haa_e = np.bincount(cat[mid] - 1, weights=w_hl[mid], minlength=m - 1)
    else:
        haa_e = np.zeros(0)

    p = z.shape[1]
    grad_b = np.einsum("i,ij->j", c_b, z)
    hbb = np.einsum("i,ij,ik->jk", c_bb, z, z)
    hab = np.empty((m, p))
    for q in range(p):
        hab[:, q] = np.bincount(hi_idx, weights=(v_hi * z[:, q])[nl], minlength=m)
        hab[:, q] += np.bincount(lo_idx, weights=(v_lo * z[:, q])[nf], minlength=m)

    return float(np.sum(ll)), n_clamped, grad_a, grad_b, haa_d, haa_e, hab, hbb


def tridiag_factor(d, e):
    """Banded Cholesky of the symmetric tridiagonal matrix (d, e).

    Returns an opaque factor for ``tridiag_solve``, or None when the
    matrix is not positive definite.
    """
    m = d.shape[0]
    ab = np.zeros((2, m))
    if m > 1:
        ab[0, 1:] = e
    ab[1, :] = d
    try:
        factor = _sla.cholesky_banded(ab, lower=False, check_finite=False)
    except _sla.LinAlgError:
        return None
    if not np.all(np.isfinite(factor)):
        return None  # non-finite input slips through pbtrf unchecked
    return factor


def tridiag_solve(factor, b):
    """Solve the factored tridiagonal system for one or many right sides."""
    return _sla.cho_solve_banded((factor, False), b, check_finite=False)


def tridiag_ldl(factor):
    """(d, l) of the LDL' factorization, derived from the banded Cholesky
    factor U via d_i = U_ii^2 and l_i = U_{i,i+1} / U_ii."""
    u_diag = factor[1]
    d = u_diag * u_diag
    if factor.shape[1] > 1:
        l = factor[0, 1:] / u_diag[:-1]
    else:
        l = np.zeros(0)
    return d, l
