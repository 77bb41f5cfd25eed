# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: cell log likelihoods, score and information
accumulation, and the tridiagonal LDL' factor behind the Newton step.

Semantics must match ``_pure.py`` exactly; the test suite cross-checks
the two backends on randomized inputs.
"""

import numpy as np

from libc.math cimport exp, expm1, fabs, log, log1p, sqrt, INFINITY
from scipy.special.cython_special cimport log_ndtr, ndtr

NAME = "compiled"

cdef double CLAMP = 40.0
cdef double TINY = 1e-300
cdef double LN2 = 0.6931471805599453
cdef double SQRT_2PI = 2.5066282746310002

# link codes; must match links.py
cdef int PROBIT = 0
cdef int LOGIT = 1
cdef int EXTREME_VALUE = 2


cdef inline double _log1mexp(double a) nogil:
    # log(1 - e^a) for a <= 0
    if a > -LN2:
        return log(-expm1(a))
    return log1p(-exp(a))


cdef inline double _cdf(int code, double x) nogil:
    cdef double e
    if code == PROBIT:
        return ndtr(x)
    elif code == LOGIT:
        if x >= 0.0:
            return 1.0 / (1.0 + exp(-x))
        e = exp(x)
        return e / (1.0 + e)
    else:
        return -expm1(-exp(x))


cdef inline double _pdf(int code, double x) nogil:
    cdef double e
    if code == PROBIT:
        return exp(-0.5 * x * x) / SQRT_2PI
    elif code == LOGIT:
        e = _cdf(LOGIT, x)
        return e * (1.0 - e)
    else:
        return exp(x - exp(x))


cdef inline double _dpdf(int code, double x) nogil:
    if code == PROBIT:
        return -x * _pdf(PROBIT, x)
    elif code == LOGIT:
        return _pdf(LOGIT, x) * (1.0 - 2.0 * _cdf(LOGIT, x))
    else:
        return _pdf(EXTREME_VALUE, x) * (1.0 - exp(x))


cdef inline double _pdf_ratio(int code, double x) nogil:
    # g'(x)/g(x)
    if code == PROBIT:
        return -x
    elif code == LOGIT:
        return 1.0 - 2.0 * _cdf(LOGIT, x)
    else:
        return 1.0 - exp(x)


cdef inline double _softplus(double x) nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _log_cdf(int code, double x) nogil:
    if code == PROBIT:
        return log_ndtr(x)
    elif code == LOGIT:
        return -_softplus(-x)
    else:
        return _log1mexp(-exp(x))


cdef inline double _log_sf(int code, double x) nogil:
    if code == PROBIT:
        return log_ndtr(-x)
    elif code == LOGIT:
        return -_softplus(x)
    else:
        return -exp(x)


cdef inline double _log_pdf(int code, double x) nogil:
    if code == PROBIT:
        return -0.5 * x * x - log(SQRT_2PI)
    elif code == LOGIT:
        return -_softplus(-x) - _softplus(x)
    else:
        return x - exp(x)


cdef inline double _interior_logprob(int code, double xhi, double xlo) nogil:
    cdef double lhi, llo
    if xhi <= 0.0:
        lhi = _log_cdf(code, xhi)
        llo = _log_cdf(code, xlo)
        return lhi + _log1mexp(llo - lhi)
    if xlo >= 0.0:
        lhi = _log_sf(code, xhi)
        llo = _log_sf(code, xlo)
        return llo + _log1mexp(lhi - llo)
    return log(_cdf(code, xhi) - _cdf(code, xlo))


def loglik(int code, double[::1] alpha, double[::1] eta, Py_ssize_t[::1] cat):
    """Total log likelihood and the clamp-event count."""
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t m = alpha.shape[0]
    cdef Py_ssize_t i, c
    cdef int n_clamped = 0
    cdef double total = 0.0
    cdef double xhi, xlo

    with nogil:
        for i in range(n):
            c = cat[i]
            if c == 0:
                xhi = alpha[0] - eta[i]
                if xhi > CLAMP:
                    xhi = CLAMP
                    n_clamped += 1
                elif xhi < -CLAMP:
                    xhi = -CLAMP
                    n_clamped += 1
                total += _log_cdf(code, xhi)
            elif c == m:
                xlo = alpha[m - 1] - eta[i]
                if xlo > CLAMP:
                    xlo = CLAMP
                    n_clamped += 1
                elif xlo < -CLAMP:
                    xlo = -CLAMP
                    n_clamped += 1
                total += _log_sf(code, xlo)
            else:
                xhi = alpha[c] - eta[i]
                if xhi > CLAMP:
                    xhi = CLAMP
                    n_clamped += 1
                elif xhi < -CLAMP:
                    xhi = -CLAMP
                    n_clamped += 1
                xlo = alpha[c - 1] - eta[i]
                if xlo > CLAMP:
                    xlo = CLAMP
                    n_clamped += 1
                elif xlo < -CLAMP:
                    xlo = -CLAMP
                    n_clamped += 1
                total += _interior_logprob(code, xhi, xlo)
    return total, n_clamped


def score_info(int code, double[::1] alpha, double[::1] eta,
               Py_ssize_t[::1] cat, double[:, ::1] z):
    """Log likelihood, gradient, and negative-Hessian blocks in one pass."""
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t m = alpha.shape[0]
    cdef Py_ssize_t p = z.shape[1]
    cdef Py_ssize_t i, c, q, s
    cdef int n_clamped = 0
    cdef double total = 0.0

    grad_a = np.zeros(m)
    grad_b = np.zeros(p)
    haa_d = np.zeros(m)
    haa_e = np.zeros(m - 1 if m > 1 else 0)
    hab = np.zeros((m, p))
    hbb = np.zeros((p, p))
    cdef double[::1] ga = grad_a
    cdef double[::1] gb = grad_b
    cdef double[::1] hd = haa_d
    cdef double[::1] he = haa_e
    cdef double[:, ::1] hab_v = hab
    cdef double[:, ::1] hbb_v = hbb

    cdef double xhi, xlo, li, pi, r, t, qq
    cdef double ghi, glo, gphi, gplo, u, w, rhi, rlo, ru
    cdef double chb, vhi, vlo, cbb

    with nogil:
        for i in range(n):
            c = cat[i]
            chb = 0.0
            vhi = 0.0
            vlo = 0.0
            cbb = 0.0
            if c == 0:
                xhi = alpha[0] - eta[i]
                if xhi > CLAMP:
                    xhi = CLAMP
                    n_clamped += 1
                elif xhi < -CLAMP:
                    xhi = -CLAMP
                    n_clamped += 1
                li = _log_cdf(code, xhi)
                total += li
                r = exp(_log_pdf(code, xhi) - li)
                t = _pdf_ratio(code, xhi)
                qq = r * (r - t)
                ga[0] += r
                hd[0] += qq
                chb = -r
                vhi = -qq
                cbb = qq
                for q in range(p):
                    gb[q] += chb * z[i, q]
                    hab_v[0, q] += vhi * z[i, q]
            elif c == m:
                xlo = alpha[m - 1] - eta[i]
                if xlo > CLAMP:
                    xlo = CLAMP
                    n_clamped += 1
                elif xlo < -CLAMP:
                    xlo = -CLAMP
                    n_clamped += 1
                li = _log_sf(code, xlo)
                total += li
                r = exp(_log_pdf(code, xlo) - li)
                t = _pdf_ratio(code, xlo)
                qq = r * (r + t)
                ga[m - 1] -= r
                hd[m - 1] += qq
                chb = r
                vlo = -qq
                cbb = qq
                for q in range(p):
                    gb[q] += chb * z[i, q]
                    hab_v[m - 1, q] += vlo * z[i, q]
            else:
                xhi = alpha[c] - eta[i]
                if xhi > CLAMP:
                    xhi = CLAMP
                    n_clamped += 1
                elif xhi < -CLAMP:
                    xhi = -CLAMP
                    n_clamped += 1
                xlo = alpha[c - 1] - eta[i]
                if xlo > CLAMP:
                    xlo = CLAMP
                    n_clamped += 1
                elif xlo < -CLAMP:
                    xlo = -CLAMP
                    n_clamped += 1
                li = _interior_logprob(code, xhi, xlo)
                total += li
                pi = exp(li)
                if pi < TINY:
                    pi = TINY
                ghi = _pdf(code, xhi)
                glo = _pdf(code, xlo)
                gphi = _dpdf(code, xhi)
                gplo = _dpdf(code, xlo)
                u = ghi - glo
                w = gphi - gplo
                rhi = ghi / pi
                rlo = glo / pi
                ru = u / pi
                ga[c] += rhi
                ga[c - 1] -= rlo
                hd[c] += rhi * rhi - gphi / pi
                hd[c - 1] += rlo * rlo + gplo / pi
                he[c - 1] += -rhi * rlo
                chb = -ru
                vhi = gphi / pi - rhi * ru
                vlo = -gplo / pi + rlo * ru
                cbb = ru * ru - w / pi
                for q in range(p):
                    gb[q] += chb * z[i, q]
                    hab_v[c, q] += vhi * z[i, q]
                    hab_v[c - 1, q] += vlo * z[i, q]
            for q in range(p):
                for s in range(p):
                    hbb_v[q, s] += cbb * z[i, q] * z[i, s]

    return total, n_clamped, grad_a, grad_b, haa_d, haa_e, hab, hbb


def tridiag_factor(double[::1] d, double[::1] e):
    """LDL' factor of the symmetric tridiagonal matrix with diagonal d and
    superdiagonal e.  Returns None when the matrix is not positive definite."""
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t i
    dfac = np.empty(m)
    lfac = np.empty(m - 1 if m > 1 else 0)
    cdef double[::1] df = dfac
    cdef double[::1] lf = lfac
    cdef double l

    if not d[0] > 0.0:
        return None
    df[0] = d[0]
    for i in range(m - 1):
        l = e[i] / df[i]
        lf[i] = l
        df[i + 1] = d[i + 1] - l * l * df[i]
        if not df[i + 1] > 0.0:
            return None
    return dfac, lfac


def tridiag_ldl(factor):
    """(d, l) of the LDL' factorization; the factor already is that pair."""
    return factor


def tridiag_solve(factor, b):
    """Solve the LDL'-factored tridiagonal system; b may be (m,) or (m, k)."""
    dfac, lfac = factor
    b_arr = np.asarray(b, dtype=float)
    squeeze = b_arr.ndim == 1
    if squeeze:
        b_arr = b_arr[:, None]
    x = np.array(b_arr, dtype=float, order="F", copy=True)
    cdef double[::1, :] xv = x
    cdef double[::1] df = dfac
    cdef double[::1] lf = lfac
    cdef Py_ssize_t m = df.shape[0]
    cdef Py_ssize_t k = xv.shape[1]
    cdef Py_ssize_t i, j

    with nogil:
        for j in range(k):
            for i in range(1, m):
                xv[i, j] -= lf[i - 1] * xv[i - 1, j]
            for i in range(m):
                xv[i, j] /= df[i]
            for i in range(m - 2, -1, -1):
                xv[i, j] -= lf[i] * xv[i + 1, j]
    x = np.ascontiguousarray(x)
    return x[:, 0] if squeeze else x
