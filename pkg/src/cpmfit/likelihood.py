"""Log likelihood, score, and information for the ordinal view of the model.

With distinct values a_1 < ... < a_J and alpha_k = A(a_k) for k < J, the
cell probabilities for an observation with linear predictor eta are

    first cell:    G(alpha_1 - eta)
    interior cell: G(alpha_k - eta) - G(alpha_{k-1} - eta)
    last cell:     1 - G(alpha_{J-1} - eta)

The first and last cells double as the left- and right-censored cells when
bounds apply, so one likelihood covers both cases.  All derivatives are
analytic; the negative Hessian is block sparse (tridiagonal alpha block),
which the solver and the delta-method variances exploit.

Cell probabilities are evaluated in log space and link arguments are
clamped to [-40, 40] (counted as clamp events), so the log likelihood
stays finite wherever the parameters are usable; a -inf value signals a
cell below double-precision resolution and is treated by the solver as a
rejected region, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import OrdinalEncoding
from .exceptions import NonMonotoneParametersError
from .links import Link, get_link


@dataclass
class SparseBlocks:
    """Negative Hessian in block form.

    aa_diag / aa_off: diagonal and superdiagonal of the (J-1)x(J-1)
    tridiagonal alpha block; ab: (J-1)xp cross block; bb: pxp beta block.
    """

    aa_diag: np.ndarray
    aa_off: np.ndarray
    ab: np.ndarray
    bb: np.ndarray

    @property
    def n_alpha(self) -> int:
        return self.aa_diag.shape[0]

    @property
    def n_beta(self) -> int:
        return self.bb.shape[0]

    def dense(self) -> np.ndarray:
        """Assemble the full (J-1+p) x (J-1+p) matrix (for small problems
        and cross-checks)."""
        m, p = self.n_alpha, self.n_beta
        full = np.zeros((m + p, m + p))
        idx = np.arange(m)
        full[idx, idx] = self.aa_diag
        if m > 1:
            full[idx[:-1], idx[:-1] + 1] = self.aa_off
            full[idx[:-1] + 1, idx[:-1]] = self.aa_off
        full[:m, m:] = self.ab
        full[m:, :m] = self.ab.T
        full[m:, m:] = self.bb
        return full


@dataclass
class ScoreInfo:
    """One fused evaluation: value, gradient, information, diagnostics."""

    loglik: float
    grad_alpha: np.ndarray
    grad_beta: np.ndarray
    blocks: SparseBlocks
    clamp_events: int

    @property
    def max_abs_gradient(self) -> float:
        ga = np.max(np.abs(self.grad_alpha)) if self.grad_alpha.size else 0.0
        gb = np.max(np.abs(self.grad_beta)) if self.grad_beta.size else 0.0
        return float(max(ga, gb))


def _check_params(enc: OrdinalEncoding, alpha, beta):
    alpha = np.ascontiguousarray(alpha, dtype=float)
    beta = np.ascontiguousarray(beta, dtype=float)
    if alpha.shape != (enc.n_alpha,):
        raise ValueError(
            f"alpha must have length {enc.n_alpha} (one per cut but the last), "
            f"got {alpha.shape}"
        )
    if beta.shape != (enc.p,):
        raise ValueError(f"beta must have length {enc.p}, got {beta.shape}")
    if alpha.shape[0] > 1:
        gaps = np.diff(alpha)
        if np.any(gaps <= 0.0):
            k = int(np.argmax(gaps <= 0.0))
            raise NonMonotoneParametersError(
                f"alpha must be strictly increasing; alpha[{k}]={alpha[k]!r} "
                f"and alpha[{k + 1}]={alpha[k + 1]!r} give a cell probability <= 0"
            )
    return alpha, beta


def linear_predictor(enc: OrdinalEncoding, beta: np.ndarray) -> np.ndarray:
    if enc.p == 0:
        return np.zeros(enc.n)
    return np.einsum("ij,j->i", enc.z, beta)


def _cat0(enc: OrdinalEncoding) -> np.ndarray:
    return np.ascontiguousarray(enc.category - 1, dtype=np.intp)


def loglik(enc: OrdinalEncoding, link, alpha, beta) -> float:
    """Total log likelihood; -inf when some cell underflows entirely."""
    link = get_link(link)
    alpha, beta = _check_params(enc, alpha, beta)
    eta = linear_predictor(enc, beta)
    value, _ = _kernels.active().loglik(link.code, alpha, eta, _cat0(enc))
    return value


def score_info(enc: OrdinalEncoding, link, alpha, beta) -> ScoreInfo:
    """Log likelihood, gradient, and negative-Hessian blocks in one pass."""
    link = get_link(link)
    alpha, beta = _check_params(enc, alpha, beta)
    eta = linear_predictor(enc, beta)
    ll, clamped, ga, gb, hd, he, hab, hbb = _kernels.active().score_info(
        link.code, alpha, eta, _cat0(enc), enc.z
    )
    return ScoreInfo(ll, ga, gb, SparseBlocks(hd, he, hab, hbb), clamped)


def score(enc: OrdinalEncoding, link, alpha, beta):
    """Gradient of the log likelihood with respect to (alpha, beta)."""
    si = score_info(enc, link, alpha, beta)
    return si.grad_alpha, si.grad_beta


def information(enc: OrdinalEncoding, link, alpha, beta) -> SparseBlocks:
    """Negative Hessian of the log likelihood in sparse block form."""
    return score_info(enc, link, alpha, beta).blocks


def stationarity_residual(enc: OrdinalEncoding, link, alpha, beta) -> float:
    """Max absolute score component: the convergence certificate.

    At the maximum the score in every coordinate vanishes, so this is the
    computable residual of the stationarity equations.
    """
    return score_info(enc, link, alpha, beta).max_abs_gradient


def _loglik_trial(code: int, alpha, eta, cat0):
    """Raw kernel call for line-search trials (no validation)."""
    return _kernels.active().loglik(code, alpha, eta, cat0)
