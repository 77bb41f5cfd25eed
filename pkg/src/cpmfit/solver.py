"""Nonparametric maximum likelihood fitting.

The parameters are (alpha, beta) with alpha the J-1 transformation values
at the cuts, kept strictly increasing.  Each Newton step solves the
block-sparse system in O(J p^2 + p^3): factor the tridiagonal alpha block
(LDL', O(J)), then eliminate it through the p x p Schur complement.

Step-halving keeps iterates feasible and strictly ascending in log
likelihood.  If halving stalls, the solver switches to an unconstrained
log-gap parameterization (alpha_1, log successive gaps) for the remaining
iterations; if the information factorization fails, a gradient-ascent step
with the same line search substitutes for the Newton step.  Divergence
(e.g. complete separation driving ||beta|| past 1e3) is flagged on the
result rather than raised: a non-converged fit is data, not an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as _sla

from . import _kernels
from .data import CensoredDataset, OrdinalEncoding, encode_ordinal
from .exceptions import CollinearityError, SingularInformationError
from .likelihood import (
    ScoreInfo,
    SparseBlocks,
    _cat0,
    _loglik_trial,
    linear_predictor,
    score_info,
)
from .links import Link, get_link

_LOGGAP_DENSE_MAX = 600  # dense theta-Hessian cutoff for the fallback phase


@dataclass
class FitOptions:
    """Solver controls; the defaults suit routine use."""

    max_iterations: int = 100
    grad_tol: float = 1e-7
    loglik_tol: float = 1e-10
    max_step_halvings: int = 30
    min_gap: float = 1e-12
    divergence_norm: float = 1e3


class BlockFactor:
    """Factorization of SparseBlocks supporting repeated solves.

    Factors the tridiagonal alpha block once and forms the p x p Schur
    complement S = bb - ab' Haa^{-1} ab; each subsequent solve costs one
    tridiagonal sweep plus a small triangular solve.
    """

    def __init__(self, blocks: SparseBlocks):
        self._kb = _kernels.active()
        self.blocks = blocks
        fac = self._kb.tridiag_factor(blocks.aa_diag, blocks.aa_off)
        if fac is None:
            raise SingularInformationError(
                "alpha block of the information matrix is not positive definite"
            )
        self._fac = fac
        p = blocks.n_beta
        if p:
            self._w = self._kb.tridiag_solve(fac, blocks.ab)  # Haa^{-1} ab
            schur = blocks.bb - np.einsum("mp,mq->pq", blocks.ab, self._w)
            try:
                self._schur_fac = _sla.cho_factor(schur, check_finite=False)
            except _sla.LinAlgError:
                raise SingularInformationError(
                    "Schur complement of the information matrix is not "
                    "positive definite"
                ) from None
            self._schur = schur
        else:
            self._w = np.zeros((blocks.n_alpha, 0))
            self._schur_fac = None
            self._schur = np.zeros((0, 0))

    def solve(self, u_alpha: np.ndarray, u_beta: np.ndarray):
        """Solve [Haa Hab; Hab' Hbb] x = (u_alpha, u_beta).

        Right sides may be vectors or (rows, k) matrices of columns."""
        u_alpha = np.asarray(u_alpha, dtype=float)
        u_beta = np.asarray(u_beta, dtype=float)
        squeeze = u_alpha.ndim == 1
        ua = u_alpha[:, None] if squeeze else u_alpha
        ub = u_beta[:, None] if squeeze else u_beta
        t = self._kb.tridiag_solve(self._fac, ua)
        if self._schur_fac is None:
            x, y = t, np.zeros_like(ub)
        else:
            rhs = ub - np.einsum("mp,mk->pk", self.blocks.ab, t)
            y = _sla.cho_solve(self._schur_fac, rhs, check_finite=False)
            x = t - np.einsum("mp,pk->mk", self._w, y)
        if squeeze:
            return x[:, 0], y[:, 0]
        return x, y

    def beta_cov(self) -> np.ndarray:
        """The beta block of the inverse information: S^{-1}."""
        p = self.blocks.n_beta
        if p == 0:
            return np.zeros((0, 0))
        return _sla.cho_solve(self._schur_fac, np.eye(p), check_finite=False)

    def w_matrix(self) -> np.ndarray:
        """Haa^{-1} Hab, the (J-1) x p workhorse of the block inverse."""
        return self._w

    def alpha_inverse_diag(self) -> np.ndarray:
        """Diagonal of Haa^{-1} from the LDL' factor, in O(J).

        Backward recurrence on the inverse of a tridiagonal matrix: only
        the next diagonal entry is needed at each step."""
        d, l = self._kb.tridiag_ldl(self._fac)
        m = d.shape[0]
        out = np.empty(m)
        out[m - 1] = 1.0 / d[m - 1]
        for i in range(m - 2, -1, -1):
            out[i] = 1.0 / d[i] + l[i] * l[i] * out[i + 1]
        return out


def newton_step(blocks: SparseBlocks, grad_alpha, grad_beta):
    """One Newton direction: solve info . delta = gradient.

    Raises SingularInformationError when the factorization fails; the
    caller is expected to fall back to a gradient step.
    """
    return BlockFactor(blocks).solve(np.asarray(grad_alpha, float), np.asarray(grad_beta, float))


def starting_values(enc: OrdinalEncoding, link):
    """ECDF-quantile alphas and zero beta.

    alpha_k = G^{-1}(cumulative proportion through cut k), clipped to
    [1/(2n), 1 - 1/(2n)].  With no covariates this is already the exact
    maximum likelihood solution.
    """
    link = get_link(link)
    n = enc.n
    cum = np.cumsum(enc.counts)[:-1] / n
    cum = np.clip(cum, 0.5 / n, 1.0 - 0.5 / n)
    return link.quantile(cum), np.zeros(enc.p)


@dataclass
class CpmFit:
    """A fitted model: parameters, diagnostics, and the information blocks."""

    enc: OrdinalEncoding
    link: Link
    alpha: np.ndarray
    beta: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    max_abs_gradient: float
    clamp_events: int
    info: SparseBlocks
    diverged: bool = False
    used_loggap: bool = False
    gradient_steps: int = 0
    _factor: Optional[BlockFactor] = field(default=None, repr=False, compare=False)

    @property
    def cuts(self) -> np.ndarray:
        return self.enc.cuts

    @property
    def bounds(self):
        return self.enc.bounds

    @property
    def n(self) -> int:
        return self.enc.n

    @property
    def p(self) -> int:
        return self.enc.p

    @property
    def covariate_names(self):
        if self.enc.names is not None:
            return tuple(self.enc.names)
        return tuple(f"z{j + 1}" for j in range(self.p))

    def block_factor(self) -> BlockFactor:
        """Factorization of the information at the solution (cached)."""
        if self._factor is None:
            self._factor = BlockFactor(self.info)
        return self._factor

    def beta_cov(self) -> np.ndarray:
        return self.block_factor().beta_cov()

    def beta_se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.beta_cov()))


def _check_design(z: np.ndarray, names):
    n, p = z.shape
    if p == 0:
        return
    labels = list(names) if names else [f"z{j + 1}" for j in range(p)]
    spread = np.ptp(z, axis=0)
    constant = np.where(spread == 0.0)[0]
    if constant.size:
        cols = ", ".join(repr(labels[j]) for j in constant)
        raise CollinearityError(
            f"covariate column(s) {cols} are constant; the transformation "
            "already absorbs an intercept"
        )
    aug = np.column_stack([np.ones(n), z])
    _, r, piv = _sla.qr(aug, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(aug.shape) * np.finfo(float).eps
    rank = int(np.count_nonzero(diag > tol))
    if rank < p + 1:
        offending = sorted(labels[j - 1] for j in piv[rank:] if j > 0)
        cols = ", ".join(repr(c) for c in offending)
        raise CollinearityError(f"design is rank deficient; offending column(s): {cols}")


def _feasible(alpha: np.ndarray, min_gap: float) -> bool:
    if alpha.shape[0] <= 1:
        return bool(np.all(np.isfinite(alpha)))
    return bool(np.all(np.isfinite(alpha)) and np.all(np.diff(alpha) > min_gap))


class _Objective:
    """Cheap repeated log-likelihood trials for one dataset."""

    def __init__(self, enc: OrdinalEncoding, link: Link):
        self.enc = enc
        self.link = link
        self.cat0 = _cat0(enc)
        self.clamp_events = 0

    def value(self, alpha: np.ndarray, beta: np.ndarray) -> float:
        eta = linear_predictor(self.enc, beta)
        ll, clamped = _loglik_trial(self.link.code, alpha, eta, self.cat0)
        self.clamp_events += clamped
        return ll

    def state(self, alpha: np.ndarray, beta: np.ndarray) -> ScoreInfo:
        si = score_info(self.enc, self.link, alpha, beta)
        self.clamp_events += si.clamp_events
        return si


def _line_search(obj, alpha, beta, d_alpha, d_beta, ll_now, opts):
    """Backtracking line search; returns (alpha, beta, ll) or None on stall."""
    step = 1.0
    for _ in range(opts.max_step_halvings + 1):
        a_try = alpha + step * d_alpha
        b_try = beta + step * d_beta
        if _feasible(a_try, opts.min_gap):
            ll_try = obj.value(a_try, b_try)
            if np.isfinite(ll_try) and ll_try > ll_now:
                return a_try, b_try, ll_try
        step *= 0.5
    return None


def _polish(obj, alpha, beta, state, opts, budget):
    """Newton steps accepted on score reduction rather than ascent.

    Near the maximum the log likelihood is flat to machine precision while
    the score still has digits to go, so a strict-ascent line search
    stalls short of grad_tol.  The score stays measurable far below the
    likelihood's resolution; accept steps that shrink its largest
    component without materially lowering the log likelihood."""
    steps = 0
    while steps < budget and state.max_abs_gradient >= opts.grad_tol:
        try:
            d_alpha, d_beta = newton_step(state.blocks, state.grad_alpha, state.grad_beta)
        except SingularInformationError:
            break
        accepted = None
        step = 1.0
        for _ in range(8):
            a_try = alpha + step * d_alpha
            b_try = beta + step * d_beta
            if _feasible(a_try, 0.0):
                cand = obj.state(a_try, b_try)
                if cand.max_abs_gradient < 0.9 * state.max_abs_gradient and (
                    cand.loglik >= state.loglik - opts.loglik_tol * (1.0 + abs(state.loglik))
                ):
                    accepted = (a_try, b_try, cand)
                    break
            step *= 0.5
        if accepted is None:
            break
        alpha, beta, state = accepted
        steps += 1
    return alpha, beta, state, steps


def fit(data, link="logit", options: Optional[FitOptions] = None) -> CpmFit:
    """Fit a cumulative probability model by maximum likelihood.

    ``data`` is a CensoredDataset or an OrdinalEncoding.  Returns a CpmFit
    whether or not the iteration converged; check ``converged``.
    """
    if isinstance(data, OrdinalEncoding):
        enc = data
    elif isinstance(data, CensoredDataset):
        enc = encode_ordinal(data)
    else:
        raise TypeError("data must be a CensoredDataset or OrdinalEncoding")
    link = get_link(link)
    opts = options or FitOptions()
    _check_design(enc.z, enc.names)

    alpha, beta = starting_values(enc, link)
    obj = _Objective(enc, link)
    state = obj.state(alpha, beta)

    converged = state.max_abs_gradient < opts.grad_tol
    diverged = False
    used_loggap = False
    gradient_steps = 0
    iterations = 0

    while not converged and iterations < opts.max_iterations:
        iterations += 1
        try:
            d_alpha, d_beta = newton_step(state.blocks, state.grad_alpha, state.grad_beta)
        except SingularInformationError:
            d_alpha, d_beta = state.grad_alpha, state.grad_beta
            gradient_steps += 1

        found = _line_search(obj, alpha, beta, d_alpha, d_beta, state.loglik, opts)
        if found is None:
            alpha, beta, state, extra = _polish(
                obj, alpha, beta, state, opts, max(opts.max_iterations - iterations, 1)
            )
            iterations += extra
            if state.max_abs_gradient < opts.grad_tol:
                converged = True
                break
            used_loggap = True
            alpha, beta, state, converged, diverged, extra_it, gradient_steps = _fit_loggap(
                obj, alpha, beta, state, opts, iterations, gradient_steps
            )
            iterations += extra_it
            if not (converged or diverged):
                alpha, beta, state, extra = _polish(
                    obj, alpha, beta, state, opts, max(opts.max_iterations - iterations, 1)
                )
                iterations += extra
                converged = state.max_abs_gradient < opts.grad_tol
            break

        a_new, b_new, ll_new = found
        new_state = obj.state(a_new, b_new)
        delta_ll = abs(new_state.loglik - state.loglik)
        alpha, beta, state = a_new, b_new, new_state
        if np.linalg.norm(beta) > opts.divergence_norm:
            diverged = True
            break
        if state.max_abs_gradient < opts.grad_tol and delta_ll <= opts.loglik_tol * (
            1.0 + abs(state.loglik)
        ):
            converged = True

    return CpmFit(
        enc=enc,
        link=link,
        alpha=alpha,
        beta=beta,
        loglik=state.loglik,
        converged=bool(converged and not diverged),
        iterations=iterations,
        max_abs_gradient=state.max_abs_gradient,
        clamp_events=obj.clamp_events,
        info=state.blocks,
        diverged=diverged,
        used_loggap=used_loggap,
        gradient_steps=gradient_steps,
    )


# ----------------------------------------------------------------------
# log-gap fallback phase


def _theta_from(alpha: np.ndarray) -> np.ndarray:
    theta = np.empty_like(alpha)
    theta[0] = alpha[0]
    if alpha.shape[0] > 1:
        theta[1:] = np.log(np.diff(alpha))
    return theta


def _alpha_from(theta: np.ndarray) -> np.ndarray:
    alpha = np.empty_like(theta)
    alpha[0] = theta[0]
    if theta.shape[0] > 1:
        alpha[1:] = theta[0] + np.cumsum(np.exp(theta[1:]))
    return alpha


def _theta_grad(theta: np.ndarray, grad_alpha: np.ndarray) -> np.ndarray:
    rev = np.cumsum(grad_alpha[::-1])[::-1]
    g = np.empty_like(grad_alpha)
    g[0] = rev[0]
    if theta.shape[0] > 1:
        g[1:] = np.exp(theta[1:]) * rev[1:]
    return g


def _theta_newton(theta, blocks: SparseBlocks, g_theta, grad_beta):
    """Dense Newton direction in the log-gap parameterization."""
    m, p = blocks.n_alpha, blocks.n_beta
    gaps = np.exp(theta[1:])
    jmat = np.zeros((m, m))
    jmat[:, 0] = 1.0
    for j in range(1, m):
        jmat[j:, j] = gaps[j - 1]
    iaa = blocks.dense()[:m, :m]
    it_aa = jmat.T @ iaa @ jmat
    idx = np.arange(1, m)
    it_aa[idx, idx] -= g_theta[idx]
    full = np.zeros((m + p, m + p))
    full[:m, :m] = it_aa
    if p:
        it_ab = jmat.T @ blocks.ab
        full[:m, m:] = it_ab
        full[m:, :m] = it_ab.T
        full[m:, m:] = blocks.bb
    rhs = np.concatenate([g_theta, grad_beta])
    try:
        d = np.linalg.solve(full, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(d)):
        return None
    return d[:m], d[m:]


def _fit_loggap(obj, alpha, beta, state, opts, done_iterations, gradient_steps):
    """Continue the maximization in (alpha_1, log gaps, beta).

    The reparameterization removes the ordering constraint, at the price
    of a dense alpha block, so the dense Newton direction is only used for
    small problems; otherwise gradient ascent with the same line search.
    """
    theta = _theta_from(alpha)
    converged = False
    diverged = False
    extra = 0
    budget = opts.max_iterations - done_iterations

    while extra < budget:
        extra += 1
        g_theta = _theta_grad(theta, state.grad_alpha)
        directions = []
        if theta.shape[0] + beta.shape[0] <= _LOGGAP_DENSE_MAX:
            cand = _theta_newton(theta, state.blocks, g_theta, state.grad_beta)
            if cand is not None:
                directions.append(cand)
        directions.append((g_theta, state.grad_beta))
        if len(directions) == 1:
            gradient_steps += 1

        found = None
        for d_theta, d_beta in directions:
            step = 1.0
            for _ in range(opts.max_step_halvings + 1):
                t_try = theta + step * d_theta
                b_try = beta + step * d_beta
                a_try = _alpha_from(t_try)
                if np.all(np.isfinite(a_try)) and _feasible(a_try, 0.0):
                    ll_try = obj.value(a_try, b_try)
                    if np.isfinite(ll_try) and ll_try > state.loglik:
                        found = (t_try, a_try, b_try)
                        break
                step *= 0.5
            if found is not None:
                break
        if found is None:
            break

        theta, alpha, beta = found
        new_state = obj.state(alpha, beta)
        delta_ll = abs(new_state.loglik - state.loglik)
        state = new_state
        if np.linalg.norm(beta) > opts.divergence_norm:
            diverged = True
            break
        if state.max_abs_gradient < opts.grad_tol and delta_ll <= opts.loglik_tol * (
            1.0 + abs(state.loglik)
        ):
            converged = True
            break

    return alpha, beta, state, converged, diverged, extra, gradient_steps
