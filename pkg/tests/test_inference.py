"""Transformation lookups, delta-method variances, conditional summaries,
and probability-scale residuals."""

import numpy as np
import pytest

from conftest import make_instance

from cpmfit.data import censor_transform, uncensored_dataset
from cpmfit.exceptions import CensoredMeanError, OutOfRangeError
from cpmfit.inference import (
    FunctionalContrast,
    ahat,
    ahat_interval,
    conditional_cdf,
    conditional_mean,
    conditional_quantile,
    functional_variance,
    probability_scale_residuals,
)
from cpmfit.links import get_link
from cpmfit.solver import fit


@pytest.fixture
def simple_fit(backend):
    return fit(uncensored_dataset([1.0, 2.0, 3.0, 4.0]), "logit")


@pytest.fixture
def covariate_fit(backend, rng):
    enc = make_instance(rng, n=60, link="probit")
    result = fit(enc, "probit")
    assert result.converged
    return result


@pytest.fixture
def censored_fit(backend, rng):
    enc = make_instance(rng, n=60, link="probit", censored=True)
    result = fit(enc, "probit")
    assert result.converged
    return result


def test_ahat_is_a_right_continuous_step_function(simple_fit):
    f = simple_fit
    assert ahat(f, 0.5) == -np.inf  # below support
    assert ahat(f, 1.0) == f.alpha[0]
    assert ahat(f, 1.7) == f.alpha[0]
    assert ahat(f, 2.0) == f.alpha[1]
    assert ahat(f, 3.999) == f.alpha[2]
    # at and above the largest cut: the last identified level
    assert ahat(f, 4.0) == f.alpha[2]
    assert ahat(f, 100.0) == f.alpha[2]


def test_ahat_respects_censoring_bounds(censored_fit):
    lower, upper = censored_fit.bounds
    with pytest.raises(OutOfRangeError, match="outside the censoring interval"):
        ahat(censored_fit, lower - 0.01)
    with pytest.raises(OutOfRangeError):
        ahat(censored_fit, upper + 0.01)
    assert np.isfinite(ahat(censored_fit, lower))
    assert ahat(censored_fit, upper) == censored_fit.alpha[-1]


def test_ahat_interval_matches_the_dense_inverse(covariate_fit):
    f = covariate_fit
    inv = np.linalg.inv(f.info.dense())
    y = float(f.cuts[5])
    est, se, (lo, hi) = ahat_interval(f, y)
    assert est == f.alpha[5]
    assert se == pytest.approx(np.sqrt(inv[5, 5]), rel=1e-8)
    assert lo < est < hi
    below = ahat_interval(f, float(f.cuts[0]) - 1.0)
    assert below == (-np.inf, None, (None, None))


def test_point_contrast_reproduces_the_alpha_variance(covariate_fit):
    f = covariate_fit
    inv = np.linalg.inv(f.info.dense())
    y = float(f.cuts[7])
    contrast = FunctionalContrast.point(f.cuts, y)
    var = functional_variance(f, [contrast], include_beta=False)
    assert var.shape == (1, 1)
    assert var[0, 0] == pytest.approx(inv[7, 7], rel=1e-8)
    _, se, _ = ahat_interval(f, y)
    assert var[0, 0] == pytest.approx(se**2, rel=1e-10)


def test_increment_contrast_matches_the_dense_inverse(covariate_fit):
    f = covariate_fit
    inv = np.linalg.inv(f.info.dense())
    i, j = 3, 11
    contrast = FunctionalContrast.increment(f.cuts, float(f.cuts[i]), float(f.cuts[j]))
    var = functional_variance(f, [contrast], include_beta=False)[0, 0]
    expected = inv[j, j] + inv[i, i] - 2.0 * inv[i, j]
    assert var == pytest.approx(expected, rel=1e-8)


def test_joint_functional_variance_blocks(covariate_fit):
    f = covariate_fit
    m, p = f.alpha.shape[0], f.beta.shape[0]
    inv = np.linalg.inv(f.info.dense())
    contrast = FunctionalContrast.point(f.cuts, float(f.cuts[4]))
    joint = functional_variance(f, [contrast], include_beta=True)
    assert joint.shape == (p + 1, p + 1)
    assert np.allclose(joint[:p, :p], f.beta_cov(), rtol=1e-10)
    c = contrast.alpha_coefficients(m)
    # cumulative-jump coefficients pick out alpha_4
    picked = np.zeros(m)
    picked[4] = 1.0
    assert np.array_equal(c, picked)
    cross = inv[m:, :m] @ c
    assert np.allclose(joint[:p, p], cross, atol=1e-8 * (1 + np.abs(inv).max()))


def test_contrast_weight_validation(covariate_fit):
    with pytest.raises(ValueError, match="one-dimensional"):
        FunctionalContrast(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="finite"):
        FunctionalContrast([1.0, np.nan])
    short = FunctionalContrast(np.ones(3))
    with pytest.raises(ValueError, match="weights but the fit has"):
        functional_variance(covariate_fit, [short], include_beta=False)


def test_conditional_cdf_is_the_link_of_the_fitted_lp(covariate_fit):
    f = covariate_fit
    link = get_link(f.link)
    z = (1.0, 0.4)
    eta = float(np.asarray(z) @ f.beta)
    y = float(f.cuts[6])
    res = conditional_cdf(f, y, z)
    assert res.estimate == pytest.approx(link.cdf(f.alpha[6] - eta), rel=1e-12)
    assert res.note is None
    # delta-method pieces against the dense inverse
    m, p = f.alpha.shape[0], f.beta.shape[0]
    inv = np.linalg.inv(f.info.dense())
    v = np.zeros(m + p)
    v[6] = 1.0
    v[m:] = -np.asarray(z)
    var_lp = v @ inv @ v
    assert res.se == pytest.approx(link.pdf(f.alpha[6] - eta) * np.sqrt(var_lp), rel=1e-7)
    assert res.ci[0] < res.estimate < res.ci[1]


def test_conditional_cdf_is_monotone_in_y(covariate_fit):
    f = covariate_fit
    z = (0.0, -0.3)
    grid = np.linspace(f.cuts[0], f.cuts[-1], 40)
    values = [conditional_cdf(f, float(y), z).estimate for y in grid]
    assert np.all(np.diff(values) >= -1e-12)


def test_conditional_cdf_edges(simple_fit, censored_fit):
    below = conditional_cdf(simple_fit, 0.25)
    assert below.estimate == 0.0 and below.note == "below support"
    top = conditional_cdf(simple_fit, 4.0)
    assert top.estimate == 1.0
    assert top.note == "at or above the largest observed value"
    assert top.se is None

    lower, upper = censored_fit.bounds
    at_u = conditional_cdf(censored_fit, upper, (0.0, 0.0))
    assert at_u.note == "upper bound: left limit F(U-)"
    link = get_link(censored_fit.link)
    assert at_u.estimate == pytest.approx(float(link.cdf(censored_fit.alpha[-1])), rel=1e-12)
    with pytest.raises(OutOfRangeError):
        conditional_cdf(censored_fit, upper + 1.0, (0.0, 0.0))


def test_quantile_inverts_the_ecdf_for_intercept_only(backend):
    y = np.array([1.0, 2.0, 4.0, 5.0, 8.0, 9.0, 10.0, 12.0])
    f = fit(uncensored_dataset(y), "logit")
    n = y.shape[0]
    knots_f = np.append(np.arange(1, n) / n, 1.0)
    for q in (0.2, 0.5, 0.55, 0.9):
        res = conditional_quantile(f, q)
        assert not res.at_boundary
        assert res.estimate == pytest.approx(np.interp(q, knots_f, y), rel=1e-9)
        assert res.ci[0] <= res.estimate <= res.ci[1]


def test_quantile_flags_boundaries(backend, censored_fit):
    f = fit(uncensored_dataset([1.0, 2.0, 3.0, 4.0]), "logit")
    low = conditional_quantile(f, 0.01)
    assert low.at_boundary and low.note == "at or below the smallest cut"
    assert low.estimate == 1.0

    high = conditional_quantile(censored_fit, 0.999, (0.0, 0.0))
    assert high.at_boundary
    assert high.note == "at or beyond the upper censoring bound"
    # flagged, not extrapolated: the last identified knot, below U
    assert high.estimate == censored_fit.cuts[-2]
    assert high.estimate < censored_fit.bounds[1]

    res = conditional_quantile(f, 0.5, ci=False)
    assert res.ci == (None, None)
    with pytest.raises(ValueError, match="strictly inside"):
        conditional_quantile(f, 1.0)


def test_conditional_mean_reduces_to_the_sample_mean(backend):
    y = np.array([1.0, 1.0, 2.0, 3.5, 3.5, 3.5, 7.0, 9.0, 9.0, 11.0])
    f = fit(uncensored_dataset(y), "probit")
    res = conditional_mean(f)
    assert res.estimate == pytest.approx(float(np.mean(y)), abs=1e-12)
    assert res.se > 0.0
    assert res.ci[0] < res.estimate < res.ci[1]


def test_conditional_mean_se_matches_a_numeric_delta_method(covariate_fit):
    f = covariate_fit
    z = np.array([1.0, -0.5])
    link = get_link(f.link)
    gaps = np.diff(f.cuts)

    def estimate(alpha, beta):
        lp = alpha - float(z @ beta)
        return float(f.cuts[-1] - np.sum(link.cdf(lp) * gaps))

    m, p = f.alpha.shape[0], f.beta.shape[0]
    theta = np.concatenate([f.alpha, f.beta])
    grad = np.empty(m + p)
    h = 1e-6
    for i in range(m + p):
        step = h * (1.0 + abs(theta[i]))
        hi = theta.copy()
        hi[i] += step
        lo = theta.copy()
        lo[i] -= step
        grad[i] = (estimate(hi[:m], hi[m:]) - estimate(lo[:m], lo[m:])) / (2 * step)
    inv = np.linalg.inv(f.info.dense())
    expected_se = float(np.sqrt(grad @ inv @ grad))

    res = conditional_mean(f, z)
    assert res.estimate == pytest.approx(estimate(f.alpha, f.beta), rel=1e-12)
    assert res.se == pytest.approx(expected_se, rel=1e-5)


def test_conditional_mean_is_refused_when_censored(censored_fit):
    with pytest.raises(CensoredMeanError, match="not identified"):
        conditional_mean(censored_fit, (0.0, 0.0))


def test_residual_identity_for_distinct_intercept_only(backend):
    y = np.array([3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 6.1])
    f = fit(uncensored_dataset(y), "logit")
    res = probability_scale_residuals(f)
    n = y.shape[0]
    ranks = np.argsort(np.argsort(y)) + 1
    assert np.allclose(res, (2.0 * ranks - 1.0) / n - 1.0, atol=1e-12)


def test_residuals_for_a_censored_fit_by_hand(backend):
    ds = censor_transform([0.5, 2.0, 3.0, 9.0], bounds=(1.0, 5.0))
    f = fit(ds, "logit")
    res = probability_scale_residuals(f)
    # cells carry 1/4 each: F values 0, .25, .5, .75, 1 at the cuts
    assert np.allclose(res, [-0.75, -0.25, 0.25, 0.75], atol=1e-9)


def test_residuals_stay_inside_the_open_interval(covariate_fit, censored_fit):
    for f in (covariate_fit, censored_fit):
        res = probability_scale_residuals(f)
        assert res.shape == (f.n,)
        assert np.all(res > -1.0) and np.all(res < 1.0)


def test_residuals_need_the_original_dataset(covariate_fit):
    class Stub:
        pass

    stub = Stub()
    stub.link = covariate_fit.link
    stub.alpha = covariate_fit.alpha
    stub.beta = covariate_fit.beta
    with pytest.raises(ValueError, match="residuals need the fitted dataset"):
        probability_scale_residuals(stub)


def test_covariate_vector_length_is_checked(covariate_fit):
    with pytest.raises(ValueError, match="covariate vector has length 1"):
        conditional_cdf(covariate_fit, float(covariate_fit.cuts[3]), (1.0,))
    with pytest.raises(ValueError, match="confidence level"):
        ahat_interval(covariate_fit, float(covariate_fit.cuts[3]), level=1.5)
