"""Link family checks: exact tail values, derivative identities, and
quantile round trips.

The frozen constants below were computed with 60-digit arithmetic
(mpmath) and pasted in; they pin the stable log-tail evaluations far
outside the range where the plain CDF is representable.
"""

import numpy as np
import pytest

from cpmfit.links import (
    EXTREME_VALUE,
    LINK_NAMES,
    LOGIT,
    PROBIT,
    get_link,
    log1mexp,
)

ALL_LINKS = (PROBIT, LOGIT, EXTREME_VALUE)

# log Phi(x) at 60-digit precision; log(1 - Phi(x)) = log Phi(-x) by symmetry.
LOG_NDTR = {
    -40.0: -804.608442013753788167,
    -30.0: -454.321243956343197107,
    -20.0: -203.917155371097263937,
    -10.0: -53.2312851505124705783,
    -5.0: -15.0649983939887257361,
    -2.0: -3.78318433368203194884,
    0.0: -0.693147180559945309417,
    2.0: -0.0230129093289634884653,
}

# log G for the logit and extreme-value links, same provenance.
LOGIT_LOG_CDF = {-10.0: -10.0000453988992168646}
EV_LOG_CDF = {
    -40.0: -40.0,
    -2.0: -2.06690460644416957542,
    0.0: -0.458675145387081891022,
}

# G^{-1}(0.3) per link.
QUANTILE_03 = {
    "probit": -0.52440051270804078404,
    "logit": -0.84729786038720361371,
    "extreme-value": -1.0309304331587230821,
}


def test_probit_log_tails_match_frozen_values():
    for x, expected in LOG_NDTR.items():
        assert PROBIT.log_cdf(x) == pytest.approx(expected, rel=1e-14)
        assert PROBIT.log_sf(-x) == pytest.approx(expected, rel=1e-14)


def test_logit_log_tails_match_frozen_values():
    for x, expected in LOGIT_LOG_CDF.items():
        assert LOGIT.log_cdf(x) == pytest.approx(expected, rel=1e-14)
        assert LOGIT.log_sf(-x) == pytest.approx(expected, rel=1e-14)


def test_extreme_value_log_tails_match_frozen_values():
    for x, expected in EV_LOG_CDF.items():
        assert EXTREME_VALUE.log_cdf(x) == pytest.approx(expected, rel=1e-14)
    # the upper tail is exact by construction: log(1 - G(x)) = -e^x
    for x in (-700.0, -5.0, 0.0, 3.0, 700.0):
        assert EXTREME_VALUE.log_sf(x) == -np.exp(x)


def test_quantile_matches_frozen_values():
    for name, expected in QUANTILE_03.items():
        assert get_link(name).quantile(0.3) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_cdf_monotone_and_bounded(link):
    # ranges where successive CDF values are still > 1 ulp apart (the
    # probit CDF saturates near 8, the extreme-value one near 3.6); the
    # log tails carry the information beyond these
    lo, hi = {
        "probit": (-5.5, 5.5),
        "logit": (-30.0, 30.0),
        "extreme-value": (-30.0, 3.0),
    }[link.name]
    x = np.linspace(lo, hi, 2001)
    g = link.cdf(x)
    assert np.all(np.diff(g) > 0)
    assert np.all((g > 0) & (g < 1))


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_exp_log_cdf_matches_cdf(link):
    x = np.linspace(-30.0, 30.0, 601)
    g = link.cdf(x)
    keep = g > 1e-300
    assert np.allclose(np.exp(link.log_cdf(x[keep])), g[keep], rtol=1e-12)
    sf = 1.0 - g
    keep = sf > 1e-12  # complement loses digits first; compare where exact
    assert np.allclose(np.exp(link.log_sf(x[keep])), sf[keep], rtol=1e-9)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_pdf_is_cdf_derivative(link):
    x = np.linspace(-6.0, 2.5, 101)
    h = 1e-6
    fd = (link.cdf(x + h) - link.cdf(x - h)) / (2 * h)
    # tolerance is the FD truncation error, worst for the extreme-value
    # link whose higher derivatives grow like e^x
    assert np.allclose(link.pdf(x), fd, rtol=1e-5, atol=1e-12)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_dpdf_is_pdf_derivative(link):
    x = np.linspace(-6.0, 2.5, 101)
    h = 1e-6
    fd = (link.pdf(x + h) - link.pdf(x - h)) / (2 * h)
    assert np.allclose(link.dpdf(x), fd, rtol=1e-5, atol=1e-10)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_pdf_ratio_identity(link):
    x = np.linspace(-20.0, 3.0, 201)
    pdf = link.pdf(x)
    keep = pdf > 1e-300
    assert np.allclose(
        link.pdf_ratio(x[keep]), link.dpdf(x[keep]) / pdf[keep], rtol=1e-10, atol=1e-12
    )


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_log_pdf_matches_pdf(link):
    x = np.linspace(-25.0, 3.0, 101)
    pdf = link.pdf(x)
    keep = pdf > 1e-300
    assert np.allclose(np.exp(link.log_pdf(x[keep])), pdf[keep], rtol=1e-12)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
def test_quantile_round_trip(link):
    p = np.array([1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-9])
    assert np.allclose(link.cdf(link.quantile(p)), p, rtol=1e-9, atol=1e-15)


@pytest.mark.parametrize("link", ALL_LINKS, ids=lambda l: l.name)
@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.3, np.nan])
def test_quantile_rejects_bad_probability(link, bad):
    with pytest.raises(ValueError):
        link.quantile(bad)


def test_log1mexp_branches_agree():
    # both branches of log(1 - e^a) around the switch point a = -ln 2
    a = np.linspace(-0.694, -0.692, 41)
    direct = np.log(1.0 - np.exp(a))
    assert np.allclose(log1mexp(a), direct, rtol=1e-12)
    assert log1mexp(-1e-300) < -690.0  # extreme branch stays finite


def test_registry_names_and_aliases():
    assert set(LINK_NAMES) == {"probit", "logit", "extreme-value"}
    assert get_link("cloglog") is EXTREME_VALUE
    assert get_link("Extreme_Value") is EXTREME_VALUE
    assert get_link(PROBIT) is PROBIT
    with pytest.raises(ValueError, match="unknown link"):
        get_link("cauchit")


def test_link_codes_are_stable():
    assert (PROBIT.code, LOGIT.code, EXTREME_VALUE.code) == (0, 1, 2)
