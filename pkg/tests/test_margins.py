import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from copgamlss.exceptions import DomainError
from copgamlss.margins import (
    MARGIN_TAGS,
    get_margin,
    margin_cdf,
    margin_cdf_derivs,
    margin_logpdf,
    margin_logpdf_derivs,
    margin_moments,
    margin_pdf,
    margin_quantile,
    margin_sample,
)

EULER = 0.5772156649015329

# parameter sets with light enough tails that sampled variances are stable
PARAMS = {
    "N": [(1.5, 1.0), (-3.0, 0.2)],
    "LO": [(2.0, 0.7), (-1.0, 2.0)],
    "GU": [(1.0, 1.0), (-2.0, 0.5)],
    "rGU": [(1.0, 1.0), (3.0, 2.0)],
    "LN": [(0.3, 0.5), (-1.0, 0.25)],
    "WEI": [(1.0, 1.0), (2.5, 3.0)],
    "GA": [(2.0, 0.5), (0.7, 1.2)],
    "iG": [(1.0, 0.5), (3.0, 0.2)],
    "BE": [(0.3, 0.4), (0.7, 0.2)],
    "DAGUM": [(2.0, 6.0, 1.5), (1.0, 5.0, 0.7)],
    "SM": [(2.0, 5.0, 2.0), (1.0, 3.0, 3.0)],
}
CASES = [(tag, p) for tag in MARGIN_TAGS for p in PARAMS[tag]]


def support_points(tag, params, n, rng):
    """Points spread over the bulk of the distribution (1st to 99th percentile)."""
    return margin_quantile(tag, rng.uniform(0.01, 0.99, n), params)


class TestExamples:
    def test_normal_median(self):
        assert margin_cdf("N", 1.3, (1.3, 2.0)) == pytest.approx(0.5)

    def test_weibull_at_scale(self):
        for s in (0.5, 1.0, 4.0):
            assert margin_cdf("WEI", 2.0, (2.0, s)) == pytest.approx(1 - np.exp(-1), rel=1e-12)

    def test_logistic_median(self):
        assert margin_cdf("LO", -0.4, (-0.4, 3.0)) == pytest.approx(0.5)

    def test_normal_mode(self):
        assert margin_logpdf("N", 0.7, (0.7, 1.0)) == pytest.approx(-0.5 * np.log(2 * np.pi))

    def test_quantiles(self):
        assert margin_quantile("N", 0.5, (2.0, 3.0)) == pytest.approx(2.0)
        assert margin_quantile("GU", 1 - np.exp(-1), (1.7, 0.4)) == pytest.approx(1.7, abs=1e-10)

    def test_moment_examples(self):
        assert margin_moments("GU", (1.0, 2.0))[0] == pytest.approx(1.0 - EULER * 2.0)
        assert margin_moments("WEI", (1.0, 1.0))[0] == pytest.approx(1.0)
        assert margin_moments("DAGUM", (1.0, 0.5, 2.0)) == (None, None)

    def test_normal_location_derivative(self):
        y = np.linspace(-2, 3, 11)
        dmu, _ = margin_cdf_derivs("N", y, (0.5, 1.5))
        assert np.allclose(dmu, -margin_pdf("N", y, (0.5, 1.5)))

    def test_logistic_location_derivative(self):
        dmu, _ = margin_cdf_derivs("LO", 1.0, (1.0, 2.0))
        assert dmu == pytest.approx(-1 / (4 * 2.0))

    def test_standard_normal_sample_mean(self):
        y = margin_sample("N", (0.0, 1.0), 1_000_000, np.random.default_rng(3))
        assert abs(y.mean()) < 0.01

    def test_gumbel_sample_mean(self):
        y = margin_sample("GU", (0.0, 1.0), 1_000_000, np.random.default_rng(4))
        assert abs(y.mean() + EULER) < 0.01


class TestErrors:
    @pytest.mark.parametrize("tag,y", [("LN", -1.0), ("GA", 0.0), ("BE", 1.0), ("WEI", np.nan), ("iG", -2.0)])
    def test_support(self, tag, y):
        params = PARAMS[tag][0]
        with pytest.raises(DomainError, match="observation 1"):
            margin_cdf(tag, np.array([0.5, y]), params)

    @pytest.mark.parametrize("tag,params", [("N", (0.0, -1.0)), ("GA", (-1.0, 1.0)), ("BE", (0.5, 1.5)), ("SM", (1.0, 1.0, 0.0))])
    def test_params(self, tag, params):
        with pytest.raises(DomainError):
            margin_logpdf(tag, 0.5, params)

    def test_missing_nu(self):
        with pytest.raises(DomainError, match="nu"):
            margin_cdf("DAGUM", 1.0, (1.0, 2.0))

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 2.0])
    def test_quantile_probability(self, p):
        with pytest.raises(DomainError):
            margin_quantile("N", p, (0.0, 1.0))

    def test_unknown(self):
        with pytest.raises(DomainError, match="valid tags"):
            get_margin("XYZ")


@pytest.mark.parametrize("tag,params", CASES)
def test_pdf_integrates_to_one(tag, params):
    lo, hi = get_margin(tag).support
    val, _ = integrate.quad(lambda y: float(margin_pdf(tag, y, params)), lo, hi, epsabs=1e-11, epsrel=1e-11, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("tag,params", CASES)
def test_pdf_matches_cdf_difference(tag, params):
    y = support_points(tag, params, 100, np.random.default_rng(0))
    h = 1e-5 * np.maximum(np.abs(y), 1e-2)
    fd = (margin_cdf(tag, y + h, params) - margin_cdf(tag, y - h, params)) / (2 * h)
    assert np.allclose(margin_pdf(tag, y, params), fd, rtol=1e-4)


@pytest.mark.parametrize("tag,params", CASES)
def test_quantile_roundtrip(tag, params):
    p = np.linspace(0.01, 0.99, 99)
    assert np.allclose(margin_cdf(tag, margin_quantile(tag, p, params), params), p, atol=1e-8, rtol=0)


@pytest.mark.parametrize("tag,params", CASES)
def test_parameter_derivatives(tag, params):
    rng = np.random.default_rng(1)
    y = support_points(tag, params, 200, rng)
    dF = margin_cdf_derivs(tag, y, params)
    dl = margin_logpdf_derivs(tag, y, params)
    assert len(dF) == len(dl) == len(params)
    for k in range(len(params)):
        h = 1e-6 * max(abs(params[k]), 1e-2)
        up, dn = list(params), list(params)
        up[k] += h
        dn[k] -= h
        fd = (margin_cdf(tag, y, up) - margin_cdf(tag, y, dn)) / (2 * h)
        assert np.allclose(dF[k], fd, rtol=1e-5, atol=1e-7)
        fd = (margin_logpdf(tag, y, up) - margin_logpdf(tag, y, dn)) / (2 * h)
        assert np.allclose(dl[k], fd, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("tag,params", CASES)
def test_moments_match_sampling(tag, params):
    mean, var = margin_moments(tag, params)
    y = margin_sample(tag, params, 1_000_000, np.random.default_rng(7))
    assert y.mean() == pytest.approx(mean, rel=0.01)
    assert y.var() == pytest.approx(var, rel=0.01)


@pytest.mark.parametrize("tag,params", CASES)
def test_moments_match_quadrature(tag, params):
    lo, hi = get_margin(tag).support
    m1, _ = integrate.quad(lambda y: y * float(margin_pdf(tag, y, params)), lo, hi, epsabs=1e-10, limit=400)
    m2, _ = integrate.quad(lambda y: (y - m1) ** 2 * float(margin_pdf(tag, y, params)), lo, hi, epsabs=1e-10, limit=400)
    mean, var = margin_moments(tag, params)
    assert mean == pytest.approx(m1, rel=1e-6)
    assert var == pytest.approx(m2, rel=1e-5)


class TestExistence:
    def test_dagum(self):
        assert margin_moments("DAGUM", (1.0, 1.5, 1.0))[0] is not None
        assert margin_moments("DAGUM", (1.0, 1.5, 1.0))[1] is None
        assert margin_moments("DAGUM", (1.0, 1.0, 1.0))[0] is None

    def test_singh_maddala(self):
        # the mean needs sigma * nu > 1, the variance sigma * nu > 2
        assert margin_moments("SM", (1.0, 2.0, 0.4)) == (None, None)
        mean, var = margin_moments("SM", (1.0, 2.0, 0.75))
        assert mean is not None and var is None
        assert all(m is not None for m in margin_moments("SM", (1.0, 2.0, 1.2)))

    def test_singh_maddala_mean_by_quadrature(self):
        params = (1.0, 2.0, 0.75)
        val, _ = integrate.quad(lambda y: y * float(margin_pdf("SM", y, params)), 0, np.inf, limit=500)
        assert margin_moments("SM", params)[0] == pytest.approx(val, rel=1e-5)


class TestDualities:
    def test_lognormal_log_is_normal(self):
        y = margin_sample("LN", (0.4, 0.6), 20_000, np.random.default_rng(11))
        assert stats.kstest(np.log(y), "norm", args=(0.4, 0.6)).pvalue > 0.01

    def test_reverse_gumbel_negated(self):
        y = margin_sample("rGU", (1.2, 0.8), 20_000, np.random.default_rng(12))
        assert stats.kstest(-y, lambda t: margin_cdf("GU", t, (-1.2, 0.8))).pvalue > 0.01

    def test_gumbel_minus_reverse_distance(self):
        rng = np.random.default_rng(13)
        a = -margin_sample("rGU", (0.5, 1.0), 100_000, rng)
        b = margin_sample("GU", (-0.5, 1.0), 100_000, rng)
        assert stats.ks_2samp(a, b).statistic < 0.01

    def test_reverse_gumbel_cdf_identity(self):
        y = np.linspace(-4, 6, 21)
        assert np.allclose(margin_cdf("rGU", y, (1.0, 1.3)), 1 - margin_cdf("GU", -y, (-1.0, 1.3)))


class TestReferenceDistributions:
    """Closed forms against scipy.stats parametrisations."""

    def test_gamma(self):
        y = np.linspace(0.1, 6, 30)
        mu, s = 2.0, 0.5
        ref = stats.gamma(a=1 / s**2, scale=mu * s**2)
        assert np.allclose(margin_cdf("GA", y, (mu, s)), ref.cdf(y))

    def test_inverse_gaussian(self):
        y = np.linspace(0.1, 6, 30)
        mu, s = 1.5, 0.6
        lam = 1 / s**2
        ref = stats.invgauss(mu=mu / lam, scale=lam)
        assert np.allclose(margin_logpdf("iG", y, (mu, s)), ref.logpdf(y))
        assert np.allclose(margin_cdf("iG", y, (mu, s)), ref.cdf(y))

    def test_singh_maddala(self):
        y = np.linspace(0.1, 6, 30)
        ref = stats.burr12(c=3.0, d=2.0, scale=1.5)
        assert np.allclose(margin_cdf("SM", y, (1.5, 3.0, 2.0)), ref.cdf(y))

    def test_dagum(self):
        y = np.linspace(0.1, 6, 30)
        ref = stats.burr(c=3.0, d=2.0, scale=1.5)
        assert np.allclose(margin_cdf("DAGUM", y, (1.5, 3.0, 2.0)), ref.cdf(y))

    def test_beta(self):
        y = np.linspace(0.01, 0.99, 30)
        mu, s = 0.3, 0.4
        phi = 1 / s**2 - 1
        assert np.allclose(margin_cdf("BE", y, (mu, s)), special.betainc(mu * phi, (1 - mu) * phi, y))


@pytest.mark.parametrize("tag", MARGIN_TAGS)
def test_links_are_bijections(tag):
    m = get_margin(tag)
    etas = tuple(np.linspace(-5, 5, 11) for _ in range(m.n_params))
    params = m.params_from_eta(etas)
    assert np.all(m.valid_params(*params))
    back = m.eta_from_params(params)
    for a, b in zip(etas, back):
        assert np.allclose(a, b, atol=1e-8)


@pytest.mark.parametrize("tag,params", CASES[::2])
def test_start_values_are_valid(tag, params):
    m = get_margin(tag)
    y = margin_sample(tag, params, 2000, np.random.default_rng(5))
    assert np.all(m.valid_params(*m.start(y)))


@settings(max_examples=40, deadline=None)
@given(case=st.sampled_from(CASES), p=st.floats(1e-6, 1 - 1e-6))
def test_quantile_property(case, p):
    tag, params = case
    q = margin_quantile(tag, p, params)
    assert margin_cdf(tag, q, params) == pytest.approx(p, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(case=st.sampled_from(CASES), a=st.floats(0.01, 0.99), b=st.floats(0.01, 0.99))
def test_cdf_monotone(case, a, b):
    tag, params = case
    qa, qb = margin_quantile(tag, np.array([min(a, b), max(a, b)]), params)
    assert qa <= qb
