import numpy as np
import pytest
from scipy import integrate, stats

from conftest import BASE_PARAMS, fd_gradient, margin_pairs, small_fixture
from copgamlss.copulas import COPULA_TAGS, copula_logpdf, theta_link
from copgamlss.exceptions import DomainError
from copgamlss.likelihood import (
    CopulaModel,
    MarginModel,
    ModelSpec,
    equation_names,
    hessian,
    joint_log_density,
    log_likelihood,
    penalized_log_likelihood,
    score,
)
from copgamlss.margins import get_margin
from copgamlss.smooth import Term

CASES = [(tag, *pair) for tag, pair in zip(COPULA_TAGS, margin_pairs())]


def test_fixtures_cover_every_margin():
    firsts = {c[1] for c in CASES}
    seconds = {c[2] for c in CASES}
    assert len(firsts) == len(seconds) == 11


class TestEquations:
    def test_names(self):
        assert equation_names("N", "GU") == ["mu1", "mu2", "sigma1", "sigma2", "theta"]
        assert equation_names("DAGUM", "SM") == ["mu1", "mu2", "sigma1", "sigma2", "nu1", "nu2", "theta"]
        assert equation_names("N", "SM") == ["mu1", "mu2", "sigma1", "sigma2", "nu2", "theta"]
        assert equation_names("SM") == ["mu", "sigma", "nu"]

    def test_foreign_equation(self):
        with pytest.raises(DomainError, match="nu1"):
            ModelSpec("N", "N", "N", {"nu1": ()}).validate()


class TestJointDensity:
    def test_fgm_independence(self):
        y1, y2 = np.array([0.3, 1.2]), np.array([2.0, 0.5])
        out = joint_log_density("N", "GA", "FGM", y1, y2, (0.0, 1.0), (1.0, 0.5), 0.0)
        ref = get_margin("N").logpdf(y1, 0.0, 1.0) + get_margin("GA").logpdf(y2, 1.0, 0.5)
        assert np.array_equal(out, ref)

    def test_bivariate_normal(self):
        rng = np.random.default_rng(0)
        mu, sd, rho = np.array([1.0, -2.0]), np.array([0.5, 2.0]), 0.6
        cov = np.outer(sd, sd) * np.array([[1, rho], [rho, 1]])
        y = rng.multivariate_normal(mu, cov, size=100)
        ours = joint_log_density("N", "N", "N", y[:, 0], y[:, 1], (mu[0], sd[0]), (mu[1], sd[1]), rho)
        ref = stats.multivariate_normal(mu, cov).logpdf(y)
        assert np.allclose(ours, ref, rtol=1e-8)

    def test_integrates_to_one(self):
        def f(y2, y1):
            return float(np.exp(joint_log_density("N", "GU", "F", y1, y2, (0.0, 1.0), (0.5, 0.8), 3.0)))

        val, _ = integrate.dblquad(f, -9, 9, -9, 6, epsabs=1e-7)
        assert val == pytest.approx(1.0, abs=1e-3)

    def test_support_error_names_row(self):
        with pytest.raises(DomainError, match=r"y2\[2\]"):
            joint_log_density("N", "GA", "N", np.zeros(3), np.array([1.0, 2.0, -1.0]), (0, 1), (1, 1), 0.2)


def brute_force_loglik(model, delta, data):
    """Row-by-row evaluation with explicit predictors; no vectorised model machinery."""
    total = 0.0
    b = model.split(delta)
    x = data["x"]
    names = model.names
    for i in range(len(model.y1)):
        eta = {}
        for e, nm in enumerate(names):
            eta[nm] = b[e][0] + (b[e][1] * x[i] if len(b[e]) > 1 else 0.0)
        m1, m2 = model.m1, model.m2
        p1 = m1.params_from_eta([eta["mu1"], eta["sigma1"]] + ([eta["nu1"]] if "nu1" in eta else []))
        p2 = m2.params_from_eta([eta["mu2"], eta["sigma2"]] + ([eta["nu2"]] if "nu2" in eta else []))
        theta = theta_link(model.copula, eta["theta"])
        u = m1.cdf(model.y1[i], *p1)
        v = m2.cdf(model.y2[i], *p2)
        total += float(copula_logpdf(model.copula, u, v, theta) + m1.logpdf(model.y1[i], *p1) + m2.logpdf(model.y2[i], *p2))
    return total


def test_brute_force_twenty_rows():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, 20)
    y1 = rng.gamma(2.0, 1.0, 20)
    y2 = y1 + rng.normal(size=20)
    eqs = {nm: (Term("linear", "x"),) for nm in ("mu1", "mu2", "theta")}
    model = CopulaModel(ModelSpec("GA", "LO", "C0", eqs), y1, y2, {"x": x})
    delta = rng.normal(scale=0.3, size=model.n_coef)
    assert log_likelihood(delta, model) == pytest.approx(brute_force_loglik(model, delta, {"x": x}), rel=1e-12)


@pytest.mark.parametrize("tag,m1,m2", CASES)
def test_score_matches_finite_differences(tag, m1, m2):
    model, delta = small_fixture(tag, m1, m2)
    g = model.score(delta)
    fd = fd_gradient(model.loglik, delta)
    assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd))) < 1e-5


@pytest.mark.parametrize("tag,m1,m2", CASES)
def test_hessian_matches_score_differences(tag, m1, m2):
    model, delta = small_fixture(tag, m1, m2, seed=1)
    H = model.hessian(delta)
    assert np.max(np.abs(H - H.T)) < 1e-8
    fd = np.column_stack([fd_gradient(lambda d: model.score(d)[j], delta, rel=1e-5) for j in range(len(delta))])
    assert np.max(np.abs(H - fd.T)) / max(1.0, np.max(np.abs(fd))) < 1e-4


def test_fgm_independence_score_decomposition():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=80)
    y1 = rng.normal(size=80) + x
    y2 = rng.weibull(2.0, size=80) + 0.1
    eqs = {"mu1": (Term("linear", "x"),), "sigma1": (Term("spline", "x", 5),)}
    model = CopulaModel(ModelSpec("N", "WEI", "FGM", eqs), y1, y2, {"x": x})
    delta = rng.normal(scale=0.2, size=model.n_coef)
    theta_slice = model.coef_slices[model.idx_theta]
    delta[theta_slice] = 0.0  # tanh(0) = 0: independence
    g = model.score(delta)
    marg = MarginModel("N", y1, {"mu": eqs["mu1"], "sigma": eqs["sigma1"]}, {"x": x})
    d1 = np.concatenate([delta[model.coef_slices[0]], delta[model.coef_slices[2]]])
    gm = marg.score(d1)
    assert np.allclose(np.concatenate([g[model.coef_slices[0]], g[model.coef_slices[2]]]), gm, rtol=1e-12, atol=1e-12)


class TestPenalty:
    def test_zero_lambda(self):
        model, delta = small_fixture("N", "N", "GA")
        assert penalized_log_likelihood(delta, [0.0], model) == log_likelihood(delta, model)

    def test_intercept_only_has_no_penalty(self):
        model, delta = small_fixture("N", "N", "GA", smooth=False)
        assert model.n_lambda == 0
        assert penalized_log_likelihood(delta, [], model) == log_likelihood(delta, model)

    def test_blockwise(self):
        model, delta = small_fixture("C0", "LO", "WEI")
        lam = [3.5]
        (e, s, D), = model.penalty_slots
        expected = log_likelihood(delta, model) - 0.5 * lam[0] * delta[s] @ D @ delta[s]
        assert penalized_log_likelihood(delta, lam, model) == pytest.approx(expected, rel=1e-14)

    def test_decreasing_in_lambda(self):
        model, delta = small_fixture("C0", "LO", "WEI")
        vals = [penalized_log_likelihood(delta, [lam], model) for lam in (0.0, 0.5, 2.0, 10.0)]
        assert np.all(np.diff(vals) < 0)

    def test_penalized_score_and_hessian(self):
        model, delta = small_fixture("J0", "GA", "N")
        S = model.penalty_matrix([2.0])
        assert np.allclose(score(delta, model, [2.0]), model.score(delta) - S @ delta)
        assert np.allclose(hessian(delta, model, [2.0]), model.hessian(delta) - S)


class TestInvariance:
    def test_doubling(self):
        model, delta = small_fixture("G0", "N", "LN", smooth=False)
        y1 = np.concatenate([model.y1, model.y1])
        y2 = np.concatenate([model.y2, model.y2])
        big = CopulaModel(ModelSpec("N", "LN", "G0"), y1, y2)
        small = CopulaModel(ModelSpec("N", "LN", "G0"), model.y1, model.y2)
        d = np.array([delta[s.start] for s in model.coef_slices])
        assert big.loglik(d) == pytest.approx(2 * small.loglik(d), rel=1e-13)

    def test_single_row(self):
        spec = ModelSpec("N", "GA", "F")
        model = CopulaModel(spec, [0.4], [1.3])
        d = np.array([0.1, 0.2, -0.3, 0.1, 2.0])
        th = theta_link("F", 2.0)
        ref = joint_log_density("N", "GA", "F", 0.4, 1.3, (0.1, np.exp(-0.3)), (np.exp(0.2), np.exp(0.1)), th)
        assert model.loglik(d) == pytest.approx(float(ref), rel=1e-13)

    def test_row_order(self):
        model, delta = small_fixture("AMH", "BE", "SM")
        perm = np.random.default_rng(0).permutation(model.n)
        x, z = model.designs[0].Z[:, 1], model.designs[-1].Z[:, 1]
        other = CopulaModel(model.spec, model.y1[perm], model.y2[perm], {"x": x[perm], "z": z[perm]})
        assert other.loglik(delta) == pytest.approx(model.loglik(delta), rel=1e-13)


def test_bivariate_normal_regression_score():
    rng = np.random.default_rng(9)
    n = 60
    x = rng.uniform(size=n)
    eqs = {"mu1": (Term("linear", "x"),), "mu2": (Term("linear", "x"),)}
    y1 = 1 + 2 * x + rng.normal(size=n)
    y2 = -1 + x + rng.normal(size=n)
    model = CopulaModel(ModelSpec("N", "N", "N", eqs), y1, y2, {"x": x})
    delta = np.array([1.0, 1.8, -0.9, 1.1, 0.1, -0.2, 0.5])

    def ref_loglik(d):
        m1 = d[0] + d[1] * x
        m2 = d[2] + d[3] * x
        s1, s2, r = np.exp(d[4]), np.exp(d[5]), np.tanh(d[6])
        z1, z2 = (y1 - m1) / s1, (y2 - m2) / s2
        q = (z1**2 - 2 * r * z1 * z2 + z2**2) / (1 - r**2)
        return float(np.sum(-np.log(2 * np.pi * s1 * s2) - 0.5 * np.log(1 - r**2) - 0.5 * q))

    assert model.loglik(delta) == pytest.approx(ref_loglik(delta), rel=1e-12)
    assert np.allclose(model.score(delta), fd_gradient(ref_loglik, delta), rtol=1e-6, atol=1e-6)


def test_nonfinite_is_signalled():
    model = CopulaModel(ModelSpec("N", "N", "N"), [0.0, 1.0], [0.5, 0.2])
    assert model.loglik(np.array([0.0, 0.0, np.nan, 0.0, 0.0])) == -np.inf


def test_clamped_rows_are_counted():
    model = CopulaModel(ModelSpec("N", "N", "C0"), [0.0, 40.0], [0.5, 0.2])
    model.loglik(np.zeros(5))
    assert model.clamp_count == 1


def test_hessian_negative_definite_at_maximum():
    from copgamlss.estimator import fit

    rng = np.random.default_rng(2)
    y = rng.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]], size=300)
    res = fit(ModelSpec("N", "N", "N"), y[:, 0], y[:, 1])
    assert np.all(np.linalg.eigvalsh(res.H_p) < 0)


def test_base_params_are_valid():
    for tag, p in BASE_PARAMS.items():
        assert np.all(get_margin(tag).valid_params(*p))
