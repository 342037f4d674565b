import numpy as np

from copgamlss.copulas import COPULA_TAGS, tau_range, tau_to_theta, theta_link_inv
from copgamlss.likelihood import CopulaModel, ModelSpec, equation_names
from copgamlss.margins import MARGIN_TAGS, get_margin, margin_sample
from copgamlss.simulate import sample_copula_pair
from copgamlss.smooth import Term

BASE_PARAMS = {
    "N": (1.5, 1.0),
    "LO": (2.0, 0.7),
    "GU": (1.0, 1.0),
    "rGU": (1.0, 1.0),
    "LN": (0.3, 0.5),
    "WEI": (1.0, 2.0),
    "GA": (2.0, 0.5),
    "iG": (1.0, 0.5),
    "BE": (0.3, 0.4),
    "DAGUM": (2.0, 6.0, 1.5),
    "SM": (2.0, 5.0, 2.0),
}


def margin_pairs():
    """One margin pair per copula tag; together they use every margin on both sides."""
    k = len(MARGIN_TAGS)
    return [(MARGIN_TAGS[i % k], MARGIN_TAGS[(i + 5) % k]) for i in range(len(COPULA_TAGS))]


def dependence_theta(tag, strength=0.35):
    """A moderate parameter value with the sign the family allows."""
    lo, hi = tau_range(tag)
    tau = strength * (hi if hi > 0 else lo)
    return tau_to_theta(tag, tau)


def small_fixture(tag, m1, m2, n=50, seed=0, smooth=True):
    """A small copula model with covariates in several equations and a perturbed coefficient vector.

    Returns ``(model, delta)``. Responses come from the copula with constant
    margin parameters, so ``delta`` is close to but not at the optimum.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, n)
    z = rng.uniform(0, 1, n)
    theta = dependence_theta(tag)
    u, v = sample_copula_pair(tag, theta, n, rng)
    g1, g2 = get_margin(m1), get_margin(m2)
    y1 = g1.quantile(np.clip(u, 1e-6, 1 - 1e-6), *BASE_PARAMS[m1])
    y2 = g2.quantile(np.clip(v, 1e-6, 1 - 1e-6), *BASE_PARAMS[m2])
    eqs = {"mu1": (Term("linear", "x"),), "theta": (Term("linear", "z"),)}
    if smooth:
        eqs["mu2"] = (Term("spline", "x", 6),)
        eqs["sigma1"] = (Term("linear", "z"),)
    spec = ModelSpec(m1, m2, tag, eqs)
    model = CopulaModel(spec, y1, y2, {"x": x, "z": z})
    delta = np.zeros(model.n_coef)
    e1 = g1.eta_from_params(BASE_PARAMS[m1])
    e2 = g2.eta_from_params(BASE_PARAMS[m2])
    intercept = {}
    for nm, e in zip(equation_names(m1, m2), _interleave(e1, e2)):
        intercept[nm] = float(e)
    intercept["theta"] = float(theta_link_inv(tag, theta))
    for nm, s in zip(model.names, model.coef_slices):
        delta[s.start] = intercept[nm]
        delta[s.start + 1:s.stop] = rng.normal(scale=0.05, size=s.stop - s.start - 1)
    return model, delta


def _interleave(e1, e2):
    out = [e1[0], e2[0], e1[1], e2[1]]
    if len(e1) == 3:
        out.append(e1[2])
    if len(e2) == 3:
        out.append(e2[2])
    return out


def fd_gradient(f, x, rel=1e-6):
    g = np.zeros_like(x)
    for j in range(len(x)):
        h = rel * (1.0 + abs(x[j]))
        up, dn = x.copy(), x.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (f(up) - f(dn)) / (2 * h)
    return g


def sample_margin(tag, n, rng):
    return margin_sample(tag, BASE_PARAMS[tag], n, rng)
