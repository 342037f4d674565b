"""Log-likelihood, score and Hessian of copula and single-margin additive models.

Every model maps a coefficient vector ``delta`` to one predictor per
distribution parameter, ``eta_e = Z_e beta_e``, and the log-likelihood is a sum
of per-observation terms that depend on ``delta`` only through these
predictors. Models therefore implement a single kernel, :meth:`pointwise`,
returning the per-observation log-likelihood and its gradient with respect to
each predictor. The score follows by the chain rule as ``sum_e Z_e' g_e`` and
the Hessian as ``sum_{e,f} Z_e' diag(W_ef) Z_f``, where ``W`` is obtained by
central differences of the analytic predictor gradient.

Equation order is ``mu1, mu2, sigma1, sigma2, [nu1], [nu2], theta`` for the
copula model and ``mu, sigma, [nu]`` for a single margin.
"""

from dataclasses import dataclass

import numpy as np

from . import copulas
from .copulas import UV_EPS, as_spec
from .exceptions import DomainError
from .margins import get_margin
from .smooth import assemble

_PARAMS = ("mu", "sigma", "nu")


def equation_names(margin1, margin2=None):
    """Predictor names in coefficient order."""
    m1 = get_margin(margin1)
    if margin2 is None:
        return list(_PARAMS[: m1.n_params])
    m2 = get_margin(margin2)
    names = ["mu1", "mu2", "sigma1", "sigma2"]
    if m1.n_params == 3:
        names.append("nu1")
    if m2.n_params == 3:
        names.append("nu2")
    return names + ["theta"]


@dataclass(frozen=True)
class ModelSpec:
    """Margins, copula and the term list of every predictor equation.

    ``equations`` maps each name of :func:`equation_names` to a sequence of
    :class:`~copgamlss.smooth.Term`; an empty sequence is an intercept-only
    predictor. With ``copula=None`` only ``margin1`` is modelled.
    """

    margin1: str
    margin2: str = None
    copula: str = None
    equations: dict = None

    @property
    def names(self):
        if self.copula is None:
            return equation_names(self.margin1)
        return equation_names(self.margin1, self.margin2)

    def validate(self):
        get_margin(self.margin1)
        if self.copula is not None:
            get_margin(self.margin2)
            as_spec(self.copula)
        eqs = self.equations or {}
        extra = sorted(set(eqs) - set(self.names))
        if extra:
            raise DomainError(f"equations {extra} do not belong to this model; expected {self.names}")
        return self

    def terms(self, name):
        return tuple((self.equations or {}).get(name, ()))


def _coef_layout(designs):
    offsets = np.cumsum([0] + [d.n_coef for d in designs])
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


class AdditiveModel:
    """Shared machinery: predictors, penalties, score and Hessian.

    Subclasses set ``self.designs`` (one :class:`~copgamlss.smooth.Design`
    per equation) and implement :meth:`pointwise`.
    """

    hess_step = 1e-5

    def _init_layout(self, designs, names):
        self.designs = designs
        self.names = list(names)
        self.coef_slices = _coef_layout(designs)
        self.n_coef = int(sum(d.n_coef for d in designs))
        self.n_eq = len(designs)
        self.penalty_slots = []  # (equation index, coefficient slice, D)
        for e, (d, cs) in enumerate(zip(designs, self.coef_slices)):
            for s, D in d.penalties:
                self.penalty_slots.append((e, slice(cs.start + s.start, cs.start + s.stop), D))
        self.clamp_count = 0

    @property
    def n_lambda(self):
        return len(self.penalty_slots)

    def lambda_labels(self):
        labels = []
        for e, d in enumerate(self.designs):
            for b in d.blocks:
                if b.penalized:
                    labels.append(f"{self.names[e]}:{b.label}")
        return labels

    # predictors -----------------------------------------------------------
    def split(self, delta):
        return [np.asarray(delta)[s] for s in self.coef_slices]

    def etas(self, delta):
        return [d.Z @ b for d, b in zip(self.designs, self.split(delta))]

    def penalty_matrix(self, lambdas):
        S = np.zeros((self.n_coef, self.n_coef))
        lambdas = np.asarray(lambdas, dtype=float).ravel()
        if len(lambdas) != self.n_lambda:
            raise ValueError(f"expected {self.n_lambda} smoothing parameters, got {len(lambdas)}")
        for lam, (_, s, D) in zip(lambdas, self.penalty_slots):
            S[s, s] += lam * D
        return S

    def penalty_blocks(self):
        """Unit-lambda penalty matrices embedded at full size, one per slot."""
        out = []
        for _, s, D in self.penalty_slots:
            S = np.zeros((self.n_coef, self.n_coef))
            S[s, s] = D
            out.append(S)
        return out

    # objective ------------------------------------------------------------
    def pointwise(self, etas, grad=True):
        """``(ll_i, [d ll_i / d eta_e])``; subclasses implement."""
        raise NotImplementedError

    def loglik(self, delta):
        """Sum of per-observation terms, or ``-inf`` when any is not finite."""
        with np.errstate(all="ignore"):
            ll, _ = self.pointwise(self.etas(delta), grad=False)
        total = float(np.sum(ll))
        return total if np.isfinite(total) else -np.inf

    def penalized_loglik(self, delta, lambdas):
        delta = np.asarray(delta, dtype=float)
        return self.loglik(delta) - 0.5 * delta @ self.penalty_matrix(lambdas) @ delta

    def score(self, delta):
        with np.errstate(all="ignore"):
            _, grads = self.pointwise(self.etas(delta))
        return np.concatenate([d.Z.T @ g for d, g in zip(self.designs, grads)])

    def penalized_score(self, delta, lambdas):
        return self.score(delta) - self.penalty_matrix(lambdas) @ np.asarray(delta, dtype=float)

    def eta_hessian_weights(self, etas):
        """``W[e][f]`` = d^2 ll_i / d eta_e d eta_f by central differences of the analytic gradient."""
        E = self.n_eq
        W = [[None] * E for _ in range(E)]
        with np.errstate(all="ignore"):
            for e in range(E):
                h = self.hess_step * (1.0 + np.abs(etas[e]))
                up = list(etas)
                dn = list(etas)
                up[e] = etas[e] + h
                dn[e] = etas[e] - h
                _, gu = self.pointwise(up)
                _, gd = self.pointwise(dn)
                for f in range(E):
                    W[e][f] = (gu[f] - gd[f]) / (2.0 * h)
        for e in range(E):
            for f in range(e + 1, E):
                avg = 0.5 * (W[e][f] + W[f][e])
                W[e][f] = W[f][e] = avg
        return W

    def hessian(self, delta):
        etas = self.etas(delta)
        W = self.eta_hessian_weights(etas)
        H = np.zeros((self.n_coef, self.n_coef))
        for e, (de, se) in enumerate(zip(self.designs, self.coef_slices)):
            for f in range(e, self.n_eq):
                df, sf = self.designs[f], self.coef_slices[f]
                block = de.Z.T @ (W[e][f][:, None] * df.Z)
                H[se, sf] = block
                if f != e:
                    H[sf, se] = block.T
        return 0.5 * (H + H.T)

    def penalized_hessian(self, delta, lambdas):
        return self.hessian(delta) - self.penalty_matrix(lambdas)

    # fitted quantities ------------------------------------------------------
    def predictor_matrices(self, data, n=None):
        return [d.matrix(data, n) for d in self.designs]


def _clamped(p):
    lo, hi = p < UV_EPS, p > 1.0 - UV_EPS
    return np.clip(p, UV_EPS, 1.0 - UV_EPS), lo | hi


class MarginModel(AdditiveModel):
    """Univariate additive model for one margin (all parameters with their own predictor)."""

    def __init__(self, margin, y, equations=None, data=None, adjacency=None):
        self.margin = get_margin(margin)
        self.y = self.margin.check_support(np.asarray(y, dtype=float))
        n = len(self.y)
        names = equation_names(self.margin)
        equations = equations or {}
        data = data or {}
        designs = [assemble(tuple(equations.get(nm, ())), data, n, adjacency) for nm in names]
        self._init_layout(designs, names)

    @property
    def n(self):
        return len(self.y)

    def params(self, etas):
        return self.margin.params_from_eta(etas)

    def pointwise(self, etas, grad=True):
        m = self.margin
        params = m.params_from_eta(etas)
        ll = m.logpdf(self.y, *params, check=False)
        if not grad:
            return ll, None
        dl = m.logpdf_derivs(self.y, *params, check=False)
        dp = m.dparams_deta(etas)
        return ll, [a * b for a, b in zip(dl, dp)]

    def start_delta(self):
        """Intercepts at the method-of-moments parameters, zero elsewhere."""
        delta = np.zeros(self.n_coef)
        for s, eta in zip(self.coef_slices, self.margin.eta_from_params(self.margin.start(self.y))):
            delta[s.start] = float(eta)
        return delta


class CopulaModel(AdditiveModel):
    """Bivariate copula additive model for ``(y1, y2)``."""

    def __init__(self, spec, y1, y2, data=None, adjacency=None):
        spec = spec.validate()
        self.spec = spec
        self.m1 = get_margin(spec.margin1)
        self.m2 = get_margin(spec.margin2)
        self.copula = as_spec(spec.copula)
        self.y1 = self.m1.check_support(np.asarray(y1, dtype=float))
        self.y2 = self.m2.check_support(np.asarray(y2, dtype=float))
        if len(self.y1) != len(self.y2):
            raise DomainError(f"responses differ in length: {len(self.y1)} vs {len(self.y2)}")
        if len(self.y1) == 0:
            raise DomainError("no observations")
        n = len(self.y1)
        data = data or {}
        designs = [assemble(spec.terms(nm), data, n, adjacency) for nm in spec.names]
        self._init_structure(designs)

    @classmethod
    def skeleton(cls, spec, designs):
        """Model structure without responses, enough for prediction on new data."""
        self = cls.__new__(cls)
        self.spec = spec.validate()
        self.m1 = get_margin(spec.margin1)
        self.m2 = get_margin(spec.margin2)
        self.copula = as_spec(spec.copula)
        self.y1 = self.y2 = None
        self.n_obs = 0
        self._init_structure(designs)
        return self

    def _init_structure(self, designs):
        self._init_layout(designs, self.spec.names)
        # positions of each margin's parameters within the equation list
        p1, p2 = self.m1.n_params, self.m2.n_params
        self.idx1 = [0, 2] + ([4] if p1 == 3 else [])
        self.idx2 = [1, 3] + ([4 + (p1 == 3)] if p2 == 3 else [])
        self.idx_theta = len(self.names) - 1

    @property
    def n(self):
        return self.n_obs if self.y1 is None else len(self.y1)

    def margin_etas(self, etas):
        return [etas[i] for i in self.idx1], [etas[i] for i in self.idx2]

    def parameters(self, etas):
        """Per-observation parameters as a dict keyed by equation name."""
        e1, e2 = self.margin_etas(etas)
        out = {}
        p1 = self.m1.params_from_eta(e1)
        p2 = self.m2.params_from_eta(e2)
        for i, val in zip(self.idx1, p1):
            out[self.names[i]] = val
        for i, val in zip(self.idx2, p2):
            out[self.names[i]] = val
        out["theta"] = copulas.theta_link(self.copula, etas[self.idx_theta])
        return out

    def pointwise(self, etas, grad=True):
        e1, e2 = self.margin_etas(etas)
        p1 = self.m1.params_from_eta(e1)
        p2 = self.m2.params_from_eta(e2)
        eta_t = etas[self.idx_theta]
        theta = copulas.theta_link(self.copula, eta_t)
        u, cu = _clamped(self.m1.cdf(self.y1, *p1, check=False))
        v, cv = _clamped(self.m2.cdf(self.y2, *p2, check=False))
        self.clamp_count = int(cu.sum() + cv.sum())
        logc, dcu, dcv, dct = copulas.copula_logpdf_grad(self.copula, u, v, theta, check=False)
        ll = logc + self.m1.logpdf(self.y1, *p1, check=False) + self.m2.logpdf(self.y2, *p2, check=False)
        if not grad:
            return ll, None
        grads = [None] * self.n_eq
        # a clamped cdf is locally flat in the margin parameters
        dcu = np.where(cu, 0.0, dcu)
        dcv = np.where(cv, 0.0, dcv)
        for m, y, p, e, idx, dc in ((self.m1, self.y1, p1, e1, self.idx1, dcu), (self.m2, self.y2, p2, e2, self.idx2, dcv)):
            dl = m.logpdf_derivs(y, *p, check=False)
            dF = m.cdf_derivs(y, *p, check=False)
            dp = m.dparams_deta(e)
            for i, a, b, c in zip(idx, dl, dF, dp):
                grads[i] = (a + dc * b) * c
        grads[self.idx_theta] = dct * copulas.theta_link_deriv(self.copula, eta_t)
        return ll, grads


def joint_log_density(margin1, margin2, copula, y1, y2, params1, params2, theta):
    """``log c(F1, F2; theta) + log f1 + log f2`` per observation."""
    m1, m2 = get_margin(margin1), get_margin(margin2)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    for m, y, k in ((m1, y1, 1), (m2, y2, 2)):
        lo, hi = m.support
        bad = ~np.isfinite(y) | (y <= lo) | (y >= hi)
        if np.any(bad):
            i = int(np.flatnonzero(np.atleast_1d(bad))[0])
            raise DomainError(f"y{k}[{i}] = {np.atleast_1d(y)[i]!r} outside the {m.code} support {m.support}")
    u = m1.cdf(y1, *params1)
    v = m2.cdf(y2, *params2)
    return copulas.copula_logpdf(copula, u, v, theta) + m1.logpdf(y1, *params1) + m2.logpdf(y2, *params2)


def log_likelihood(delta, model):
    return model.loglik(delta)


def penalized_log_likelihood(delta, lambdas, model):
    return model.penalized_loglik(delta, lambdas)


def score(delta, model, lambdas=None):
    if lambdas is None:
        return model.score(delta)
    return model.penalized_score(delta, lambdas)


def hessian(delta, model, lambdas=None):
    if lambdas is None:
        return model.hessian(delta)
    return model.penalized_hessian(delta, lambdas)
