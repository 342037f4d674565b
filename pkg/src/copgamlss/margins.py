"""Continuous marginal distributions parameterised by (mu, sigma[, nu]).

Each family supplies its cdf, log-density, quantile, moments and the partial
derivatives of ``F`` and ``log f`` with respect to its parameters, which is all
the copula likelihood needs. Parameter links map unconstrained predictors onto
the parameter ranges: identity on the real line, ``exp(eta) + EPS`` for positive
parameters and the standard logistic cdf for parameters in (0, 1).
"""

import numpy as np
from scipy import special

from .exceptions import DomainError
from .links import Identity, Logistic, LogShift

EULER = 0.57721566490153286
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

_POS = LogShift(0.0)
_UNIT = Logistic()
_REAL = Identity()


def _richardson(fun, a, rel_step=1e-3):
    """d fun / d a by Richardson-extrapolated central differences."""
    h = rel_step * np.maximum(np.abs(a), 1e-3)
    d1 = (fun(a + h) - fun(a - h)) / (2.0 * h)
    d2 = (fun(a + h / 2) - fun(a - h / 2)) / h
    return (4.0 * d2 - d1) / 3.0


def _bracket_quantile(cdf, p, lo, hi, log_scale, n_iter=200, tol=1e-13):
    """Bisection on ``cdf(y) = p`` after expanding ``[lo, hi]`` to bracket every target."""
    p = np.asarray(p, dtype=float)
    shape = p.shape
    p = p.ravel()

    def fwd(x):
        return np.exp(x) if log_scale else x

    lo = np.broadcast_to(np.asarray(lo, dtype=float).ravel() if np.ndim(lo) else lo, p.shape).astype(float)
    hi = np.broadcast_to(np.asarray(hi, dtype=float).ravel() if np.ndim(hi) else hi, p.shape).astype(float)
    for _ in range(200):
        grow = cdf(fwd(lo)) > p
        if not grow.any():
            break
        lo = np.where(grow, lo - 2.0 * (hi - lo), lo)
    for _ in range(200):
        grow = cdf(fwd(hi)) < p
        if not grow.any():
            break
        hi = np.where(grow, hi + 2.0 * (hi - lo), hi)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = cdf(fwd(mid)) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol * (1.0 + np.abs(mid))):
            break
    return fwd(0.5 * (lo + hi)).reshape(shape)


class Margin:
    """Base class; subclasses implement the ``_``-prefixed kernels."""

    code = ""
    name = ""
    n_params = 2
    support = (-np.inf, np.inf)
    param_names = ("mu", "sigma")
    links = (_REAL, _POS)

    def __repr__(self):
        return f"Margin({self.code})"

    # validation ----------------------------------------------------------
    def check_support(self, y):
        y = np.asarray(y, dtype=float)
        lo, hi = self.support
        bad = ~np.isfinite(y) | (y <= lo) | (y >= hi)
        if np.any(bad):
            idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
            val = np.atleast_1d(y)[idx]
            raise DomainError(f"{self.code}: observation {idx} (y={val!r}) outside the support {self.support}")
        return y

    def valid_params(self, mu, sigma, nu=None):
        mu, sigma = np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float)
        ok = np.isfinite(mu) & np.isfinite(sigma) & (sigma > 0)
        if self.n_params == 3:
            nu = np.asarray(nu, dtype=float)
            ok &= np.isfinite(nu) & (nu > 0)
        return ok & self._valid_extra(mu, sigma)

    def _valid_extra(self, mu, sigma):
        return np.ones(np.broadcast(mu, sigma).shape, dtype=bool)

    def check_params(self, mu, sigma, nu=None):
        if self.n_params == 3 and nu is None:
            raise DomainError(f"{self.code} needs a nu parameter")
        if not np.all(self.valid_params(mu, sigma, nu)):
            raise DomainError(f"{self.code}: parameters outside their ranges (mu={mu}, sigma={sigma}, nu={nu})")

    def _args(self, y, mu, sigma, nu, check):
        if check:
            y = self.check_support(y)
            self.check_params(mu, sigma, nu)
        y = np.asarray(y, dtype=float)
        mu, sigma = np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float)
        nu = None if nu is None else np.asarray(nu, dtype=float)
        return y, mu, sigma, nu

    # public API ----------------------------------------------------------
    def cdf(self, y, mu, sigma, nu=None, check=True):
        return self._cdf(*self._args(y, mu, sigma, nu, check))

    def logpdf(self, y, mu, sigma, nu=None, check=True):
        return self._logpdf(*self._args(y, mu, sigma, nu, check))

    def pdf(self, y, mu, sigma, nu=None, check=True):
        return np.exp(self.logpdf(y, mu, sigma, nu, check))

    def cdf_derivs(self, y, mu, sigma, nu=None, check=True):
        """Tuple of dF/dparam, one array per parameter."""
        return self._dcdf(*self._args(y, mu, sigma, nu, check))

    def logpdf_derivs(self, y, mu, sigma, nu=None, check=True):
        """Tuple of d log f / dparam, one array per parameter."""
        return self._dlogpdf(*self._args(y, mu, sigma, nu, check))

    def quantile(self, p, mu, sigma, nu=None):
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise DomainError(f"{self.code}: quantile probabilities must lie in (0, 1)")
        self.check_params(mu, sigma, nu)
        return self._quantile(p, np.asarray(mu, float), np.asarray(sigma, float), None if nu is None else np.asarray(nu, float))

    def moments(self, mu, sigma, nu=None):
        """``(mean, variance)``; either is ``None`` when it does not exist."""
        self.check_params(mu, sigma, nu)
        return self._moments(float(mu), float(sigma), None if nu is None else float(nu))

    def sample(self, params, n, rng):
        mu, sigma, *rest = params
        nu = rest[0] if rest else None
        p = rng.uniform(size=n)
        p = np.clip(p, 1e-300, 1.0 - 1e-16)
        return self.quantile(p, mu, sigma, nu)

    def start(self, y):
        """Rough method-of-moments parameters used to initialise a fit."""
        raise NotImplementedError

    def _quantile(self, p, mu, sigma, nu):
        shape = np.broadcast(p, mu, sigma, *(() if nu is None else (nu,))).shape
        p, mu, sigma = (np.broadcast_to(a, shape).ravel() for a in (p, mu, sigma))
        nu = None if nu is None else np.broadcast_to(nu, shape).ravel()

        def cdf(y):
            return self._cdf(y, mu, sigma, nu)

        if self.support[0] == 0.0:
            guess = np.log(mu)
            q = _bracket_quantile(cdf, p, guess - 1.0, guess + 1.0, True)
        else:
            q = _bracket_quantile(cdf, p, mu - sigma, mu + sigma, False)
        return q.reshape(shape)

    # parameter links -----------------------------------------------------
    def params_from_eta(self, etas):
        return tuple(link.theta(e) for link, e in zip(self.links, etas))

    def dparams_deta(self, etas):
        return tuple(link.dtheta(e) for link, e in zip(self.links, etas))

    def eta_from_params(self, params):
        return tuple(link.eta(p) for link, p in zip(self.links, params))


# ---------------------------------------------------------------------------
# location-scale families on the real line


class _LocScale(Margin):
    """Families with F(y) = G((y - mu) / sigma)."""

    def _dcdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        f = np.exp(self._logpdf(y, mu, sigma, nu))
        return -f, -f * z

    def _dlogpdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        g = self._dlogg(z)  # d/dz of log g(z)
        return -g / sigma, (-1.0 - z * g) / sigma


class Normal(_LocScale):
    code = "N"
    name = "normal"

    def _cdf(self, y, mu, sigma, nu):
        return special.ndtr((y - mu) / sigma)

    def _logpdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        return -_HALF_LOG_2PI - np.log(sigma) - 0.5 * z * z

    def _dlogg(self, z):
        return -z

    def _quantile(self, p, mu, sigma, nu):
        return mu + sigma * special.ndtri(p)

    def _moments(self, mu, sigma, nu):
        return mu, sigma**2

    def start(self, y):
        return np.mean(y), np.std(y)


class Logistic_(_LocScale):
    code = "LO"
    name = "logistic"

    def _cdf(self, y, mu, sigma, nu):
        return special.expit((y - mu) / sigma)

    def _logpdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        return -np.log(sigma) + special.log_expit(z) + special.log_expit(-z)

    def _dlogg(self, z):
        return 1.0 - 2.0 * special.expit(z)

    def _quantile(self, p, mu, sigma, nu):
        return mu + sigma * special.logit(p)

    def _moments(self, mu, sigma, nu):
        return mu, np.pi**2 * sigma**2 / 3.0

    def start(self, y):
        return np.mean(y), np.std(y) * np.sqrt(3.0) / np.pi


class Gumbel(_LocScale):
    """Minimum-type Gumbel: F(y) = 1 - exp(-exp((y - mu) / sigma))."""

    code = "GU"
    name = "Gumbel"

    def _cdf(self, y, mu, sigma, nu):
        return -np.expm1(-np.exp((y - mu) / sigma))

    def _logpdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        with np.errstate(over="ignore"):
            return -np.log(sigma) + z - np.exp(z)

    def _dlogg(self, z):
        return 1.0 - np.exp(z)

    def _quantile(self, p, mu, sigma, nu):
        return mu + sigma * np.log(-np.log1p(-p))

    def _moments(self, mu, sigma, nu):
        return mu - EULER * sigma, np.pi**2 * sigma**2 / 6.0

    def start(self, y):
        s = np.std(y) * np.sqrt(6.0) / np.pi
        return np.mean(y) + EULER * s, s


class ReverseGumbel(_LocScale):
    code = "rGU"
    name = "reverse Gumbel"

    def _cdf(self, y, mu, sigma, nu):
        return np.exp(-np.exp(-(y - mu) / sigma))

    def _logpdf(self, y, mu, sigma, nu):
        z = (y - mu) / sigma
        with np.errstate(over="ignore"):
            return -np.log(sigma) - z - np.exp(-z)

    def _dlogg(self, z):
        return -1.0 + np.exp(-z)

    def _quantile(self, p, mu, sigma, nu):
        return mu - sigma * np.log(-np.log(p))

    def _moments(self, mu, sigma, nu):
        return mu + EULER * sigma, np.pi**2 * sigma**2 / 6.0

    def start(self, y):
        s = np.std(y) * np.sqrt(6.0) / np.pi
        return np.mean(y) - EULER * s, s


# ---------------------------------------------------------------------------
# positive support


class LogNormal(Margin):
    code = "LN"
    name = "log-normal"
    support = (0.0, np.inf)
    links = (_REAL, _POS)

    def _cdf(self, y, mu, sigma, nu):
        return special.ndtr((np.log(y) - mu) / sigma)

    def _logpdf(self, y, mu, sigma, nu):
        ly = np.log(y)
        z = (ly - mu) / sigma
        return -ly - np.log(sigma) - _HALF_LOG_2PI - 0.5 * z * z

    def _dcdf(self, y, mu, sigma, nu):
        z = (np.log(y) - mu) / sigma
        phi = np.exp(-0.5 * z * z - _HALF_LOG_2PI)
        return -phi / sigma, -phi * z / sigma

    def _dlogpdf(self, y, mu, sigma, nu):
        z = (np.log(y) - mu) / sigma
        return z / sigma, (z * z - 1.0) / sigma

    def _quantile(self, p, mu, sigma, nu):
        return np.exp(mu + sigma * special.ndtri(p))

    def _moments(self, mu, sigma, nu):
        s2 = sigma**2
        return np.sqrt(np.exp(s2)) * np.exp(mu), np.exp(s2) * np.expm1(s2) * np.exp(2.0 * mu)

    def start(self, y):
        ly = np.log(y)
        return np.mean(ly), np.std(ly)


class Weibull(Margin):
    code = "WEI"
    name = "Weibull"
    support = (0.0, np.inf)
    links = (_POS, _POS)

    def _valid_extra(self, mu, sigma):
        return mu > 0

    @staticmethod
    def _t(y, mu, sigma):
        lr = np.log(y) - np.log(mu)
        return np.exp(sigma * lr), lr

    def _cdf(self, y, mu, sigma, nu):
        t, _ = self._t(y, mu, sigma)
        return -np.expm1(-t)

    def _logpdf(self, y, mu, sigma, nu):
        t, lr = self._t(y, mu, sigma)
        return np.log(sigma) - np.log(mu) + (sigma - 1.0) * lr - t

    def _dcdf(self, y, mu, sigma, nu):
        t, lr = self._t(y, mu, sigma)
        s = np.exp(-t) * t
        return -s * sigma / mu, s * lr

    def _dlogpdf(self, y, mu, sigma, nu):
        t, lr = self._t(y, mu, sigma)
        return sigma * (t - 1.0) / mu, 1.0 / sigma + lr * (1.0 - t)

    def _quantile(self, p, mu, sigma, nu):
        return mu * (-np.log1p(-p)) ** (1.0 / sigma)

    def _moments(self, mu, sigma, nu):
        g1 = special.gamma(1.0 / sigma + 1.0)
        return mu * g1, mu**2 * (special.gamma(2.0 / sigma + 1.0) - g1**2)

    def start(self, y):
        ly = np.log(y)
        # log Y is minimum-Gumbel with scale 1 / sigma
        sigma = np.pi / (np.sqrt(6.0) * max(np.std(ly), 1e-8))
        return np.exp(np.mean(ly) + EULER / sigma), sigma


class Gamma(Margin):
    code = "GA"
    name = "gamma"
    support = (0.0, np.inf)
    links = (_POS, _POS)

    def _valid_extra(self, mu, sigma):
        return mu > 0

    @staticmethod
    def _ax(y, mu, sigma):
        a = 1.0 / sigma**2
        return a, y / (mu * sigma**2)

    def _cdf(self, y, mu, sigma, nu):
        a, x = self._ax(y, mu, sigma)
        return special.gammainc(a, x)

    def _logpdf(self, y, mu, sigma, nu):
        a, x = self._ax(y, mu, sigma)
        return a * np.log(x) - x - np.log(y) - special.gammaln(a)

    def _dcdf(self, y, mu, sigma, nu):
        a, x = self._ax(y, mu, sigma)
        g = np.exp((a - 1.0) * np.log(x) - x - special.gammaln(a))
        # no closed form for the shape derivative of the regularised gamma
        dpa = _richardson(lambda aa: special.gammainc(aa, x), a)
        return -g * x / mu, dpa * (-2.0 * a / sigma) + g * (-2.0 * x / sigma)

    def _dlogpdf(self, y, mu, sigma, nu):
        a, x = self._ax(y, mu, sigma)
        return -(a - x) / mu, -2.0 * a * (np.log(x) - special.digamma(a)) / sigma - 2.0 * (a - x) / sigma

    def _quantile(self, p, mu, sigma, nu):
        a = 1.0 / sigma**2
        return special.gammaincinv(a, p) * mu * sigma**2

    def _moments(self, mu, sigma, nu):
        return mu, mu**2 * sigma**2

    def start(self, y):
        m = np.mean(y)
        return m, np.std(y) / m


class InverseGaussian(Margin):
    code = "iG"
    name = "inverse Gaussian"
    support = (0.0, np.inf)
    links = (_POS, _POS)

    def _valid_extra(self, mu, sigma):
        return mu > 0

    @staticmethod
    def _z(y, mu, sigma):
        r = np.sqrt(y) * sigma
        return (y / mu - 1.0) / r, -(y / mu + 1.0) / r, 2.0 / (mu * sigma**2)

    def _cdf(self, y, mu, sigma, nu):
        z1, z2, k = self._z(y, mu, sigma)
        return np.minimum(special.ndtr(z1) + np.exp(k + special.log_ndtr(z2)), 1.0)

    def _logpdf(self, y, mu, sigma, nu):
        return (
            -_HALF_LOG_2PI
            - np.log(sigma)
            - 1.5 * np.log(y)
            - (y - mu) ** 2 / (2.0 * mu**2 * sigma**2 * y)
        )

    def _dcdf(self, y, mu, sigma, nu):
        z1, z2, k = self._z(y, mu, sigma)
        tail = np.exp(k + special.log_ndtr(z2))
        phi1 = np.exp(-0.5 * z1 * z1 - _HALF_LOG_2PI)
        d_mu = -2.0 * tail / (mu**2 * sigma**2)
        d_sigma = 2.0 * phi1 / (np.sqrt(y) * sigma**2) - 2.0 * k * tail / sigma
        return d_mu, d_sigma

    def _dlogpdf(self, y, mu, sigma, nu):
        return (
            (y - mu) / (sigma**2 * mu**3),
            -1.0 / sigma + (y - mu) ** 2 / (mu**2 * sigma**3 * y),
        )

    def _moments(self, mu, sigma, nu):
        return mu, mu**3 * sigma**2

    def start(self, y):
        m = np.mean(y)
        return m, np.sqrt(np.var(y) / m**3)


class Beta(Margin):
    code = "BE"
    name = "beta"
    support = (0.0, 1.0)
    links = (_UNIT, _UNIT)

    def _valid_extra(self, mu, sigma):
        return (mu > 0) & (mu < 1) & (sigma < 1)

    @staticmethod
    def _ab(mu, sigma):
        phi = 1.0 / sigma**2 - 1.0
        return mu * phi, (1.0 - mu) * phi, phi

    def _cdf(self, y, mu, sigma, nu):
        a, b, _ = self._ab(mu, sigma)
        return special.betainc(a, b, y)

    def _logpdf(self, y, mu, sigma, nu):
        a, b, _ = self._ab(mu, sigma)
        return (a - 1.0) * np.log(y) + (b - 1.0) * np.log1p(-y) - special.betaln(a, b)

    def _dcdf(self, y, mu, sigma, nu):
        a, b, phi = self._ab(mu, sigma)
        # the regularised incomplete beta has no closed-form parameter derivatives
        da = _richardson(lambda aa: special.betainc(aa, b, y), a)
        db = _richardson(lambda bb: special.betainc(a, bb, y), b)
        dphi = -2.0 / sigma**3
        return phi * (da - db), dphi * (mu * da + (1.0 - mu) * db)

    def _dlogpdf(self, y, mu, sigma, nu):
        a, b, phi = self._ab(mu, sigma)
        dab = special.digamma(a + b)
        da = np.log(y) - special.digamma(a) + dab
        db = np.log1p(-y) - special.digamma(b) + dab
        dphi = -2.0 / sigma**3
        return phi * (da - db), dphi * (mu * da + (1.0 - mu) * db)

    def _quantile(self, p, mu, sigma, nu):
        a, b, _ = self._ab(mu, sigma)
        return special.betaincinv(a, b, p)

    def _moments(self, mu, sigma, nu):
        return mu, sigma**2 * mu * (1.0 - mu)

    def start(self, y):
        m = float(np.clip(np.mean(y), 0.01, 0.99))
        s2 = np.var(y) / (m * (1.0 - m))
        return m, float(np.sqrt(np.clip(s2, 1e-4, 0.81)))


# ---------------------------------------------------------------------------
# three-parameter families


class _Burr(Margin):
    n_params = 3
    support = (0.0, np.inf)
    param_names = ("mu", "sigma", "nu")
    links = (_POS, _POS, _POS)

    def _valid_extra(self, mu, sigma):
        return mu > 0

    def start(self, y):
        # nu = 1 makes both families log-logistic: log Y logistic, scale 1 / sigma
        ly = np.log(y)
        sigma = np.pi / (np.sqrt(3.0) * max(np.std(ly), 1e-8))
        return np.exp(np.median(ly)), sigma, 1.0


class Dagum(_Burr):
    code = "DAGUM"
    name = "Dagum"

    def _cdf(self, y, mu, sigma, nu):
        s = sigma * (np.log(y) - np.log(mu))
        return np.exp(-nu * np.logaddexp(0.0, -s))

    def _logpdf(self, y, mu, sigma, nu):
        lr = np.log(y) - np.log(mu)
        s = sigma * lr
        return np.log(sigma) + np.log(nu) - np.log(y) + nu * s - (nu + 1.0) * np.logaddexp(0.0, s)

    def _dcdf(self, y, mu, sigma, nu):
        lr = np.log(y) - np.log(mu)
        s = sigma * lr
        sp = np.logaddexp(0.0, -s)
        F = np.exp(-nu * sp)
        e = special.expit(-s)
        return F * (-nu * e * sigma / mu), F * (nu * e * lr), F * (-sp)

    def _dlogpdf(self, y, mu, sigma, nu):
        lr = np.log(y) - np.log(mu)
        s = sigma * lr
        e = special.expit(s)
        return (
            (-sigma * nu + (nu + 1.0) * e * sigma) / mu,
            1.0 / sigma + nu * lr - (nu + 1.0) * e * lr,
            1.0 / nu + s - np.logaddexp(0.0, s),
        )

    def _quantile(self, p, mu, sigma, nu):
        return mu * np.expm1(-np.log(p) / nu) ** (-1.0 / sigma)

    def _moments(self, mu, sigma, nu):
        mean = var = None
        if sigma > 1:
            m1 = special.gamma(1.0 - 1.0 / sigma) * special.gamma(nu + 1.0 / sigma) / special.gamma(nu)
            mean = mu * m1
            if sigma > 2:
                m2 = special.gamma(1.0 - 2.0 / sigma) * special.gamma(nu + 2.0 / sigma) / special.gamma(nu)
                var = mu**2 * (m2 - m1**2)
        return mean, var


class SinghMaddala(_Burr):
    code = "SM"
    name = "Singh-Maddala"

    def _cdf(self, y, mu, sigma, nu):
        s = sigma * (np.log(y) - np.log(mu))
        return -np.expm1(-nu * np.logaddexp(0.0, s))

    def _logpdf(self, y, mu, sigma, nu):
        ly = np.log(y)
        s = sigma * (ly - np.log(mu))
        return (
            np.log(sigma) + np.log(nu) + (sigma - 1.0) * ly - sigma * np.log(mu)
            - (nu + 1.0) * np.logaddexp(0.0, s)
        )

    def _dcdf(self, y, mu, sigma, nu):
        lr = np.log(y) - np.log(mu)
        s = sigma * lr
        sp = np.logaddexp(0.0, s)
        surv = np.exp(-nu * sp)
        e = special.expit(s)
        return surv * (-nu * e * sigma / mu), surv * (nu * e * lr), surv * sp

    def _dlogpdf(self, y, mu, sigma, nu):
        lr = np.log(y) - np.log(mu)
        s = sigma * lr
        e = special.expit(s)
        return (
            (-sigma + (nu + 1.0) * e * sigma) / mu,
            1.0 / sigma + lr * (1.0 - (nu + 1.0) * e),
            1.0 / nu - np.logaddexp(0.0, s),
        )

    def _quantile(self, p, mu, sigma, nu):
        return mu * np.expm1(-np.log1p(-p) / nu) ** (1.0 / sigma)

    def _moments(self, mu, sigma, nu):
        mean = var = None
        if sigma * nu > 1:
            m1 = special.gamma(1.0 + 1.0 / sigma) * special.gamma(nu - 1.0 / sigma) / special.gamma(nu)
            mean = mu * m1
            if sigma * nu > 2:
                m2 = special.gamma(1.0 + 2.0 / sigma) * special.gamma(nu - 2.0 / sigma) / special.gamma(nu)
                var = mu**2 * (m2 - m1**2)
        return mean, var


MARGINS = {
    m.code: m
    for m in (
        Beta(), Dagum(), Gamma(), Gumbel(), InverseGaussian(), LogNormal(),
        Logistic_(), Normal(), ReverseGumbel(), SinghMaddala(), Weibull(),
    )
}

MARGIN_TAGS = tuple(MARGINS)


def get_margin(tag):
    if isinstance(tag, Margin):
        return tag
    try:
        return MARGINS[tag]
    except KeyError:
        raise DomainError(f"unknown margin {tag!r}; valid tags: {', '.join(MARGIN_TAGS)}") from None


def _split(params):
    mu, sigma, *rest = params
    return mu, sigma, (rest[0] if rest else None)


def margin_cdf(family, y, params):
    return get_margin(family).cdf(y, *_split(params))


def margin_logpdf(family, y, params):
    return get_margin(family).logpdf(y, *_split(params))


def margin_pdf(family, y, params):
    return get_margin(family).pdf(y, *_split(params))


def margin_quantile(family, p, params):
    return get_margin(family).quantile(p, *_split(params))


def margin_moments(family, params):
    return get_margin(family).moments(*_split(params))


def margin_cdf_derivs(family, y, params):
    return get_margin(family).cdf_derivs(y, *_split(params))


def margin_logpdf_derivs(family, y, params):
    return get_margin(family).logpdf_derivs(y, *_split(params))


def margin_sample(family, params, n, rng):
    return get_margin(family).sample(params, n, rng)
