"""One-parameter bivariate copulas with rotations, links and Kendall's tau.

Every family here is exchangeable, so derivatives with respect to ``v`` are
obtained from the ``u`` versions with the arguments swapped. Rotations follow

    C90(u, v)  = v - C(1 - u, v)
    C180(u, v) = u + v - 1 + C(1 - u, 1 - v)
    C270(u, v) = u - C(u, 1 - v)

and the dependence parameter of a rotated copula is always the parameter of the
unrotated family (so a 90 degree Clayton still takes ``theta > 0`` and has a
negative Kendall's tau).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .exceptions import DomainError
from .links import EPS, LogShift, NonZeroIdentity, Tanh

UV_EPS = 1e-12
_LOG_2PI = np.log(2.0 * np.pi)


def clamp_uv(x):
    return np.clip(np.asarray(x, dtype=float), UV_EPS, 1.0 - UV_EPS)


def _bisect_increasing(fun, target, lo, hi, n_iter=55):
    """Vectorised bisection for an increasing ``fun`` on ``[lo, hi]``."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), np.shape(target)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), np.shape(target)).copy()
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


class _Family:
    name = ""
    code = ""
    lower = -np.inf
    upper = np.inf
    lower_closed = False
    upper_closed = False
    rotatable = False
    link = None

    def in_range(self, theta):
        theta = np.asarray(theta, dtype=float)
        lo = theta >= self.lower if self.lower_closed else theta > self.lower
        hi = theta <= self.upper if self.upper_closed else theta < self.upper
        return lo & hi & np.isfinite(theta)

    def range_text(self):
        left = "[" if self.lower_closed else "("
        right = "]" if self.upper_closed else ")"
        return f"{left}{self.lower}, {self.upper}{right}"

    # subclasses: cdf, hu, dcdt, logpdf, dlogpdf_du, dlogpdf_dt, tau, hinv

    def logpdf_grad(self, u, v, t):
        return (
            self.logpdf(u, v, t),
            self.dlogpdf_du(u, v, t),
            self.dlogpdf_du(v, u, t),
            self.dlogpdf_dt(u, v, t),
        )

    def hinv(self, u, w, t):
        return _bisect_increasing(lambda x: self.hu(u, x, t), w, UV_EPS, 1.0 - UV_EPS)

    def tau_inverse(self, tau):
        tau = float(tau)
        lo, hi = self._tau_bracket()
        return optimize.brentq(lambda th: self.tau(th) - tau, lo, hi, xtol=1e-13)


class AMH(_Family):
    name = "AMH"
    code = "AMH"
    lower, upper = -1.0, 1.0
    lower_closed = upper_closed = True
    link = Tanh()

    def cdf(self, u, v, t):
        return u * v / (1.0 - t * (1.0 - u) * (1.0 - v))

    def hu(self, u, v, t):
        d = 1.0 - t * (1.0 - u) * (1.0 - v)
        return v * (1.0 - t * (1.0 - v)) / d**2

    def dcdt(self, u, v, t):
        ub, vb = 1.0 - u, 1.0 - v
        return u * v * ub * vb / (1.0 - t * ub * vb) ** 2

    def _num_den(self, u, v, t):
        ub, vb = 1.0 - u, 1.0 - v
        num = 1.0 + t * ((1.0 + u) * (1.0 + v) - 3.0) + t**2 * ub * vb
        den = 1.0 - t * ub * vb
        return num, den

    def logpdf(self, u, v, t):
        num, den = self._num_den(u, v, t)
        return np.log(num) - 3.0 * np.log(den)

    def dlogpdf_du(self, u, v, t):
        num, den = self._num_den(u, v, t)
        vb = 1.0 - v
        return (t * (1.0 + v) - t**2 * vb) / num - 3.0 * t * vb / den

    def dlogpdf_dt(self, u, v, t):
        num, den = self._num_den(u, v, t)
        ub, vb = 1.0 - u, 1.0 - v
        dnum = (1.0 + u) * (1.0 + v) - 3.0 + 2.0 * t * ub * vb
        return dnum / num + 3.0 * ub * vb / den

    def tau(self, t):
        t = np.asarray(t, dtype=float)
        small = np.abs(t) < 1e-3
        ts = np.where(small, 0.5, t)
        one_m = 1.0 - ts
        exact = 1.0 - 2.0 * (ts + one_m * special.xlogy(one_m, one_m)) / (3.0 * ts**2)
        series = 2 * t / 9 + t**2 / 18 + t**3 / 45 + t**4 / 90
        return np.where(small, series, exact)

    def _tau_bracket(self):
        return -1.0, 1.0


class Clayton(_Family):
    name = "Clayton"
    code = "C"
    lower, upper = 0.0, np.inf
    rotatable = True
    link = LogShift(0.0)

    @staticmethod
    def _log_a(u, v, t):
        # log(u^-t + v^-t - 1), overflow-safe
        la, lb = -t * np.log(u), -t * np.log(v)
        m = np.maximum(la, lb)
        with np.errstate(over="ignore", invalid="ignore"):
            small = np.log1p(np.expm1(np.minimum(la, 30.0)) + np.expm1(np.minimum(lb, 30.0)))
            big = m + np.log(np.exp(la - m) + np.exp(lb - m) - np.exp(-m))
        return np.where(m < 30.0, small, big), la, lb

    def cdf(self, u, v, t):
        log_a, _, _ = self._log_a(u, v, t)
        return np.exp(-log_a / t)

    def hu(self, u, v, t):
        log_a, _, _ = self._log_a(u, v, t)
        return np.exp(-(1.0 + t) * np.log(u) - (1.0 + 1.0 / t) * log_a)

    def _dlog_a_dt(self, u, v, t, log_a, la, lb):
        return -(np.exp(la - log_a) * np.log(u) + np.exp(lb - log_a) * np.log(v))

    def dcdt(self, u, v, t):
        log_a, la, lb = self._log_a(u, v, t)
        c = np.exp(-log_a / t)
        return c * (log_a / t**2 - self._dlog_a_dt(u, v, t, log_a, la, lb) / t)

    def logpdf(self, u, v, t):
        log_a, _, _ = self._log_a(u, v, t)
        return np.log1p(t) - (1.0 + t) * (np.log(u) + np.log(v)) - (2.0 + 1.0 / t) * log_a

    def dlogpdf_du(self, u, v, t):
        log_a, la, _ = self._log_a(u, v, t)
        return (-(1.0 + t) + (2.0 * t + 1.0) * np.exp(la - log_a)) / u

    def dlogpdf_dt(self, u, v, t):
        log_a, la, lb = self._log_a(u, v, t)
        dla = self._dlog_a_dt(u, v, t, log_a, la, lb)
        return (
            1.0 / (1.0 + t)
            - np.log(u)
            - np.log(v)
            + log_a / t**2
            - (2.0 + 1.0 / t) * dla
        )

    def hinv(self, u, w, t):
        la = -t * np.log(u)
        e = np.expm1(-t / (1.0 + t) * np.log(w))
        with np.errstate(divide="ignore"):
            log_inner = np.logaddexp(0.0, la + np.log(e))
        return clamp_uv(np.exp(-log_inner / t))

    def tau(self, t):
        t = np.asarray(t, dtype=float)
        return t / (t + 2.0)

    def tau_inverse(self, tau):
        return 2.0 * tau / (1.0 - tau)


class FGM(_Family):
    name = "FGM"
    code = "FGM"
    lower, upper = -1.0, 1.0
    lower_closed = upper_closed = True
    link = Tanh()

    def cdf(self, u, v, t):
        return u * v * (1.0 + t * (1.0 - u) * (1.0 - v))

    def hu(self, u, v, t):
        return v * (1.0 + t * (1.0 - v) * (1.0 - 2.0 * u))

    def dcdt(self, u, v, t):
        return u * v * (1.0 - u) * (1.0 - v)

    def logpdf(self, u, v, t):
        return np.log1p(t * (1.0 - 2.0 * u) * (1.0 - 2.0 * v))

    def dlogpdf_du(self, u, v, t):
        return -2.0 * t * (1.0 - 2.0 * v) / (1.0 + t * (1.0 - 2.0 * u) * (1.0 - 2.0 * v))

    def dlogpdf_dt(self, u, v, t):
        a = (1.0 - 2.0 * u) * (1.0 - 2.0 * v)
        return a / (1.0 + t * a)

    def hinv(self, u, w, t):
        a = t * (1.0 - 2.0 * u)
        disc = np.sqrt(np.maximum((1.0 + a) ** 2 - 4.0 * a * w, 0.0))
        return clamp_uv(2.0 * w / ((1.0 + a) + disc))

    def tau(self, t):
        return 2.0 * np.asarray(t, dtype=float) / 9.0

    def tau_inverse(self, tau):
        return 4.5 * tau


def _debye1(t):
    """D1(t) = t^-1 int_0^t s / (e^s - 1) ds by adaptive quadrature."""

    def integrand(s):
        return 1.0 if s == 0.0 else s / np.expm1(s)

    val, _ = integrate.quad(integrand, 0.0, t, epsabs=1e-10, epsrel=1e-12, limit=200)
    return val / t


@lru_cache(maxsize=4096)
def _frank_tau_scalar(t):
    if abs(t) < 1e-4:
        return t / 9.0 - t**3 / 900.0
    return 1.0 - 4.0 / t * (1.0 - _debye1(t))


class Frank(_Family):
    name = "Frank"
    code = "F"
    link = NonZeroIdentity()
    _small = 1e-3

    def in_range(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.isfinite(theta) & (theta != 0.0)

    def range_text(self):
        return "R \\ {0}"

    # kernels for t > 0 -------------------------------------------------
    @staticmethod
    def _pieces(u, v, t):
        log_a = np.log(-np.expm1(-t))
        p = -np.expm1(-t * u)
        q = -np.expm1(-t * v)
        rv = -np.expm1(-t * (1.0 - v))
        with np.errstate(divide="ignore"):
            log_g = np.logaddexp(-t * u + np.log(q), -t * v + np.log(rv))
        return log_a, p, q, log_g

    def _cdf_pos(self, u, v, t):
        log_a, p, q, log_g = self._pieces(u, v, t)
        a = -np.expm1(-t)
        with np.errstate(invalid="ignore", divide="ignore"):
            small = -np.log1p(-p * q / a) / t
        return np.where(t < 1.0, small, (log_a - log_g) / t)

    def _hu_pos(self, u, v, t):
        _, _, q, log_g = self._pieces(u, v, t)
        return np.exp(-t * u + np.log(q) - log_g)

    def _gtheta_over_g(self, u, v, t, p, q, log_g):
        with np.errstate(divide="ignore"):
            return (
                np.exp(-t - log_g)
                - u * np.exp(-t * u + np.log(q) - log_g)
                - v * np.exp(-t * v + np.log(p) - log_g)
            )

    def _dcdt_pos(self, u, v, t):
        log_a, p, q, log_g = self._pieces(u, v, t)
        c = (log_a - log_g) / t
        return -c / t - (self._gtheta_over_g(u, v, t, p, q, log_g) - np.exp(-t - log_a)) / t

    def _logpdf_pos(self, u, v, t):
        log_a, _, _, log_g = self._pieces(u, v, t)
        return np.log(t) + log_a - t * (u + v) - 2.0 * log_g

    def _du_pos(self, u, v, t):
        _, _, q, log_g = self._pieces(u, v, t)
        return -t + 2.0 * t * np.exp(-t * u + np.log(q) - log_g)

    def _dt_pos(self, u, v, t):
        log_a, p, q, log_g = self._pieces(u, v, t)
        return (
            1.0 / t
            + np.exp(-t - log_a)
            - (u + v)
            - 2.0 * self._gtheta_over_g(u, v, t, p, q, log_g)
        )

    # series in t around independence ------------------------------------
    @staticmethod
    def _series_logpdf(u, v, t):
        a1 = (1 - 2 * u) * (1 - 2 * v) / 2
        a2 = u * v * (1 - u) * (1 - v) - 1.0 / 24
        a3 = u * v * (u - 1) * (2 * u - 1) * (v - 1) * (2 * v - 1) / 6
        return a1, a2, a3

    def _reflect(self, u, t):
        t = np.asarray(t, dtype=float)
        neg = t < 0
        ts = np.abs(t)
        ts = np.where(ts < self._small, 1.0, ts)  # series branch handles these
        return np.where(neg, 1.0 - u, u), ts, neg

    # public -------------------------------------------------------------
    def cdf(self, u, v, t):
        ur, ts, neg = self._reflect(u, t)
        k = self._cdf_pos(ur, v, ts)
        exact = np.where(neg, v - k, k)
        s = np.asarray(t, dtype=float)
        b1 = u * v * (u - 1) * (v - 1) / 2
        b2 = u * v * (u - 1) * (2 * u - 1) * (v - 1) * (2 * v - 1) / 12
        series = u * v + s * b1 + s**2 * b2
        return np.where(np.abs(s) < self._small, series, exact)

    def hu(self, u, v, t):
        t = np.asarray(t, dtype=float)
        neg = t < 0
        ts = np.maximum(np.abs(t), EPS)
        return self._hu_pos(np.where(neg, 1.0 - u, u), v, ts)

    def dcdt(self, u, v, t):
        ur, ts, _ = self._reflect(u, t)
        exact = self._dcdt_pos(ur, v, ts)
        s = np.asarray(t, dtype=float)
        b1 = u * v * (u - 1) * (v - 1) / 2
        b2 = u * v * (u - 1) * (2 * u - 1) * (v - 1) * (2 * v - 1) / 12
        b3 = (
            u * v * (u - 1) * (v - 1)
            * (6 * u**2 * v**2 - 6 * u**2 * v + u**2 - 6 * u * v**2 + 6 * u * v - u + v**2 - v)
            / 24
        )
        series = b1 + 2 * s * b2 + 3 * s**2 * b3
        return np.where(np.abs(s) < self._small, series, exact)

    def logpdf(self, u, v, t):
        ur, ts, _ = self._reflect(u, t)
        exact = self._logpdf_pos(ur, v, ts)
        s = np.asarray(t, dtype=float)
        a1, a2, a3 = self._series_logpdf(u, v, s)
        series = s * a1 + s**2 * a2 + s**3 * a3
        return np.where(np.abs(s) < self._small, series, exact)

    def dlogpdf_du(self, u, v, t):
        ur, ts, neg = self._reflect(u, t)
        k = self._du_pos(ur, v, ts)
        exact = np.where(neg, -k, k)
        s = np.asarray(t, dtype=float)
        d1 = -(1 - 2 * v)
        d2 = (1 - 2 * u) * v * (1 - v)
        d3 = v * (v - 1) * (2 * v - 1) * (6 * u**2 - 6 * u + 1) / 6
        series = s * d1 + s**2 * d2 + s**3 * d3
        return np.where(np.abs(s) < self._small, series, exact)

    def dlogpdf_dt(self, u, v, t):
        ur, ts, neg = self._reflect(u, t)
        k = self._dt_pos(ur, v, ts)
        exact = np.where(neg, -k, k)
        s = np.asarray(t, dtype=float)
        a1, a2, a3 = self._series_logpdf(u, v, s)
        series = a1 + 2 * s * a2 + 3 * s**2 * a3
        return np.where(np.abs(s) < self._small, series, exact)

    def hinv(self, u, w, t):
        t = np.asarray(t, dtype=float)
        t = np.where(np.abs(t) < EPS, EPS, t)
        with np.errstate(over="ignore"):
            frac = w * np.expm1(-t) / (w + (1.0 - w) * np.exp(-t * u))
        return clamp_uv(-np.log1p(frac) / t)

    def tau(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.array([_frank_tau_scalar(float(x)) for x in flat])
        return out.reshape(t.shape) if t.shape else float(out[0])

    def _tau_bracket(self):
        return -700.0, 700.0

    def tau_inverse(self, tau):
        if abs(tau) < 1e-12:
            return EPS
        return optimize.brentq(lambda th: _frank_tau_scalar(th) - tau, -700.0, 700.0, xtol=1e-13)


def _bvn_cdf(h, k, rho):
    """Standard bivariate normal cdf through Owen's T function."""
    h, k, rho = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float), np.asarray(rho, dtype=float)
    )
    s = np.sqrt((1.0 - rho) * (1.0 + rho))
    both_zero = (h == 0.0) & (k == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = np.where(h == 0.0, np.sign(k - rho * h) * np.inf, (k - rho * h) / (h * s))
        ak = np.where(k == 0.0, np.sign(h - rho * k) * np.inf, (h - rho * k) / (k * s))
    ah = np.where(both_zero, 0.0, ah)
    ak = np.where(both_zero, 0.0, ak)
    beta = np.where((h * k > 0) | ((h * k == 0) & (h + k >= 0)), 0.0, 0.5)
    val = 0.5 * (special.ndtr(h) + special.ndtr(k)) - special.owens_t(h, ah) - special.owens_t(k, ak) - beta
    origin = 0.25 + np.arcsin(rho) / (2.0 * np.pi)
    return np.clip(np.where(both_zero, origin, val), 0.0, 1.0)


class Gaussian(_Family):
    name = "Gaussian"
    code = "N"
    lower, upper = -1.0, 1.0
    link = Tanh()

    def cdf(self, u, v, t):
        return _bvn_cdf(special.ndtri(u), special.ndtri(v), t)

    def hu(self, u, v, t):
        x, y = special.ndtri(u), special.ndtri(v)
        return special.ndtr((y - t * x) / np.sqrt((1.0 - t) * (1.0 + t)))

    def dcdt(self, u, v, t):
        x, y = special.ndtri(u), special.ndtri(v)
        om = (1.0 - t) * (1.0 + t)
        return np.exp(-(x * x - 2.0 * t * x * y + y * y) / (2.0 * om)) / (2.0 * np.pi * np.sqrt(om))

    def _q(self, x, y, t):
        return t * t * (x * x + y * y) - 2.0 * t * x * y

    def logpdf(self, u, v, t):
        x, y = special.ndtri(u), special.ndtri(v)
        om = (1.0 - t) * (1.0 + t)
        return -0.5 * np.log(om) - self._q(x, y, t) / (2.0 * om)

    def dlogpdf_du(self, u, v, t):
        x, y = special.ndtri(u), special.ndtri(v)
        om = (1.0 - t) * (1.0 + t)
        # divide by the normal density of x: d x / d u
        return t * (y - t * x) / om * np.exp(0.5 * x * x + 0.5 * _LOG_2PI)

    def dlogpdf_dt(self, u, v, t):
        x, y = special.ndtri(u), special.ndtri(v)
        om = (1.0 - t) * (1.0 + t)
        q = self._q(x, y, t)
        dq = 2.0 * t * (x * x + y * y) - 2.0 * x * y
        return t / om - dq / (2.0 * om) - q * t / om**2

    def hinv(self, u, w, t):
        x = special.ndtri(u)
        return clamp_uv(special.ndtr(t * x + np.sqrt((1.0 - t) * (1.0 + t)) * special.ndtri(w)))

    def tau(self, t):
        return 2.0 / np.pi * np.arcsin(np.asarray(t, dtype=float))

    def tau_inverse(self, tau):
        return np.sin(np.pi * tau / 2.0)


class Gumbel(_Family):
    name = "Gumbel"
    code = "G"
    lower, upper = 1.0, np.inf
    lower_closed = True
    rotatable = True
    link = LogShift(1.0)

    @staticmethod
    def _pieces(u, v, t):
        x, y = -np.log(u), -np.log(v)
        lx, ly = np.log(x), np.log(y)
        log_a = np.logaddexp(t * lx, t * ly)
        w = np.exp(log_a / t)
        px, py = np.exp(t * lx - log_a), np.exp(t * ly - log_a)
        return x, y, lx, ly, log_a, w, px, py

    def cdf(self, u, v, t):
        *_, w, _, _ = self._pieces(u, v, t)
        return np.exp(-w)

    def hu(self, u, v, t):
        x, _, _, _, _, w, px, _ = self._pieces(u, v, t)
        return np.exp(-w) * w * px / (x * u)

    def _dw_dt(self, lx, ly, log_a, w, px, py, t):
        return w * (-log_a / t**2 + (px * lx + py * ly) / t)

    def dcdt(self, u, v, t):
        _, _, lx, ly, log_a, w, px, py = self._pieces(u, v, t)
        return -np.exp(-w) * self._dw_dt(lx, ly, log_a, w, px, py, t)

    def logpdf(self, u, v, t):
        x, y, lx, ly, log_a, w, _, _ = self._pieces(u, v, t)
        return -w + (t - 1.0) * (lx + ly) + x + y + (1.0 / t - 2.0) * log_a + np.log(w + t - 1.0)

    def dlogpdf_du(self, u, v, t):
        x, _, _, _, _, w, px, _ = self._pieces(u, v, t)
        d_dx = (
            -w * px / x
            + (t - 1.0) / x
            + 1.0
            + (1.0 - 2.0 * t) * px / x
            + w * px / (x * (w + t - 1.0))
        )
        return -d_dx / u

    def dlogpdf_dt(self, u, v, t):
        _, _, lx, ly, log_a, w, px, py = self._pieces(u, v, t)
        dw = self._dw_dt(lx, ly, log_a, w, px, py, t)
        return (
            -dw
            + lx
            + ly
            - log_a / t**2
            + (1.0 / t - 2.0) * (px * lx + py * ly)
            + (dw + 1.0) / (w + t - 1.0)
        )

    def tau(self, t):
        return 1.0 - 1.0 / np.asarray(t, dtype=float)

    def tau_inverse(self, tau):
        return 1.0 / (1.0 - tau)


def _joe_d2(t):
    """int_0^1 s log(s) (1 - s)^(2(1-t)/t) ds by adaptive quadrature.

    The factor (1 - s)^(2/t - 1) is handled as an algebraic endpoint weight so
    the quadrature stays accurate when the exponent is negative.
    """

    def smooth(s):
        return s * np.log(s) / (1.0 - s) if s < 1.0 else -1.0

    val, _ = integrate.quad(
        smooth, 0.0, 1.0, weight="alg", wvar=(0.0, 2.0 / t - 1.0), epsabs=1e-10, epsrel=1e-12, limit=200
    )
    return val


@lru_cache(maxsize=4096)
def _joe_tau_scalar(t):
    return 1.0 + 4.0 / t**2 * _joe_d2(t)


class Joe(_Family):
    name = "Joe"
    code = "J"
    lower, upper = 1.0, np.inf
    rotatable = True
    link = LogShift(1.0)

    @staticmethod
    def _pieces(u, v, t):
        lub, lvb = np.log1p(-u), np.log1p(-v)
        la, lb = t * lub, t * lvb
        a, b = np.exp(la), np.exp(lb)
        log_s = np.logaddexp(la, lb + np.log1p(-a))
        return lub, lvb, la, lb, a, b, log_s

    def cdf(self, u, v, t):
        *_, log_s = self._pieces(u, v, t)
        return -np.expm1(log_s / t)

    def hu(self, u, v, t):
        lub, _, _, _, _, b, log_s = self._pieces(u, v, t)
        return np.exp((1.0 / t - 1.0) * log_s + (t - 1.0) * lub) * (1.0 - b)

    def _ds_dt_over_s(self, lub, lvb, a, b, log_s, la, lb):
        return np.exp(la - log_s) * lub * (1.0 - b) + np.exp(lb - log_s) * lvb * (1.0 - a)

    def dcdt(self, u, v, t):
        lub, lvb, la, lb, a, b, log_s = self._pieces(u, v, t)
        st = self._ds_dt_over_s(lub, lvb, a, b, log_s, la, lb)
        return -np.exp(log_s / t) * (-log_s / t**2 + st / t)

    def logpdf(self, u, v, t):
        lub, lvb, *_, log_s = self._pieces(u, v, t)
        s = np.exp(log_s)
        return (1.0 / t - 2.0) * log_s + (t - 1.0) * (lub + lvb) + np.log(t - 1.0 + s)

    def dlogpdf_du(self, u, v, t):
        lub, _, la, _, _, b, log_s = self._pieces(u, v, t)
        s = np.exp(log_s)
        ub = 1.0 - u
        su_over_s = t * np.exp(la - log_s) * (1.0 - b) / ub
        d_dub = (1.0 / t - 2.0) * su_over_s + (t - 1.0) / ub + su_over_s * s / (t - 1.0 + s)
        return -d_dub

    def dlogpdf_dt(self, u, v, t):
        lub, lvb, la, lb, a, b, log_s = self._pieces(u, v, t)
        s = np.exp(log_s)
        st = self._ds_dt_over_s(lub, lvb, a, b, log_s, la, lb)
        return (
            -log_s / t**2
            + (1.0 / t - 2.0) * st
            + lub
            + lvb
            + (1.0 + st * s) / (t - 1.0 + s)
        )

    def tau(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.array([_joe_tau_scalar(float(x)) for x in flat])
        return out.reshape(t.shape) if t.shape else float(out[0])

    def _tau_bracket(self):
        return 1.0 + 1e-9, 1e4


FAMILIES = {
    "AMH": AMH(),
    "Clayton": Clayton(),
    "FGM": FGM(),
    "Frank": Frank(),
    "Gaussian": Gaussian(),
    "Gumbel": Gumbel(),
    "Joe": Joe(),
}

_CODE_TO_FAMILY = {f.code: name for name, f in FAMILIES.items()}

COPULA_TAGS = (
    "AMH", "C0", "C90", "C180", "C270", "FGM", "F", "N",
    "G0", "G90", "G180", "G270", "J0", "J90", "J180", "J270",
)


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family with a rotation (0, 90, 180 or 270 degrees)."""

    family: str
    rotation: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown copula family {self.family!r}; choose from {sorted(FAMILIES)}")
        if self.rotation not in (0, 90, 180, 270):
            raise DomainError(f"rotation must be 0, 90, 180 or 270, got {self.rotation}")
        if self.rotation and not FAMILIES[self.family].rotatable:
            raise DomainError(f"{self.family} cannot be rotated; only Clayton, Gumbel and Joe can")

    @classmethod
    def from_tag(cls, tag):
        if tag not in COPULA_TAGS:
            raise DomainError(f"unknown copula tag {tag!r}; valid tags: {', '.join(COPULA_TAGS)}")
        if tag in ("AMH", "FGM", "F", "N"):
            return cls(_CODE_TO_FAMILY[tag], 0)
        return cls(_CODE_TO_FAMILY[tag[0]], int(tag[1:]))

    @property
    def tag(self):
        base = FAMILIES[self.family]
        return base.code + str(self.rotation) if base.rotatable else base.code

    @property
    def base(self):
        return FAMILIES[self.family]

    @property
    def flips(self):
        return self.rotation in (90, 180), self.rotation in (180, 270)

    def check_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if not np.all(self.base.in_range(theta)):
            bad = theta[~self.base.in_range(theta)] if theta.ndim else theta
            raise DomainError(
                f"{self.tag}: theta={np.ravel(bad)[0]!r} outside the {self.family} range {self.base.range_text()}"
            )
        return theta

    def __str__(self):
        return self.tag


def as_spec(spec):
    if isinstance(spec, CopulaSpec):
        return spec
    if isinstance(spec, str) and spec in FAMILIES:
        return CopulaSpec(spec)
    return CopulaSpec.from_tag(spec)


def _prepare(spec, u, v, theta):
    spec = as_spec(spec)
    theta = spec.check_theta(theta)
    u, v = clamp_uv(u), clamp_uv(v)
    fu, fv = spec.flips
    ur = 1.0 - u if fu else u
    vr = 1.0 - v if fv else v
    return spec, u, v, ur, vr, theta


def copula_cdf(spec, u, v, theta):
    spec, u, v, ur, vr, theta = _prepare(spec, u, v, theta)
    k = spec.base.cdf(ur, vr, theta)
    fu, fv = spec.flips
    if fu and fv:
        out = u + v - 1.0 + k
    elif fu:
        out = v - k
    elif fv:
        out = u - k
    else:
        out = k
    return out


def copula_logpdf(spec, u, v, theta):
    spec, u, v, ur, vr, theta = _prepare(spec, u, v, theta)
    return spec.base.logpdf(ur, vr, theta)


def copula_density(spec, u, v, theta):
    return np.exp(copula_logpdf(spec, u, v, theta))


def copula_hfunc(spec, u, v, theta):
    """dC/du at (u, v): the conditional cdf of V given U = u."""
    spec, u, v, ur, vr, theta = _prepare(spec, u, v, theta)
    h = spec.base.hu(ur, vr, theta)
    return 1.0 - h if spec.flips[1] else h


@dataclass
class CopulaDerivs:
    C: np.ndarray
    dC_du: np.ndarray
    dC_dv: np.ndarray
    dC_dtheta: np.ndarray
    logc: np.ndarray
    dlogc_du: np.ndarray
    dlogc_dv: np.ndarray
    dlogc_dtheta: np.ndarray

    @property
    def c(self):
        return np.exp(self.logc)

    @property
    def dc_du(self):
        return self.c * self.dlogc_du

    @property
    def dc_dv(self):
        return self.c * self.dlogc_dv

    @property
    def dc_dtheta(self):
        return self.c * self.dlogc_dtheta


def copula_logpdf_grad(spec, u, v, theta, check=True):
    """``(log c, dlogc/du, dlogc/dv, dlogc/dtheta)``; the likelihood's hot path."""
    spec = as_spec(spec)
    if check:
        spec.check_theta(theta)
    u, v = clamp_uv(u), clamp_uv(v)
    fu, fv = spec.flips
    ur = 1.0 - u if fu else u
    vr = 1.0 - v if fv else v
    logc, du, dv, dt = spec.base.logpdf_grad(ur, vr, theta)
    return logc, (-du if fu else du), (-dv if fv else dv), dt


def copula_derivs(spec, u, v, theta):
    spec, u, v, ur, vr, theta = _prepare(spec, u, v, theta)
    base = spec.base
    fu, fv = spec.flips
    hu = base.hu(ur, vr, theta)
    hv = base.hu(vr, ur, theta)
    logc, du, dv, dt = base.logpdf_grad(ur, vr, theta)
    sign_t = -1.0 if spec.rotation in (90, 270) else 1.0
    return CopulaDerivs(
        C=copula_cdf(spec, u, v, theta),
        dC_du=1.0 - hu if fv else hu,
        dC_dv=1.0 - hv if fu else hv,
        dC_dtheta=sign_t * base.dcdt(ur, vr, theta),
        logc=logc,
        dlogc_du=-du if fu else du,
        dlogc_dv=-dv if fv else dv,
        dlogc_dtheta=dt,
    )


def theta_to_tau(spec, theta):
    spec = as_spec(spec)
    theta = spec.check_theta(theta)
    tau = spec.base.tau(theta)
    return -tau if spec.rotation in (90, 270) else tau


def tau_range(spec):
    """Closed interval of Kendall's tau attainable by ``spec``."""
    spec = as_spec(spec)
    lo, hi = {
        "AMH": (float(AMH().tau(-1.0)), 1.0 / 3.0),
        "FGM": (-2.0 / 9.0, 2.0 / 9.0),
        "Frank": (-1.0, 1.0),
        "Gaussian": (-1.0, 1.0),
    }.get(spec.family, (0.0, 1.0))
    if spec.rotation in (90, 270):
        lo, hi = -hi, -lo
    return lo, hi


def tau_to_theta(spec, tau):
    """Invert Kendall's tau; ``tau`` is clipped just inside the attainable range."""
    spec = as_spec(spec)
    lo, hi = tau_range(spec)
    pad = 1e-6 * (hi - lo)
    tau = float(np.clip(tau, lo + pad, hi - pad))
    if spec.rotation in (90, 270):
        tau = -tau
    base = spec.base
    theta = float(base.tau_inverse(tau))
    if spec.family in ("Clayton",):
        theta = max(theta, 1e-6)
    if spec.family in ("Gumbel", "Joe"):
        theta = max(theta, 1.0 + 1e-6)
    return theta


def theta_link(spec, eta):
    return as_spec(spec).base.link.theta(eta)


def theta_link_deriv(spec, eta):
    return as_spec(spec).base.link.dtheta(eta)


def theta_link_inv(spec, theta):
    return as_spec(spec).base.link.eta(theta)


def copula_hinv(spec, u, w, theta):
    """Solve ``dC/du (u, v) = w`` for ``v`` (conditional inversion)."""
    spec = as_spec(spec)
    theta = spec.check_theta(theta)
    u, w = clamp_uv(u), clamp_uv(w)
    fu, fv = spec.flips
    ur = 1.0 - u if fu else u
    wr = 1.0 - w if fv else w
    vr = spec.base.hinv(ur, wr, theta)
    return 1.0 - vr if fv else vr
