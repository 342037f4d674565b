"""Link functions mapping an unconstrained predictor onto a parameter range.

Each link exposes ``theta(eta)``, its derivative ``dtheta(eta)`` and the inverse
``eta(theta)``. All operate elementwise on numpy arrays.
"""

import numpy as np
from scipy import special

# smallest positive double times 1e6: keeps parameters strictly inside their range
EPS = np.finfo(float).tiny * 1e6

# predictors beyond this magnitude only produce overflow
_ETA_MAX = 700.0


def _clip(eta):
    return np.clip(np.asarray(eta, dtype=float), -_ETA_MAX, _ETA_MAX)


class Link:
    name = "link"

    def theta(self, eta):
        raise NotImplementedError

    def dtheta(self, eta):
        raise NotImplementedError

    def eta(self, theta):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class Identity(Link):
    name = "identity"

    def theta(self, eta):
        return np.asarray(eta, dtype=float) + 0.0

    def dtheta(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def eta(self, theta):
        return np.asarray(theta, dtype=float) + 0.0


class NonZeroIdentity(Link):
    """Identity that moves exact (or sub-``EPS``) zeros to ``+EPS``."""

    name = "identity_nonzero"

    def theta(self, eta):
        eta = np.asarray(eta, dtype=float)
        return np.where(np.abs(eta) < EPS, np.where(eta < 0, -EPS, EPS), eta)

    def dtheta(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def eta(self, theta):
        return np.asarray(theta, dtype=float) + 0.0


class LogShift(Link):
    """``theta = exp(eta) + lower + EPS``; ``lower=0`` gives the positive-parameter link."""

    name = "log_shifted"

    def __init__(self, lower=0.0):
        self.lower = float(lower)

    def theta(self, eta):
        return np.exp(_clip(eta)) + self.lower + EPS

    def dtheta(self, eta):
        return np.exp(_clip(eta))

    def eta(self, theta):
        return np.log(np.asarray(theta, dtype=float) - self.lower - EPS)

    def __repr__(self):
        return f"LogShift(lower={self.lower})"


class Logistic(Link):
    """Standard logistic cdf onto (0, 1)."""

    name = "logistic_cdf"
    _guard = 1e-12

    def theta(self, eta):
        return np.clip(special.expit(_clip(eta)), self._guard, 1.0 - self._guard)

    def dtheta(self, eta):
        p = special.expit(_clip(eta))
        return p * (1.0 - p)

    def eta(self, theta):
        return special.logit(np.asarray(theta, dtype=float))


class Tanh(Link):
    """``theta = tanh(eta)`` onto (-1, 1)."""

    name = "tanh"
    _guard = 1e-12

    def theta(self, eta):
        bound = 1.0 - self._guard
        return np.clip(np.tanh(_clip(eta)), -bound, bound)

    def dtheta(self, eta):
        e = np.exp(-2.0 * np.abs(_clip(eta)))
        return 4.0 * e / (1.0 + e) ** 2

    def eta(self, theta):
        return np.arctanh(np.asarray(theta, dtype=float))
