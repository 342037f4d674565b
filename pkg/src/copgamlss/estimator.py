"""Penalized maximum likelihood with automatic smoothing parameter selection.

Estimation alternates two steps until the relative change in the
log-likelihood ``|l_new - l_old| / (0.1 + |l_new|)`` drops below ``tol``:

1. with the smoothing parameters fixed, maximize the penalized
   log-likelihood by a trust-region Newton method;
2. with the coefficients fixed, choose the smoothing parameters by minimizing
   the prediction-error criterion
   ``V(lambda) = ||z - A z||^2 - n_tilde + 2 tr(A)`` with
   ``I = -H``, ``z = sqrt(I) delta + sqrt(I)^{-1} g`` and
   ``A = sqrt(I) (I + S_lambda)^{-1} sqrt(I)``.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import copulas
from .exceptions import StepFailure
from .likelihood import CopulaModel, MarginModel

LOG_LAMBDA_BOUNDS = (np.log(1e-8), np.log(1e10))


@dataclass
class FitOptions:
    max_outer_iter: int = 100
    tol: float = 1e-7
    max_inner_iter: int = 200
    grad_tol: float = 1e-7
    radius_init: float = 1.0
    radius_max: float = 100.0
    shrink: float = 0.25
    grow: float = 2.0
    lambda_init: float = 1.0
    lambda_min: float = 1e-8
    lambda_max: float = 1e10
    max_lambda_iter: int = 30
    eig_floor: float = 1e-10
    margin_start: bool = True
    seed: int = 0


# ---------------------------------------------------------------------------
# trust region


def solve_subproblem(g, H, radius):
    """Maximize ``g'p + p'Hp/2`` subject to ``||p|| <= radius``.

    Exact solution through the eigendecomposition of ``B = -H``: the step is
    ``p(mu) = (B + mu I)^{-1} g`` with the smallest ``mu >= max(0, -lambda_min(B))``
    giving ``||p|| <= radius``; the hard case adds a component along the
    lowest eigenvector. Returns ``(p, on_boundary)``.
    """
    B = -0.5 * (H + H.T)
    lam, Q = np.linalg.eigh(B)
    a = Q.T @ g
    lmin = lam[0]
    scale = max(1.0, float(np.abs(lam).max()))
    if lmin > 1e-14 * scale:
        p = Q @ (a / lam)
        if np.linalg.norm(p) <= radius:
            return p, False

    def norm_p(mu):
        return np.linalg.norm(a / (lam + mu))

    mu_lo = max(0.0, -lmin)
    lo = mu_lo + 1e-12 * scale
    if norm_p(lo) <= radius:
        # hard case: g is (numerically) orthogonal to the lowest eigenvectors
        low = lam <= lmin + 1e-12 * scale
        p_rest = np.where(low, 0.0, a / np.where(low, 1.0, lam + mu_lo))
        extra = np.sqrt(max(radius**2 - p_rest @ p_rest, 0.0))
        return Q @ p_rest + extra * Q[:, 0], True
    hi = mu_lo + np.linalg.norm(a) / radius + scale
    while norm_p(hi) > radius:
        hi *= 2.0
    mu = optimize.brentq(lambda m: 1.0 / norm_p(m) - 1.0 / radius, lo, hi, xtol=1e-14, rtol=1e-12)
    return Q @ (a / (lam + mu)), True


@dataclass
class InnerInfo:
    iterations: int = 0
    converged: bool = False
    step_failure: bool = False
    message: str = ""
    radius: float = 1.0


def trust_region_step(objective, delta, radius, options=None, state=None):
    """One accepted trust-region step on ``objective``.

    ``objective(delta, need_derivs=True)`` returns ``(value, gradient, hessian)``
    of the function being maximized (derivatives may be ``None`` when not
    requested), ``value = -inf`` signalling an invalid point. ``state`` is
    the cached ``(value, gradient, hessian)`` at ``delta``. Proposals that do
    not increase the objective are rejected and the radius shrinks until an
    ascent step is found; a radius below 1e-12 raises :class:`StepFailure`.
    Returns ``(delta_new, radius_new, state_new, predicted_gain)``.
    """
    o = options or FitOptions()
    f, g, H = state if state is not None else objective(delta)
    if not np.isfinite(f):
        raise StepFailure("objective is not finite at the current point")
    while True:
        p, boundary = solve_subproblem(g, H, radius)
        pred = g @ p + 0.5 * p @ H @ p
        cand = delta + p
        f_new, g_new, H_new = objective(cand, need_derivs=False)
        actual = f_new - f
        ratio = actual / pred if pred > 0 else (1.0 if actual > 0 else -1.0)
        if not np.isfinite(f_new) or ratio < 0.25:
            radius = o.shrink * min(radius, np.linalg.norm(p))
        elif ratio > 0.75 and boundary:
            radius = min(o.grow * radius, o.radius_max)
        if np.isfinite(f_new) and actual >= 0 and (actual > 0 or pred <= 0):
            if g_new is None:
                f_new, g_new, H_new = objective(cand)
            return cand, radius, (f_new, g_new, H_new), pred
        if radius < 1e-12:
            raise StepFailure(f"trust region radius underflow (last proposal changed the objective by {actual:.3g})")


class PenalizedObjective:
    """``l_p`` with gradient and Hessian for a model at fixed smoothing parameters."""

    def __init__(self, model, lambdas):
        self.model = model
        self.S = model.penalty_matrix(lambdas)
        self.evals = 0

    def __call__(self, delta, need_derivs=True):
        self.evals += 1
        m = self.model
        val = m.loglik(delta) - 0.5 * delta @ self.S @ delta
        if not need_derivs or not np.isfinite(val):
            return val, None, None
        g = m.score(delta) - self.S @ delta
        H = m.hessian(delta) - self.S
        return val, g, H


def maximize(objective, delta, options=None, radius=None):
    """Trust-region ascent to a stationary point. Returns ``(delta, state, InnerInfo)``."""
    o = options or FitOptions()
    info = InnerInfo(radius=o.radius_init if radius is None else radius)
    state = objective(np.asarray(delta, dtype=float))
    if not np.isfinite(state[0]):
        raise StepFailure("objective is not finite at the starting point")
    delta = np.asarray(delta, dtype=float)
    for it in range(1, o.max_inner_iter + 1):
        f, g, _ = state
        if np.max(np.abs(g)) <= o.grad_tol:
            info.converged = True
            info.message = "gradient below tolerance"
            break
        try:
            delta, info.radius, state, pred = trust_region_step(objective, delta, info.radius, o, state)
        except StepFailure as exc:
            info.step_failure = True
            info.message = str(exc)
            break
        info.iterations = it
        if abs(state[0] - f) <= 1e-13 * (0.1 + abs(state[0])) and pred <= 1e-13 * (0.1 + abs(state[0])):
            info.converged = True
            info.message = "objective change below tolerance"
            break
    else:
        info.message = "inner iteration limit reached"
    return delta, state, info


# ---------------------------------------------------------------------------
# smoothing parameters


def _sym_sqrt(I, floor):
    w, Q = np.linalg.eigh(0.5 * (I + I.T))
    w = np.maximum(w, floor * max(w.max(), 1e-300))
    r = np.sqrt(w)
    return (Q * r) @ Q.T, (Q / r) @ Q.T


def stabilize_information(I):
    """Shift an indefinite ``I`` by ``(|min eig| + 1e-7) * identity``; returns ``(I, shifted)``."""
    I = 0.5 * (I + I.T)
    lmin = np.linalg.eigvalsh(I)[0]
    if lmin < 0:
        return I + (abs(lmin) + 1e-7) * np.eye(len(I)), True
    return I, False


class SmoothingCriterion:
    """``V(rho)`` and its gradient in ``rho = log(lambda)`` at fixed ``delta``."""

    def __init__(self, I, g, delta, penalties, n_tilde, floor=1e-10):
        self.I = I
        self.penalties = penalties
        self.n_tilde = n_tilde
        self.rI, self.rIinv = _sym_sqrt(I, floor)
        self.z = self.rI @ delta + self.rIinv @ g
        self.rIz = self.rI @ self.z

    def _solve(self, rho):
        lam = np.exp(rho)
        M = self.I + sum(l * S for l, S in zip(lam, self.penalties))
        try:
            c = np.linalg.cholesky(M)
            inv = np.linalg.inv(c)
            return lam, inv.T @ inv
        except np.linalg.LinAlgError:
            return lam, np.linalg.pinv(M)

    def value_grad(self, rho):
        lam, Binv = self._solve(rho)
        a = Binv @ self.rIz
        Az = self.rI @ a
        r = self.z - Az
        BI = Binv @ self.I
        V = r @ r - self.n_tilde + 2.0 * np.trace(BI)
        b = Binv @ (self.rI @ r)
        grad = np.empty(len(lam))
        for k, (l, S) in enumerate(zip(lam, self.penalties)):
            grad[k] = 2.0 * l * (b @ S @ a) - 2.0 * l * np.sum((Binv @ S) * BI.T)
        return V, grad

    def value(self, rho):
        return self.value_grad(rho)[0]


def select_smoothing(model, delta, lambdas, options=None, H=None, g=None):
    """Minimize the prediction-error criterion over ``log(lambda)``.

    Returns ``(lambdas_new, info)`` where ``info`` records whether the
    information matrix had to be stabilized and which optimizer was used.
    """
    o = options or FitOptions()
    lambdas = np.asarray(lambdas, dtype=float)
    info = {"stabilized": False, "method": "none", "V": None}
    if model.n_lambda == 0:
        return lambdas, info
    if H is None:
        H = model.hessian(delta)
    if g is None:
        g = model.score(delta)
    I, shifted = stabilize_information(-H)
    info["stabilized"] = shifted
    crit = SmoothingCriterion(I, g, delta, model.penalty_blocks(), model.n_eq * model.n, o.eig_floor)
    lo, hi = np.log(o.lambda_min), np.log(o.lambda_max)
    rho0 = np.clip(np.log(np.maximum(lambdas, o.lambda_min)), lo, hi)
    V0 = crit.value(rho0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize.minimize(
            crit.value_grad, rho0, jac=True, method="L-BFGS-B",
            bounds=[(lo, hi)] * len(rho0), options={"maxiter": o.max_lambda_iter},
        )
    rho, V = res.x, res.fun
    info["method"] = "L-BFGS-B"
    if not np.isfinite(V) or V > V0:
        rho, V = rho0.copy(), V0
        for k in range(len(rho)):
            def along(t, k=k):
                r = rho.copy()
                r[k] = t
                return crit.value(r)
            sol = optimize.minimize_scalar(along, bounds=(lo, hi), method="bounded", options={"xatol": 1e-3})
            if sol.fun < V:
                rho[k], V = sol.x, sol.fun
        info["method"] = "golden-section"
    info["V"] = float(V)
    return np.exp(rho), info


def edf(model, H, lambdas):
    """Effective degrees of freedom ``tr((I + S)^{-1} I)``: total, per equation and per penalized term."""
    I = -0.5 * (H + H.T)
    S = model.penalty_matrix(lambdas)
    F = np.linalg.solve(I + S, I) if model.n_coef else np.zeros((0, 0))
    d = np.diag(F)
    per_eq = {nm: float(d[s].sum()) for nm, s in zip(model.names, model.coef_slices)}
    per_term = {}
    for label, (_, s, _) in zip(model.lambda_labels(), model.penalty_slots):
        per_term[label] = float(d[s].sum())
    return float(d.sum()), per_eq, per_term


# ---------------------------------------------------------------------------
# fitting


@dataclass
class FitResult:
    model: object
    delta: np.ndarray
    lambdas: np.ndarray
    loglik: float
    H: np.ndarray
    H_p: np.ndarray
    edf: float
    edf_eq: dict
    edf_terms: dict
    converged: bool
    outer_iter: int
    grad_norm: float
    hessian_pd: bool
    clamp_count: int
    messages: list = field(default_factory=list)
    history: list = field(default_factory=list)
    start_flags: list = field(default_factory=list)

    @property
    def n(self):
        return self.model.n

    @property
    def names(self):
        return self.model.names

    def coef(self, name=None):
        if name is None:
            return self.delta.copy()
        return self.delta[self.model.coef_slices[self.model.names.index(name)]].copy()

    def etas(self, delta=None):
        return self.model.etas(self.delta if delta is None else delta)

    def fitted(self, delta=None):
        """Per-observation parameters (and ``tau`` for copula models)."""
        etas = self.etas(delta)
        if isinstance(self.model, CopulaModel):
            out = self.model.parameters(etas)
            out["tau"] = copulas.theta_to_tau(self.model.copula, out["theta"])
            return out
        return dict(zip(self.model.names, self.model.margin.params_from_eta(etas)))

    def aic(self):
        return -2.0 * self.loglik + 2.0 * self.edf

    def bic(self):
        return -2.0 * self.loglik + np.log(self.n) * self.edf

    def report(self):
        return diagnostics(self)


def _run(model, delta0, lambdas0, options, start_flags=()):
    o = options
    lambdas = np.asarray(lambdas0, dtype=float).copy()
    delta = np.asarray(delta0, dtype=float).copy()
    messages, history = [], []
    ll_old = None
    converged = False
    radius = o.radius_init
    outer = 0
    for outer in range(1, o.max_outer_iter + 1):
        obj = PenalizedObjective(model, lambdas)
        delta, state, inner = maximize(obj, delta, o, radius)
        radius = max(inner.radius, o.radius_init)
        ll = model.loglik(delta)
        history.append({"outer": outer, "loglik": ll, "inner_iter": inner.iterations, "lambdas": lambdas.tolist()})
        if inner.step_failure:
            gmax = np.max(np.abs(state[1]))
            if gmax > 1e-3:
                messages.append(f"step failure: {inner.message}")
                break
            if gmax > 1e-5:
                messages.append(f"outer {outer}: trust region stalled with max |gradient| {gmax:.2e}")
        if model.n_lambda == 0:
            converged = inner.converged or inner.step_failure
            break
        if ll_old is not None and abs(ll - ll_old) / (0.1 + abs(ll)) < o.tol:
            converged = True
            break
        H = state[2] + model.penalty_matrix(lambdas)
        lambdas, sinfo = select_smoothing(model, delta, lambdas, o, H=H, g=state[1] + model.penalty_matrix(lambdas) @ delta)
        if sinfo["stabilized"]:
            messages.append(f"outer {outer}: information matrix indefinite, ridge-stabilized for smoothing selection")
        ll_old = ll
    else:
        messages.append("outer iteration limit reached")
    S = model.penalty_matrix(lambdas)
    H = model.hessian(delta)
    Hp = H - S
    gp = model.score(delta) - S @ delta
    hessian_pd = bool(np.linalg.eigvalsh(-0.5 * (Hp + Hp.T))[0] > 0)
    if not hessian_pd:
        messages.append("penalized Hessian is not negative definite at the estimate")
    total, per_eq, per_term = edf(model, H, lambdas)
    ll = model.loglik(delta)
    return FitResult(
        model=model, delta=delta, lambdas=lambdas, loglik=ll, H=H, H_p=Hp,
        edf=total, edf_eq=per_eq, edf_terms=per_term, converged=converged,
        outer_iter=outer, grad_norm=float(np.max(np.abs(gp))) if len(gp) else 0.0,
        hessian_pd=hessian_pd, clamp_count=model.clamp_count, messages=messages,
        history=history, start_flags=list(start_flags),
    )


def fit_margin(margin, y, equations=None, data=None, adjacency=None, options=None):
    """Univariate additive fit of one margin, started at method-of-moments intercepts."""
    o = options or FitOptions()
    model = MarginModel(margin, y, equations, data, adjacency)
    lam0 = np.full(model.n_lambda, o.lambda_init)
    return _run(model, model.start_delta(), lam0, o)


def empirical_tau(y1, y2):
    return float(stats.kendalltau(y1, y2).statistic)


def starting_values(model, data=None, adjacency=None, options=None):
    """Initial ``(delta, lambdas, flags)`` for a copula model.

    Each margin is first fitted on its own with the same machinery; the
    copula intercept comes from inverting the empirical Kendall's tau.
    A failed margin fit falls back to method-of-moments intercepts.
    """
    o = options or FitOptions()
    spec = model.spec
    delta = np.zeros(model.n_coef)
    lambdas = np.full(model.n_lambda, o.lambda_init)
    flags = []
    lam_pos = {}
    k = 0
    for e, _, _ in model.penalty_slots:
        lam_pos.setdefault(e, []).append(k)
        k += 1
    for m, y, idx, suffix in ((model.m1, model.y1, model.idx1, "1"), (model.m2, model.y2, model.idx2, "2")):
        eqs = {nm: spec.terms(nm + suffix) for nm in ("mu", "sigma", "nu")}
        mm = MarginModel(m, y, eqs, data, adjacency)
        d0 = mm.start_delta()
        dm, lm = d0, np.full(mm.n_lambda, o.lambda_init)
        if o.margin_start:
            try:
                fr = _run(mm, d0, lm, o)
                if np.isfinite(fr.loglik) and not any(s.startswith("step failure") for s in fr.messages):
                    dm, lm = fr.delta, fr.lambdas
                else:
                    flags.append(f"margin {suffix} fit failed; using moment-based intercepts")
            except Exception as exc:  # noqa: BLE001 - any failure falls back
                flags.append(f"margin {suffix} fit failed ({exc}); using moment-based intercepts")
        j = 0
        for local, e in enumerate(idx):
            delta[model.coef_slices[e]] = dm[mm.coef_slices[local]]
            for pos in lam_pos.get(e, []):
                lambdas[pos] = lm[j]
                j += 1
    tau = empirical_tau(model.y1, model.y2)
    if not np.isfinite(tau):
        tau = 0.0
    theta0 = copulas.tau_to_theta(model.copula, tau)
    eta0 = float(copulas.theta_link_inv(model.copula, theta0))
    delta[model.coef_slices[model.idx_theta].start] = eta0
    return delta, lambdas, flags


def fit(spec, y1, y2, data=None, adjacency=None, options=None, start=None):
    """Fit a copula additive model; returns :class:`FitResult`."""
    o = options or FitOptions()
    model = CopulaModel(spec, y1, y2, data, adjacency)
    if start is None:
        delta0, lam0, flags = starting_values(model, data, adjacency, o)
    else:
        delta0, lam0 = start
        flags = []
    return _run(model, delta0, lam0, o, flags)


def diagnostics(result):
    """Machine-readable convergence report as a JSON string."""
    H = result.H_p
    eig = np.linalg.eigvalsh(-0.5 * (H + H.T)) if len(H) else np.zeros(0)
    rep = {
        "converged": bool(result.converged),
        "outer_iterations": int(result.outer_iter),
        "loglik": float(result.loglik),
        "max_abs_penalized_gradient": float(result.grad_norm),
        "penalized_hessian_negative_definite": bool(result.hessian_pd),
        "information_eigen_min": float(eig[0]) if len(eig) else None,
        "information_eigen_max": float(eig[-1]) if len(eig) else None,
        "edf_total": float(result.edf),
        "edf_equations": result.edf_eq,
        "edf_terms": result.edf_terms,
        "lambdas": dict(zip(result.model.lambda_labels(), map(float, result.lambdas))),
        "clamped_cdf_values": int(result.clamp_count),
        "messages": list(result.messages) + list(result.start_flags),
    }
    return json.dumps(rep, indent=2, sort_keys=True)
