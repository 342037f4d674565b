"""Post-fit inference: information criteria, residuals, intervals and probabilities.

Uncertainty follows the Bayesian large-sample approximation
``delta ~ N(delta_hat, -H_p^{-1})``: intervals for any function of the
coefficients are empirical quantiles over simulated coefficient vectors.
"""

import csv

import numpy as np
from scipy import special, stats

from . import copulas
from .copulas import UV_EPS
from .exceptions import DomainError
from .likelihood import CopulaModel


def information_criteria(result):
    """``(AIC, BIC)`` with the effective degrees of freedom as model size."""
    return result.aic(), result.bic()


def independence_criteria(fit1, fit2):
    """AIC and BIC of the independence model from two separate margin fits."""
    return fit1.aic() + fit2.aic(), fit1.bic() + fit2.bic()


# ---------------------------------------------------------------------------
# covariance and posterior simulation


def posterior_covariance(result, floor=1e-10):
    """``-H_p^{-1}`` via an eigendecomposition with floored eigenvalues.

    Returns ``(V, floored)``; ``floored`` tells whether any eigenvalue of
    ``-H_p`` had to be raised.
    """
    I = -0.5 * (result.H_p + result.H_p.T)
    w, Q = np.linalg.eigh(I)
    cut = floor * max(w.max(), 1e-300)
    floored = bool(np.any(w < cut))
    w = np.maximum(w, cut)
    return (Q / w) @ Q.T, floored


def posterior_draws(result, n_sim=1000, seed=0):
    """``n_sim x P`` coefficient draws from the Gaussian approximation."""
    V, _ = posterior_covariance(result)
    w, Q = np.linalg.eigh(V)
    root = Q * np.sqrt(np.maximum(w, 0.0))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_sim, len(result.delta)))
    return result.delta + z @ root.T


def standard_errors(result):
    V, _ = posterior_covariance(result)
    return np.sqrt(np.diag(V))


def wald_interval(result, index, level=0.95):
    """``delta_j +/- z * se_j`` for a single coefficient."""
    se = standard_errors(result)[index]
    z = special.ndtri(0.5 + level / 2.0)
    return result.delta[index] - z * se, result.delta[index] + z * se


def interval(result, target, level=0.95, n_sim=1000, seed=0):
    """Pointwise interval of ``target(delta)`` by posterior simulation.

    ``target`` maps a coefficient vector to a scalar or an array (one value per
    observation, say). Returns ``(estimate, lo, hi)``.
    """
    draws = posterior_draws(result, n_sim, seed)
    vals = np.array([np.asarray(target(d), dtype=float) for d in draws])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(vals, [alpha, 1.0 - alpha], axis=0)
    return np.asarray(target(result.delta), dtype=float), lo, hi


# ---------------------------------------------------------------------------
# residuals


def quantile_residuals(result, y1=None, y2=None, data=None):
    """``Phi^{-1}(F_m(y_m))`` per margin.

    By default the fitted observations are used; pass responses and
    covariates to evaluate the fitted model on other rows. Returns
    ``(r1, r2, n_clamped)`` (``r2`` is None for a single-margin fit).
    """
    model = result.model
    clamped = 0

    def resid(m, y, p):
        nonlocal clamped
        y = m.check_support(np.asarray(y, dtype=float))
        F = m.cdf(y, *p, check=False)
        bad = (F < UV_EPS) | (F > 1.0 - UV_EPS)
        clamped += int(bad.sum())
        return special.ndtri(np.clip(F, UV_EPS, 1.0 - UV_EPS))

    if isinstance(model, CopulaModel):
        if y1 is None:
            y1, y2 = model.y1, model.y2
        _, p1, p2, _ = _margin_params(result, data=data)
        return resid(model.m1, y1, p1), resid(model.m2, y2, p2), clamped
    par = result.fitted()
    p = [par[nm] for nm in model.names]
    return resid(model.margin, model.y if y1 is None else y1, p), None, clamped


def ks_normal(r):
    """Kolmogorov-Smirnov test of residuals against N(0, 1): ``(statistic, p-value)``."""
    res = stats.kstest(r, "norm")
    return float(res.statistic), float(res.pvalue)


def qq_pairs(r):
    """Sorted residuals against standard normal plotting positions."""
    r = np.sort(np.asarray(r, dtype=float))
    n = len(r)
    theo = special.ndtri((np.arange(1, n + 1) - 0.5) / n)
    return theo, r


# ---------------------------------------------------------------------------
# probabilities


def _margin_params(result, delta=None, data=None):
    """Fitted margin parameters and theta, optionally on new covariates."""
    model = result.model
    if not isinstance(model, CopulaModel):
        raise DomainError("probabilities need a copula model")
    d = result.delta if delta is None else delta
    if data is None:
        etas = model.etas(d)
    else:
        mats = model.predictor_matrices(data)
        etas = [X @ b for X, b in zip(mats, model.split(d))]
    par = model.parameters(etas)
    p1 = [par[model.names[i]] for i in model.idx1]
    p2 = [par[model.names[i]] for i in model.idx2]
    return model, p1, p2, par["theta"]


def _threshold_cdfs(model, y1_star, y2_star, p1, p2):
    n = len(p1[0])
    y1 = np.broadcast_to(np.asarray(y1_star, dtype=float), (n,))
    y2 = np.broadcast_to(np.asarray(y2_star, dtype=float), (n,))
    model.m1.check_support(y1)
    model.m2.check_support(y2)
    return model.m1.cdf(y1, *p1, check=False), model.m2.cdf(y2, *p2, check=False)


def joint_prob(result, y1_star, y2_star, mode="copula", delta=None, data=None):
    """Lower-orthant probability ``P(Y1 <= y1*, Y2 <= y2*)`` per observation.

    ``mode="copula"`` uses ``C(F1, F2; theta_i)``; ``mode="independence"`` uses
    ``F1 * F2`` with the same fitted margins.
    """
    if mode not in ("copula", "independence"):
        raise DomainError(f"mode must be 'copula' or 'independence', got {mode!r}")
    model, p1, p2, theta = _margin_params(result, delta, data)
    u, v = _threshold_cdfs(model, y1_star, y2_star, p1, p2)
    if mode == "independence":
        return u * v
    return copulas.copula_cdf(model.copula, u, v, theta)


def conditional_prob(result, y1_star, y2_star, given=2, delta=None, data=None):
    """``P(Y1 <= y1* | Y2 <= y2*)`` (``given=2``) or ``P(Y2 <= y2* | Y1 <= y1*)`` (``given=1``).

    Entries whose conditioning probability is below 1e-12 are NaN.
    """
    if given not in (1, 2):
        raise DomainError("given must be 1 or 2")
    model, p1, p2, theta = _margin_params(result, delta, data)
    u, v = _threshold_cdfs(model, y1_star, y2_star, p1, p2)
    C = copulas.copula_cdf(model.copula, u, v, theta)
    denom = v if given == 2 else u
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom < 1e-12, np.nan, C / denom)


def dependence_summary(result):
    """Per-observation ``theta`` and Kendall's ``tau`` with their means."""
    par = result.fitted()
    theta, tau = par["theta"], par["tau"]
    return {"theta": theta, "tau": tau, "theta_mean": float(np.mean(theta)), "tau_mean": float(np.mean(tau))}


# ---------------------------------------------------------------------------
# output


def write_csv(path, value, lo=None, hi=None, header=("row", "value", "lo", "hi")):
    """Per-row values (and optional interval bounds) with a header line."""
    value = np.asarray(value, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if lo is None:
            w.writerow(header[:2])
            for i, x in enumerate(value):
                w.writerow([i, repr(float(x))])
        else:
            w.writerow(header)
            for i, (x, a, b) in enumerate(zip(value, lo, hi)):
                w.writerow([i, repr(float(x)), repr(float(a)), repr(float(b))])


def summary_text(result):
    """Aligned coefficient table with standard errors, smoothing terms and fit statistics."""
    model = result.model
    se = standard_errors(result)
    lines = []
    if isinstance(model, CopulaModel):
        lines.append(f"copula {model.copula.tag}   margins {model.m1.code}, {model.m2.code}   n = {model.n}")
    else:
        lines.append(f"margin {model.margin.code}   n = {model.n}")
    for e, (nm, d, cs) in enumerate(zip(model.names, model.designs, model.coef_slices)):
        lines.append("")
        lines.append(f"equation {nm}")
        lines.append(f"  {'term':<24}{'estimate':>14}{'std.err':>12}{'z':>10}")
        beta, sev = result.delta[cs], se[cs]
        rows = [("(intercept)", 0)]
        for b, s in zip(d.blocks, d.slices):
            if b.kind != "linear":
                continue
            names = [b.label] if b.state["levels"] is None else [f"{b.label}{lev}" for lev in b.state["levels"][1:]]
            rows.extend((nmk, s.start + j) for j, nmk in enumerate(names))
        for label, j in rows:
            z = beta[j] / sev[j] if sev[j] > 0 else np.nan
            lines.append(f"  {label:<24}{beta[j]:>14.5f}{sev[j]:>12.5f}{z:>10.2f}")
        smooth = [b for b in d.blocks if b.penalized]
        if smooth:
            lines.append(f"  {'smooth':<24}{'edf':>14}{'lambda':>12}")
            for b in smooth:
                key = f"{nm}:{b.label}"
                k = model.lambda_labels().index(key)
                lines.append(f"  {b.label:<24}{result.edf_terms[key]:>14.3f}{result.lambdas[k]:>12.4g}")
    lines.append("")
    aic, bic = information_criteria(result)
    lines.append(f"log-likelihood {result.loglik:.4f}   edf {result.edf:.3f}   AIC {aic:.4f}   BIC {bic:.4f}")
    if isinstance(model, CopulaModel):
        dep = dependence_summary(result)
        lines.append(f"mean theta {dep['theta_mean']:.4f}   mean tau {dep['tau_mean']:.4f}")
    lines.append(f"converged {result.converged}   outer iterations {result.outer_iter}   max |gradient| {result.grad_norm:.3g}")
    return "\n".join(lines) + "\n"
