"""Bivariate copula additive models for location, scale and shape.

Two continuous responses are joined by a one-parameter copula; every margin
parameter and the copula parameter get their own penalized additive
predictor. Estimation is penalized maximum likelihood with automatic
smoothing parameter selection.
"""

from .copulas import (
    COPULA_TAGS,
    CopulaSpec,
    copula_cdf,
    copula_density,
    copula_derivs,
    copula_hfunc,
    copula_hinv,
    copula_logpdf,
    tau_to_theta,
    theta_link,
    theta_link_inv,
    theta_to_tau,
)
from .estimator import FitOptions, FitResult, fit, fit_margin
from .exceptions import ConfigError, CopulaGamlssError, DegenerateInputError, DomainError, StepFailure
from .inference import (
    conditional_prob,
    dependence_summary,
    information_criteria,
    interval,
    joint_prob,
    quantile_residuals,
    summary_text,
)
from .likelihood import CopulaModel, MarginModel, ModelSpec
from .margins import MARGIN_TAGS, get_margin
from .simulate import joe_ig_sm_design, run_sim_study, sample_copula_pair, simulate_dataset
from .smooth import Adjacency, Term

__all__ = [
    "COPULA_TAGS", "MARGIN_TAGS", "Adjacency", "ConfigError", "CopulaGamlssError", "CopulaModel",
    "CopulaSpec", "DegenerateInputError", "DomainError", "FitOptions", "FitResult", "MarginModel",
    "ModelSpec", "StepFailure", "Term", "conditional_prob", "copula_cdf", "copula_density",
    "copula_derivs", "copula_hfunc", "copula_hinv", "copula_logpdf", "dependence_summary", "fit",
    "fit_margin", "get_margin", "information_criteria", "interval", "joe_ig_sm_design", "joint_prob",
    "quantile_residuals", "run_sim_study", "sample_copula_pair", "simulate_dataset", "summary_text",
    "tau_to_theta", "theta_link", "theta_link_inv", "theta_to_tau",
]

__version__ = "0.1.0"
