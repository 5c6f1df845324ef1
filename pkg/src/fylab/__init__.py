"""Fenchel-Young losses, large-stepsize gradient descent on separable data,
and numerical checks of the associated convergence bounds."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    MarginCertificate,
    NormWarning,
    SeparableDistribution,
    margin_certificate,
    pilot_dataset,
    synth_separable,
)
from .descent import Mode, RunConfig, Trace, gd_run, phase_detect, risk, risk_grad, run, sgd_run, sharpness
from .errors import (
    AnalysisError,
    BracketError,
    ConfigurationError,
    DivergenceError,
    DomainError,
    FyLabError,
    NotSeparableError,
    UnsupportedOperation,
)
from .fenchel import Engine, FyLoss, LossAnalysis, analyze, iteration_bound, make_loss
from .potentials import Kind, Potential, phi, phi_grad, phi_hess
