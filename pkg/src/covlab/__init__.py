"""Pointwise numerical verification of covariance-field parametrizations.

The package evaluates Lagrangian densities, pullback metrics, conjugate
momenta, stress-energy-momentum densities and Euler-Lagrange residuals of
parametrized metric field theories at sampled points, and certifies the
identities relating them.  See the ``covlab`` command-line tool for the
scenario-driven interface.
"""

__version__ = "0.1.0"

from .checks import CheckResult, RunContext, list_checks, run_check, run_checks
from .parametrize import (
    CovarianceField,
    FiberMetric,
    ParametrizedSystem,
    parametrized_lagrangian,
)
from .scenarios import OnShellFamily, builtin_scenarios, pull_back_solution
from .theories import FieldTheory, make_theory

__all__ = [
    "__version__",
    "CheckResult",
    "CovarianceField",
    "FieldTheory",
    "FiberMetric",
    "OnShellFamily",
    "ParametrizedSystem",
    "RunContext",
    "builtin_scenarios",
    "list_checks",
    "make_theory",
    "parametrized_lagrangian",
    "pull_back_solution",
    "run_check",
    "run_checks",
]
