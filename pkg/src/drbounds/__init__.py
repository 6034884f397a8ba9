"""Doubly robust treatment-effect estimators and minimax lower-bound constructions."""

from .errors import *  # noqa: F401,F403
from .functions import (
    Analytic,
    Constant,
    Evaluable,
    GridFunction,
    PiecewiseLinear,
    Pointwise,
)
from .model import Dataset, FunctionalSpec, NuisancePair, density, sample_dataset, true_att, true_wate
from .nuisance_oracle import ErrorBudget, ValidityReport, lp_distance, synthesize_estimates, verify_membership
from .estimators import EstimateResult, dr_att, dr_wate, plug_in_att, plug_in_wate
from .quadrature import Quadrature

__version__ = "0.1.0"
