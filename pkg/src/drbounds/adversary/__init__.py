"""Lower-bound constructions: partitions, bump functions, perturbed families and their checks."""

from .choose_u import AttAuxiliary, choose_u
from .construction import (
    CASES,
    PerturbationParams,
    PerturbedFamily,
    closed_form_deviation,
    construct,
    select_params,
)
from .partition import (
    BumpFunction,
    Partition,
    RectCollection,
    build_partition,
    bump,
    orient_weight,
    rademacher,
    split_half,
    truncate_weight,
    uniform_partition,
)
from .verify import (
    ChiSquareReport,
    BumpIdentityReport,
    RadiusCheck,
    SeparationReport,
    closed_form_residual,
    family_quadrature,
    chi_square_premises,
    bump_identities,
    radius_bounds,
    separation_bound,
    verify_family_membership,
    verify_mixture_equality,
    verify_separation,
)
