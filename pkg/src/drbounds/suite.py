"""Build a family from a center and run every invariant check on it.

Shared by the ``verify`` and ``adversary`` subcommands and by the acceptance
tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import (
    build_partition,
    choose_u,
    closed_form_residual,
    construct,
    chi_square_premises,
    orient_weight,
    bump_identities,
    radius_bounds,
    rademacher,
    select_params,
    truncate_weight,
    verify_family_membership,
    verify_mixture_equality,
    verify_separation,
)
from .adversary.construction import PerturbedFamily
from .adversary.verify import family_quadrature
from .functions import Evaluable
from .model import NuisancePair
from .nuisance_oracle import ErrorBudget
from .quadrature import adapted, order_for_degree
from .rng import stream

MIXTURE_TOL = 1e-10
BUMP_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    suite: str
    case: str
    value: float
    bound: float
    passed: bool
    detail: str = ""


def weight_moments(center: NuisancePair, w: Evaluable) -> dict[str, float]:
    wo, _ = orient_weight(w)
    wh = truncate_weight(wo)
    q = adapted(center.K, wo, wh, *center.functions, order=order_for_degree(
        None if any(f.degree != 0 for f in (wo, *center.functions)) else 0))
    wv, W = wo._eval(q.nodes), wh._eval(q.nodes)
    g1, g0 = center.g1._eval(q.nodes), center.g0._eval(q.nodes)
    return {
        "w_hat_norm": float(np.sqrt(q.weights @ W**2)),
        "w_sup": float(np.max(np.abs(wv))),
        "w_norm": float(np.sqrt(q.weights @ wv**2)),
        "Case1": float(q.weights @ (wv * W**2 / g1)),
        "Case2": float(q.weights @ (g1 * wv * W**2)),
        "Case3": float(q.weights @ (wv * W**2 / g0)),
        "Case4": float(q.weights @ (g0 * wv * W**2)),
    }


def build_family(center: NuisancePair, w: Evaluable, case: str, budget: ErrorBudget, levels: int,
                 strict: bool = False, partition=None, n: int | None = None) -> PerturbedFamily:
    """Select parameters and construct the family for ``case`` on ``M = 2**levels`` cells."""
    if case == "ATT":
        aux = choose_u(center, 2**levels)
        params = select_params("ATT", budget, 1.0, center.c, c_u=aux.c_u, C_u=aux.C_u, strict=strict)
        return construct("ATT", center, aux.partition, params, aux=aux)
    mom = weight_moments(center, w)
    if case == "OracleShift":
        params = select_params(case, budget, mom["w_norm"], center.c, n=n)
        return construct(case, center, None, params, w)
    part = build_partition(w, levels) if partition is None else partition
    params = select_params(case, budget, mom["w_hat_norm"], center.c, w_sup=mom["w_sup"],
                           moment=mom[case], strict=strict)
    return construct(case, center, part, params, w)


def sample_lambdas(M: int, count: int, seed: int) -> list[np.ndarray]:
    rng = stream(seed, M, count)
    return [rademacher(M, rng) for _ in range(count)]


def check_family(family: PerturbedFamily, budget: ErrorBudget, lams) -> list[CheckResult]:
    case = family.case
    q = family_quadrature(family)
    out = []
    mix = verify_mixture_equality(family, q.nodes)
    out.append(CheckResult("mixture_equality", case, mix, MIXTURE_TOL, mix <= MIXTURE_TOL))
    res = closed_form_residual(family, q.nodes)
    out.append(CheckResult("closed_form", case, res, MIXTURE_TOL, res <= MIXTURE_TOL))
    reports = verify_family_membership(family, budget, lams, q)
    worst = max(max(r.dist_m_sq / max(budget.f, 1e-300),
                    r.dist_g1_sq / max(budget.e_prime, 1e-300),
                    r.dist_g0_sq / max(budget.e, 1e-300)) for r in reports)
    out.append(CheckResult("membership", case, worst, 1.0, all(r.member for r in reports),
                           "max distance / budget over lambdas"))
    radii = radius_bounds(family, lams, q)
    ratio = max(r.distance / r.bound if r.bound > 0 else (0.0 if r.distance == 0 else np.inf) for r in radii)
    out.append(CheckResult("radius", case, ratio, 1.0, all(r.ok for r in radii),
                           "max distance / radius bound, r in {2, inf}"))
    sep = verify_separation(family, lams, q)
    out.append(CheckResult("separation", case, sep.min_margin, -1e-12, sep.ok,
                           f"required gap {sep.required:.6g}"))
    chi = chi_square_premises(family, quadrature=q)
    out.append(CheckResult("chi_square_b", case, chi.b, chi.bound, chi.b <= chi.bound))
    pj_dev = max(abs(chi.max_pj - 2 / chi.M), abs(chi.min_pj - 2 / chi.M))
    out.append(CheckResult("cell_mass_pj", case, pj_dev, 1e-12, pj_dev <= 1e-12, f"2/M = {2 / chi.M:.6g}"))
    return out


def check_bump_identities(center: NuisancePair, w: Evaluable, partition, lams, points: int, seed: int) -> list[CheckResult]:
    wo, _ = orient_weight(w)
    wh = truncate_weight(wo)
    x = stream(seed, 0xD1).random((points, center.K))
    rep = bump_identities(partition, wo, wh, x, lams)
    return [
        CheckResult("bump_mean_over_signs", "all", rep.mean_over_signs, 0.0, rep.mean_over_signs == 0.0),
        CheckResult("bump_weighted_mean", "all", rep.weighted_mean, BUMP_TOL, rep.weighted_mean <= BUMP_TOL),
        CheckResult("bump_square", "all", rep.square_dev, 0.0, rep.square_dev == 0.0),
    ]
