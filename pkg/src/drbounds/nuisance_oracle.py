"""Black-box nuisance estimates at prescribed L2 error, and the constraint set.

Estimates are produced from a true pair by adding ``amplitude * direction(x)``
to each nuisance, with the amplitude solved so that the squared L2 error equals
the budget exactly.  ``verify_membership`` checks the reverse relation: that a
candidate pair lies within the budgets of a center pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetInfeasible, InvalidArgument
from .functions import Evaluable, GridFunction, lift
from .model import NuisancePair, RANGE_TOL
from .quadrature import order_for_degree, probe_points, resolve

DIRECTION_CELLS = {1: 64, 2: 8, 3: 4}
MEMBER_RTOL = 1e-9


@dataclass(frozen=True)
class ErrorBudget:
    """Squared L2 budgets: ``e`` for g(0,.), ``e_prime`` for g(1,.), ``f`` for m."""

    e: float = 0.0
    e_prime: float = 0.0
    f: float = 0.0

    def __post_init__(self):
        for name in ("e", "e_prime", "f"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidArgument(f"budget {name} must be finite and >= 0, got {v}")

    @classmethod
    def uniform(cls, value: float) -> "ErrorBudget":
        return cls(value, value, value)


@dataclass(frozen=True)
class ValidityReport:
    dist_g0_sq: float
    dist_g1_sq: float
    dist_m_sq: float
    range_ok: bool
    member: bool
    norm: float = 2.0


def direction_pattern(kind: str = "checkerboard", K: int = 1, seed: int = 0) -> Evaluable:
    """Sign patterns used as estimation-error geometry."""
    cells = DIRECTION_CELLS[K]
    if kind == "checkerboard":
        idx = np.indices((cells,) * K).sum(axis=0)
        return GridFunction(np.where(idx % 2 == 0, 1.0, -1.0))
    if kind == "constant":
        return lift(1.0, K)
    if kind == "random":
        rng = np.random.default_rng(seed)
        return GridFunction(rng.choice([-1.0, 1.0], size=(cells,) * K))
    raise InvalidArgument(f"unknown direction pattern {kind!r}")


def lp_distance(f: Evaluable, g: Evaluable, r: float = 2.0, quadrature=None) -> float:
    """``||f - g||_r`` under the uniform law; ``r = inf`` is the grid supremum."""
    if not (r >= 1 or np.isinf(r)):
        raise InvalidArgument(f"norm order must be >= 1, got {r}")
    diff = f - g
    if np.isinf(r):
        pts = probe_points(f.K, f, g) if quadrature is None or isinstance(quadrature, int) \
            else quadrature.nodes
        return float(np.max(np.abs(diff._eval(pts))))
    deg = diff.degree
    order = order_for_degree(None if deg is None or r != int(r) else deg * int(r))
    q = resolve(quadrature, f.K, f, g, order=order)
    return q.lp_norm(diff, r)


def _norm2(f: Evaluable, quadrature=None) -> float:
    return lp_distance(f, lift(0.0, f.K), 2.0, quadrature)


def synthesize_estimates(truth: NuisancePair, budget: ErrorBudget, direction: Evaluable | str = "checkerboard",
                         seed: int = 0, *, bounds: tuple[float, float] | None = None,
                         quadrature=None) -> NuisancePair:
    """Estimates ``(m_hat, g_hat)`` whose squared L2 errors equal ``budget``.

    ``bounds`` defaults to ``[c, 1-c]``; pass ``(0, 1)`` to allow any valid
    probability (used when generating truths around a fixed center).
    """
    K = truth.K
    if isinstance(direction, str):
        direction = direction_pattern(direction, K, seed)
    scale = _norm2(direction, quadrature)
    if scale <= 0:
        raise InvalidArgument("direction has zero L2 norm")
    lo, hi = bounds if bounds is not None else (truth.c, 1.0 - truth.c)
    pts = probe_points(K, *truth.functions, direction)
    out = {}
    for name, f, b in (("m", truth.m, budget.f), ("g1", truth.g1, budget.e_prime),
                       ("g0", truth.g0, budget.e)):
        if b == 0:
            out[name] = f
            continue
        est = f + (np.sqrt(b) / scale) * direction
        v = est._eval(pts)
        if v.min() < lo - RANGE_TOL or v.max() > hi + RANGE_TOL:
            raise BudgetInfeasible(
                name, f"amplitude {np.sqrt(b) / scale:.4g} leaves [{lo:.4g}, {hi:.4g}] "
                      f"(range {v.min():.4g}..{v.max():.4g})")
        out[name] = est
    return NuisancePair(out["m"], out["g1"], out["g0"], c=truth.c, tag=truth.tag,
                        bounded=truth.bounded)


def verify_membership(candidate: NuisancePair, center: NuisancePair, budget: ErrorBudget,
                      quadrature=None, *, linf: bool = False) -> ValidityReport:
    """Distances of ``candidate`` from ``center`` against the budgets, plus range check.

    With ``linf`` the squared sup-norm distances are compared to the budgets,
    which is the stronger-norm variant of the constraint set.
    """
    r = np.inf if linf else 2.0
    dm = lp_distance(candidate.m, center.m, r, quadrature) ** 2
    d1 = lp_distance(candidate.g1, center.g1, r, quadrature) ** 2
    d0 = lp_distance(candidate.g0, center.g0, r, quadrature) ** 2
    pts = probe_points(candidate.K, *candidate.functions, *center.functions)
    range_ok = True
    for f in candidate.functions:
        v = f._eval(pts)
        range_ok &= bool(np.all((v >= -RANGE_TOL) & (v <= 1 + RANGE_TOL)))

    def within(dist, b):
        return dist <= b * (1 + MEMBER_RTOL) + 1e-15

    member = within(d0, budget.e) and within(d1, budget.e_prime) and within(dm, budget.f) and range_ok
    return ValidityReport(d0, d1, dm, range_ok, bool(member), norm=r)
