"""Perturbed nuisance families around a center pair ``(m_hat, g_hat)``.

Every family maps Rademacher signs ``lambda`` to a pair ``(m_lambda, g_lambda)``
through a pointwise formula in the bump value ``D = Delta(lambda, x)``.
Because each point's value depends on a single sign, the formulas are written
once as functions of ``D`` and evaluated either at a concrete ``lambda`` or at
``D = +1`` and ``D = -1`` for mixture checks.

Each occurrence of ``alpha``/``beta`` in a formula reads its own entry of
``coefficients`` so that a single occurrence can be perturbed in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from ..errors import CaseMismatch, ConstructionInvalid, InvalidArgument, NTooSmall
from ..functions import Evaluable, as_points, lift, merge_breakpoints
from ..model import NuisancePair, RANGE_TOL
from ..nuisance_oracle import ErrorBudget
from ..quadrature import probe_points
from .partition import BumpFunction, Partition, orient_weight, truncate_weight

CASES = ("Case1", "Case2", "Case3", "Case4", "ATT", "OracleShift")


@dataclass(frozen=True)
class PerturbationParams:
    case: str
    alpha: float = 0.0
    beta: float = 0.0
    xi: float = 0.0
    # smallness conditions used by the proofs: name -> (lhs, rhs, holds)
    conditions: Mapping[str, tuple[float, float, bool]] = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise InvalidArgument(f"unknown case {self.case!r}")


def _require(name: str, lhs: float, rhs: float):
    if lhs > rhs:
        raise NTooSmall(name, lhs, rhs)


def select_params(case: str, budget: ErrorBudget, w_hat_norm: float, c: float, *,
                  w_sup: float | None = None, moment: float | None = None,
                  c_u: float | None = None, C_u: float | None = None,
                  n: int | None = None, strict: bool = False) -> PerturbationParams:
    """Choose ``(alpha, beta)`` (or ``xi``) for a construction case.

    ``w_hat_norm`` is ``||w_hat||_2`` (for ``OracleShift``: ``||w||_2``),
    ``w_sup`` is ``||w||_inf`` and ``moment`` the weighted moment entering the
    separation bound.  Premises of the radius bounds always raise
    ``NTooSmall``; the stronger smallness conditions are recorded in
    ``conditions`` and raise only with ``strict=True``.
    """
    e, ep, f = budget.e, budget.e_prime, budget.f
    conds: dict[str, tuple[float, float, bool]] = {}

    def record(name, lhs, rhs):
        conds[name] = (float(lhs), float(rhs), bool(lhs <= rhs))

    if case == "OracleShift":
        if n is None or n < 1:
            raise InvalidArgument("OracleShift needs the sample size n")
        return PerturbationParams(case, xi=1.0 / (math.sqrt(n) * w_hat_norm))
    if case == "ATT":
        if c_u is None or C_u is None:
            raise InvalidArgument("ATT needs c_u and C_u from choose_u")
        alpha = c / 4 * math.sqrt(e)
        beta = min(c, c_u) / 4 * math.sqrt(f)
        _require("alpha <= 1", alpha, 1.0)
        _require("beta <= 1/(4 C_u)", beta, 1 / (4 * C_u))
        record("alpha <= c/4", alpha, c / 4)
        record("beta <= c_u c^3 / (4 C_u^2)", beta, c_u * c**3 / (4 * C_u**2))
    else:
        if w_hat_norm <= 0:
            raise InvalidArgument("truncated weight has zero norm")
        big, small = (ep, f) if case in ("Case1", "Case2") else (e, f)
        name = "e_prime" if case in ("Case1", "Case2") else "e"
        if case in ("Case1", "Case3"):
            if big < small:
                raise CaseMismatch(f"{case} needs {name} >= f, got {big} < {small}")
            alpha, beta = math.sqrt(big) / (4 * w_hat_norm), c * math.sqrt(small) / (4 * w_hat_norm)
            if w_sup is not None:
                _require("beta <= c / (2 ||w||_inf)", beta, c / (2 * w_sup))
        else:
            if not small > big:
                raise CaseMismatch(f"{case} needs f > {name}, got f={small} <= {big}")
            alpha, beta = math.sqrt(small) / (4 * w_hat_norm), c * math.sqrt(big) / (4 * w_hat_norm)
            if w_sup is not None:
                s = max(1.0, w_sup)
                _require("alpha <= 1/max(1, ||w||_inf)", alpha, 1 / s)
                _require("beta <= c max(1, ||w||_inf)^-2 / 4", beta, c / (4 * s * s))
        if w_sup is not None and moment is not None:
            rhs = c**2 / 4 * (1 + w_sup) ** -4 * min(1.0, moment)
            record("max(alpha, beta) <= c^2/4 (1+||w||_inf)^-4 min(1, moment)", max(alpha, beta), rhs)
    if strict:
        for name, (lhs, rhs, ok) in conds.items():
            if not ok:
                raise NTooSmall(name, lhs, rhs)
    return PerturbationParams(case, alpha, beta, conditions=conds)


def default_coefficients(params: PerturbationParams) -> dict[str, float]:
    a, b = params.alpha, params.beta
    if params.case in ("Case1", "Case3"):
        t = "g1" if params.case == "Case1" else "g0"
        return {"m.beta": b, f"{t}.alpha": a, f"{t}.beta": b}
    if params.case in ("Case2", "Case4"):
        t = "g1" if params.case == "Case2" else "g0"
        return {f"{t}.beta": b, f"{t}.alpha": a, f"{t}.beta2": b,
                "m.beta": b, "m.alpha": a, "m.beta2": b, "m.alpha2": a}
    if params.case == "ATT":
        return {"m.beta": b, "g0.alpha": a, "g0.beta": b}
    return {"g1.xi": params.xi}


def perturb(case: str, k: Mapping[str, float], mh, g1h, g0h, W, D, w=None, u=None, v=None):
    """The construction formulas; returns ``(m, g1, g0)`` arrays."""
    WD = W * D
    if case == "Case1":
        m = mh * (1 - k["m.beta"] * WD / g1h)
        g1 = mh * (g1h + k["g1.alpha"] * WD) / (mh * (1 - k["g1.beta"] * WD / g1h))
        return m, g1, g0h
    if case == "Case2":
        g1 = g1h / (1 + k["g1.beta"] * WD / g1h - k["g1.alpha"] * k["g1.beta2"] * W**2)
        m = ((1 + k["m.beta"] * WD / g1h - k["m.alpha"] * k["m.beta2"] * W**2)
             * (mh + k["m.alpha2"] * mh * g1h * WD))
        return m, g1, g0h
    if case == "Case3":
        m = mh + (1 - mh) * k["m.beta"] * WD / g0h
        g0 = (1 - mh) * (g0h - k["g0.alpha"] * WD) / ((1 - mh) * (1 - k["g0.beta"] * WD / g0h))
        return m, g1h, g0
    if case == "Case4":
        g0 = g0h / (1 + k["g0.beta"] * WD / g0h - k["g0.alpha"] * k["g0.beta2"] * W**2)
        one_minus_m = ((1 + k["m.beta"] * WD / g0h - k["m.alpha"] * k["m.beta2"] * W**2)
                       * (1 - mh) * (1 + k["m.alpha2"] * g0h * WD))
        return 1 - one_minus_m, g1h, g0
    if case == "ATT":
        m = mh - k["m.beta"] * u * D
        g0 = g0h - k["g0.alpha"] * v * D / (1 - (mh - k["g0.beta"] * u * D))
        return m, g1h, g0
    if case == "OracleShift":
        return mh, g1h + k["g1.xi"] * w, g0h
    raise InvalidArgument(f"unknown case {case!r}")


def closed_form_deviation(case: str, alpha: float, beta: float, xi: float,
                          mh, g1h, g0h, W, D, w=None, u=None, v=None):
    """``(m - m_hat, g1 - g1_hat, g0 - g0_hat)`` simplified by hand (uses ``D^2 = 1``)."""
    WD = W * D
    zero = np.zeros_like(mh)
    if case == "Case1":
        return -beta * mh * WD / g1h, (alpha + beta) * WD / (1 - beta * WD / g1h), zero
    if case == "Case2":
        s = beta * WD / g1h - alpha * beta * W**2
        dm = mh * WD * (beta / g1h + alpha * g1h * (1 - alpha * beta * W**2))
        return dm, -(beta * WD - alpha * beta * g1h * W**2) / (1 + s), zero
    if case == "Case3":
        return (1 - mh) * beta * WD / g0h, zero, (beta - alpha) * WD / (1 - beta * WD / g0h)
    if case == "Case4":
        s = beta * WD / g0h - alpha * beta * W**2
        dm = -(1 - mh) * WD * (beta / g0h + alpha * g0h * (1 - alpha * beta * W**2))
        return dm, zero, -(beta * WD - alpha * beta * g0h * W**2) / (1 + s)
    if case == "ATT":
        return -beta * u * D, zero, -alpha * v * D / (1 - mh + beta * u * D)
    if case == "OracleShift":
        return zero, xi * w, zero
    raise InvalidArgument(f"unknown case {case!r}")


class _Component(Evaluable):
    """One of ``m``, ``g1``, ``g0`` of a family member at fixed signs."""

    def __init__(self, family: "PerturbedFamily", bump: Evaluable | None, which: int):
        self.family, self.bump, self.which = family, bump, which
        self.K = family.center.K
        self.degree = 0 if family.piecewise_constant else None

    def _eval(self, x):
        D = self.bump._eval(x) if self.bump is not None else np.zeros(x.shape[0])
        return self.family.values(x, D)[self.which]

    def breakpoints(self):
        return self.family.breakpoints()


@dataclass(frozen=True)
class PerturbedFamily:
    case: str
    center: NuisancePair
    partition: Partition | None
    params: PerturbationParams
    w: Evaluable  # oriented weight
    w_hat: Evaluable
    coefficients: Mapping[str, float]
    aux: object | None = None  # AttAuxiliary for the ATT case
    weight_sign: int = 1

    @property
    def K(self) -> int:
        return self.center.K

    @property
    def M(self) -> int:
        return self.partition.M if self.partition is not None else 0

    @property
    def piecewise_constant(self) -> bool:
        parts = [*self.center.functions, self.w]
        if self.aux is not None:
            parts.append(self.aux.u)
        return all(p.degree == 0 for p in parts)

    def breakpoints(self):
        parts = [f.breakpoints() for f in (*self.center.functions, self.w, self.w_hat)]
        if self.partition is not None:
            parts.append(self.partition.breakpoints())
        if self.aux is not None:
            parts.append(self.aux.u.breakpoints())
        return merge_breakpoints(self.K, *parts)

    def inputs(self, x: np.ndarray) -> dict[str, np.ndarray]:
        c = self.center
        out = dict(mh=c.m._eval(x), g1h=c.g1._eval(x), g0h=c.g0._eval(x),
                   W=self.w_hat._eval(x), w=self.w._eval(x))
        if self.aux is not None:
            out["u"] = self.aux.u._eval(x)
            out["v"] = (1 - out["mh"]) / out["mh"]
        return out

    def values(self, x: np.ndarray, D: np.ndarray, inputs=None):
        inp = self.inputs(x) if inputs is None else inputs
        return perturb(self.case, self.coefficients, D=D, **inp)

    def closed_form(self, x: np.ndarray, D: np.ndarray, inputs=None):
        inp = self.inputs(x) if inputs is None else inputs
        p = self.params
        return closed_form_deviation(self.case, p.alpha, p.beta, p.xi, D=D, **inp)

    def bump(self, lam) -> Evaluable | None:
        if self.partition is None:
            return None
        return BumpFunction(self.partition, lam)

    def pair(self, lam=None) -> NuisancePair:
        b = self.bump(lam) if self.partition is not None else None
        m, g1, g0 = (_Component(self, b, i) for i in range(3))
        return NuisancePair(m, g1, g0, c=self.center.c, tag=self.center.tag)

    def mutated(self, name: str, shift: float) -> "PerturbedFamily":
        if name not in self.coefficients:
            raise InvalidArgument(f"no coefficient {name!r}")
        k = dict(self.coefficients)
        k[name] += shift
        return replace(self, coefficients=k)

    def with_coefficients(self, **updates: float) -> "PerturbedFamily":
        k = dict(self.coefficients)
        k.update(updates)
        return replace(self, coefficients=k)


def construct(case: str, center: NuisancePair, partition: Partition | None,
              params: PerturbationParams, w: Evaluable | float = 1.0, aux=None,
              check: bool = True) -> PerturbedFamily:
    """Build the family and check its range at both bump signs on the probe grid."""
    if params.case != case:
        raise InvalidArgument(f"params were selected for {params.case}, not {case}")
    w = lift(w, center.K)
    if case == "ATT" and aux is None:
        raise InvalidArgument("ATT construction needs an AttAuxiliary from choose_u")
    if case != "OracleShift" and partition is None:
        raise InvalidArgument(f"{case} needs a partition")
    w_or, sign = orient_weight(w) if case != "ATT" else (w, 1)
    w_hat = truncate_weight(w_or) if case != "ATT" else lift(0.0, center.K)
    fam = PerturbedFamily(case, center, partition, params, w_or, w_hat,
                          default_coefficients(params), aux, sign)
    if check:
        pts = probe_points(center.K, *center.functions, w_or, w_hat,
                           *([aux.u] if aux is not None else []))
        if partition is not None:
            pts = np.concatenate([pts, _partition_points(partition)])
        inp = fam.inputs(pts)
        for D in (-1.0, 1.0):
            for name, v in zip(("m", "g1", "g0"), fam.values(pts, np.full(len(pts), D), inp)):
                bad = (v < -RANGE_TOL) | (v > 1 + RANGE_TOL) | ~np.isfinite(v)
                if bad.any():
                    i = int(np.argmax(bad))
                    raise ConstructionInvalid(
                        f"{case}: {name}={v[i]:.6g} outside [0,1] at x={pts[i]} (Delta={D:+.0f})")
    return fam


def _partition_points(partition: Partition) -> np.ndarray:
    axes = partition.breakpoints()
    mids = [(a[:-1] + a[1:]) / 2 for a in axes]
    grids = np.meshgrid(*mids, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
