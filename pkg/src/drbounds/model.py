"""Binary-outcome data-generating processes on ``[0,1]^K``.

A law is fixed by a propensity ``m(x) = P[D=1 | X=x]`` and an outcome
regression ``g(d, x) = P[Y=1 | D=d, X=x]`` with ``X`` uniform on the cube.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import ConstructionInvalid, DegeneratePropensity, InvalidArgument
from .functions import Evaluable, as_points, lift
from .quadrature import Quadrature, order_for_degree, probe_points, resolve
from .rng import stream

RANGE_TOL = 1e-12


@dataclass(frozen=True)
class NuisancePair:
    """Propensity ``m`` and outcome regressions ``g1 = g(1,.)``, ``g0 = g(0,.)``."""

    m: Evaluable
    g1: Evaluable
    g0: Evaluable
    c: float = 0.1
    tag: Literal["analytic", "piecewise-constant"] = "analytic"
    bounded: bool = False

    def __post_init__(self):
        if not 0.0 < self.c < 0.5:
            raise InvalidArgument(f"overlap constant c must lie in (0, 1/2), got {self.c}")
        K = self.m.K
        object.__setattr__(self, "g1", lift(self.g1, K))
        object.__setattr__(self, "g0", lift(self.g0, K))

    @classmethod
    def of(cls, m, g1, g0, K: int = 1, **kw) -> "NuisancePair":
        m, g1, g0 = (lift(f, K) for f in (m, g1, g0))
        tag = "piecewise-constant" if all(f.degree == 0 for f in (m, g1, g0)) else "analytic"
        return cls(m, g1, g0, tag=kw.pop("tag", tag), **kw)

    @property
    def K(self) -> int:
        return self.m.K

    @property
    def functions(self) -> tuple[Evaluable, Evaluable, Evaluable]:
        return self.m, self.g1, self.g0

    def g(self, d, x) -> np.ndarray:
        x = as_points(x, self.K)
        d = np.broadcast_to(np.asarray(d), (x.shape[0],))
        return np.where(d == 1, self.g1._eval(x), self.g0._eval(x))

    def range_violation(self, points: np.ndarray | None = None) -> tuple[str, np.ndarray] | None:
        """First function leaving its admissible range at ``points``, with the offending point."""
        points = probe_points(self.K, *self.functions) if points is None else points
        lo, hi = (self.c, 1.0 - self.c) if self.bounded else (0.0, 1.0)
        for name, f in zip(("m", "g1", "g0"), self.functions):
            v = f._eval(points)
            bad = (v < lo - RANGE_TOL) | (v > hi + RANGE_TOL) | ~np.isfinite(v)
            if bad.any():
                return name, points[np.argmax(bad)]
        return None


@dataclass(frozen=True)
class FunctionalSpec:
    kind: Literal["WATE", "ATT"]
    w: Evaluable | None = None

    def __post_init__(self):
        if self.kind not in ("WATE", "ATT"):
            raise InvalidArgument(f"unknown functional kind {self.kind!r}")
        if (self.kind == "WATE") != (self.w is not None):
            raise InvalidArgument("a weight is required for WATE and only for WATE")


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray  # (n, K)
    d: np.ndarray  # (n,) in {0, 1}
    y: np.ndarray  # (n,) in {0, 1}
    seed: int = 0
    stream_index: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return self.d.size

    @property
    def rows(self):
        return zip(self.x, self.d, self.y)


def sample_dataset(pair: NuisancePair, n: int, seed: int, index: tuple[int, ...] = ()) -> Dataset:
    """Draw ``n`` i.i.d. records; identical ``(seed, index)`` gives identical data."""
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    rng = stream(seed, *index)
    x = rng.random((n, pair.K))
    u = rng.random((n, 2))
    mx = pair.m._eval(x)
    g1x, g0x = pair.g1._eval(x), pair.g0._eval(x)
    for name, v in (("m", mx), ("g1", g1x), ("g0", g0x)):
        bad = (v < 0.0) | (v > 1.0) | ~np.isfinite(v)
        if bad.any():
            i = int(np.argmax(bad))
            raise ConstructionInvalid(f"{name}={v[i]:.6g} outside [0,1] at x={x[i]}")
    d = (u[:, 0] < mx).astype(np.int8)
    y = (u[:, 1] < np.where(d == 1, g1x, g0x)).astype(np.int8)
    return Dataset(x, d, y, seed=seed, stream_index=tuple(index))


def density(pair: NuisancePair, x, d, y) -> np.ndarray:
    x = as_points(x, pair.K)
    d = np.broadcast_to(np.asarray(d), (x.shape[0],))
    y = np.broadcast_to(np.asarray(y), (x.shape[0],))
    if not (np.isin(d, (0, 1)).all() and np.isin(y, (0, 1)).all()):
        raise InvalidArgument("d and y must be 0 or 1")
    if ((x < 0) | (x > 1)).any():
        raise InvalidArgument("x must lie in [0,1]^K")
    mx = pair.m._eval(x)
    gx = pair.g(d, x)
    return np.where(d == 1, mx, 1.0 - mx) * np.where(y == 1, gx, 1.0 - gx)


def _quad_for(quadrature, K, integrand: Evaluable, *parts: Evaluable) -> Quadrature:
    return resolve(quadrature, K, *parts, order=order_for_degree(integrand.degree))


def true_wate(pair: NuisancePair, w: Evaluable, quadrature=None) -> float:
    """``E[w(X)(g(1,X) - g(0,X))]`` by quadrature."""
    w = lift(w, pair.K)
    integrand = w * (pair.g1 - pair.g0)
    return _quad_for(quadrature, pair.K, integrand, w, pair.g1, pair.g0).integrate(integrand)


def true_att(pair: NuisancePair, quadrature=None) -> float:
    """``E[(g(1,X) - g(0,X)) m(X)] / E[m(X)]``."""
    num_f = (pair.g1 - pair.g0) * pair.m
    q = _quad_for(quadrature, pair.K, num_f, *pair.functions)
    den = q.integrate(pair.m)
    if abs(den) < 1e-12:
        raise DegeneratePropensity(f"E[m(X)] = {den:.3g} is numerically zero")
    return q.integrate(num_f) / den


def att_of_estimates(pair: NuisancePair, quadrature=None) -> float:
    """The ATT functional evaluated at an estimate pair (``theta_ml``)."""
    return true_att(pair, quadrature)


def density_table(mx: np.ndarray, g1x: np.ndarray, g0x: np.ndarray) -> np.ndarray:
    """Density at the four outcomes, columns ordered ``(d, y) = 00, 01, 10, 11``."""
    return np.stack([(1 - mx) * (1 - g0x), (1 - mx) * g0x, mx * (1 - g1x), mx * g1x], axis=-1)
