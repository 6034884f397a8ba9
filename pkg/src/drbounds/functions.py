"""Evaluable functions on the unit hypercube.

Every nuisance function, weight, bump pattern and perturbed family is an
``Evaluable``: a vectorised callable ``f(x)`` taking points of shape ``(N, K)``
and returning ``(N,)`` values.  Evaluables additionally advertise

* ``breakpoints()`` -- per-axis coordinates where the function may be
  discontinuous or switch polynomial piece, and
* ``degree`` -- the polynomial degree between breakpoints (``None`` if unknown).

The quadrature layer uses both to build meshes on which integrals are exact.
"""

from __future__ import annotations

import operator
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument

Array = np.ndarray


def as_points(x, K: int) -> Array:
    """Coerce scalars, 1-D and 2-D input into an ``(N, K)`` float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if K == 1 else x.reshape(1, -1)
    if x.shape[1] != K:
        raise InvalidArgument(f"expected points with {K} coordinates, got shape {x.shape}")
    return x


def _empty_breaks(K: int) -> tuple[Array, ...]:
    return tuple(np.empty(0) for _ in range(K))


def merge_breakpoints(K: int, *parts: Sequence[Array]) -> tuple[Array, ...]:
    out = list(_empty_breaks(K))
    for bp in parts:
        for k in range(K):
            out[k] = np.union1d(out[k], bp[k])
    return tuple(out)


class Evaluable:
    K: int = 1
    degree: int | None = None

    def __call__(self, x) -> Array:
        return self._eval(as_points(x, self.K))

    def _eval(self, x: Array) -> Array:
        raise NotImplementedError

    def breakpoints(self) -> tuple[Array, ...]:
        return _empty_breaks(self.K)

    @property
    def piecewise_constant(self) -> bool:
        return self.degree == 0

    # arithmetic builds Pointwise compositions
    def _binary(self, other, op, degree_rule):
        other = lift(other, self.K)
        return Pointwise(op, (self, other), degree=degree_rule(self.degree, other.degree))

    def __add__(self, other):
        return self._binary(other, operator.add, _deg_add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, operator.sub, _deg_add)

    def __rsub__(self, other):
        return lift(other, self.K) - self

    def __mul__(self, other):
        return self._binary(other, operator.mul, _deg_mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, operator.truediv, _deg_div)

    def __rtruediv__(self, other):
        return lift(other, self.K) / self

    def __neg__(self):
        return Pointwise(operator.neg, (self,), degree=self.degree)


def _deg_add(a, b):
    return None if a is None or b is None else max(a, b)


def _deg_mul(a, b):
    return None if a is None or b is None else a + b


def _deg_div(a, b):
    return a if b == 0 else None


def lift(value, K: int) -> Evaluable:
    if isinstance(value, Evaluable):
        if value.K != K:
            raise InvalidArgument(f"dimension mismatch: {value.K} vs {K}")
        return value
    if np.isscalar(value):
        return Constant(float(value), K)
    raise TypeError(f"cannot lift {type(value).__name__} to an Evaluable")


class Constant(Evaluable):
    degree = 0

    def __init__(self, value: float, K: int = 1):
        self.value = float(value)
        self.K = K

    def _eval(self, x):
        return np.full(x.shape[0], self.value)

    def __repr__(self):
        return f"Constant({self.value}, K={self.K})"


class GridFunction(Evaluable):
    """Piecewise constant on a uniform tensor grid; ``values.shape = (r_1, ..., r_K)``."""

    degree = 0

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        self.K = self.values.ndim
        self.values.setflags(write=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def cell_index(self, x: Array) -> tuple[Array, ...]:
        return tuple(
            np.clip(np.floor(x[:, k] * r).astype(np.int64), 0, r - 1)
            for k, r in enumerate(self.shape)
        )

    def _eval(self, x):
        return self.values[self.cell_index(x)]

    def breakpoints(self):
        return tuple(np.linspace(0.0, 1.0, r + 1) for r in self.shape)

    def __repr__(self):
        return f"GridFunction(shape={self.shape})"


class PiecewiseLinear(Evaluable):
    """Continuous piecewise-linear function of one variable."""

    degree = 1
    K = 1

    def __init__(self, knots, values):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.knots.shape != self.values.shape or self.knots.size < 2:
            raise InvalidArgument("knots and values must be equal-length arrays of size >= 2")
        if np.any(np.diff(self.knots) <= 0):
            raise InvalidArgument("knots must be strictly increasing")

    def _eval(self, x):
        return np.interp(x[:, 0], self.knots, self.values)

    def breakpoints(self):
        return (self.knots.copy(),)

    def crossings(self, level: float) -> Array:
        """Points where the function equals ``level`` (segment interiors only)."""
        v0, v1 = self.values[:-1] - level, self.values[1:] - level
        hit = (v0 * v1 < 0)
        t = v0[hit] / (v0[hit] - v1[hit])
        return self.knots[:-1][hit] + t * np.diff(self.knots)[hit]


class Analytic(Evaluable):
    """Closed-form callable; optional breakpoints/degree make quadrature exact."""

    def __init__(self, fn: Callable[[Array], Array], K: int = 1, breakpoints=None,
                 degree: int | None = None, name: str = ""):
        self.fn = fn
        self.K = K
        self.degree = degree
        self._breaks = (tuple(np.asarray(b, dtype=float) for b in breakpoints)
                        if breakpoints is not None else _empty_breaks(K))
        self.name = name or getattr(fn, "__name__", "analytic")

    def _eval(self, x):
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), (x.shape[0],)).copy()

    def breakpoints(self):
        return self._breaks

    def __repr__(self):
        return f"Analytic({self.name}, K={self.K})"


class Pointwise(Evaluable):
    """``fn`` applied to the values of ``parts`` at the same points."""

    def __init__(self, fn: Callable[..., Array], parts: Sequence[Evaluable],
                 degree: int | None = None, extra_breaks=None):
        if not parts:
            raise InvalidArgument("Pointwise needs at least one part")
        self.fn = fn
        self.parts = tuple(parts)
        self.K = self.parts[0].K
        self.degree = degree
        self._extra = extra_breaks

    def _eval(self, x):
        return np.asarray(self.fn(*(p._eval(x) for p in self.parts)), dtype=float)

    def breakpoints(self):
        bps = [p.breakpoints() for p in self.parts]
        if self._extra is not None:
            bps.append(self._extra)
        return merge_breakpoints(self.K, *bps)


def compose(fn: Callable[..., Array], *parts: Evaluable, degree: int | None = None) -> Pointwise:
    return Pointwise(fn, parts, degree=degree)


# named constructors, used by configs

def constant(value: float, K: int = 1) -> Constant:
    return Constant(value, K)


def ramp(lo: float, hi: float, K: int = 1) -> Evaluable:
    """Linear in the first coordinate, from ``lo`` at 0 to ``hi`` at 1."""
    if K == 1:
        return PiecewiseLinear([0.0, 1.0], [lo, hi])
    return Analytic(lambda x: lo + (hi - lo) * x[:, 0], K=K, degree=1, name="ramp")


def checkerboard(lo: float, hi: float, cells: int = 64, K: int = 1) -> GridFunction:
    idx = np.indices((cells,) * K).sum(axis=0)
    return GridFunction(np.where(idx % 2 == 0, hi, lo))


def random_grid(lo: float, hi: float, cells: int = 64, K: int = 1, seed: int = 0) -> GridFunction:
    rng = np.random.default_rng(seed)
    return GridFunction(rng.uniform(lo, hi, size=(cells,) * K))


FUNCTION_KINDS: dict[str, Callable[..., Evaluable]] = {
    "constant": constant,
    "ramp": ramp,
    "checkerboard": checkerboard,
    "random_grid": random_grid,
}
