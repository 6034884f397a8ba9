"""Tensor-product quadrature on meshes adapted to function breakpoints.

A mesh is described by per-axis edge arrays.  On every mesh cell a
Gauss-Legendre rule of ``order`` points per axis is used (``order=1`` is the
midpoint rule).  When the mesh contains all breakpoints of the integrand and the
integrand is a polynomial of degree ``<= 2*order - 1`` on each cell, the result
is exact up to rounding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .functions import Evaluable, merge_breakpoints

DEFAULT_RESOLUTION = {1: 2**10, 2: 2**5, 3: 2**4}


def default_resolution(K: int) -> int:
    if K not in DEFAULT_RESOLUTION:
        raise InvalidArgument(f"quadrature supports K <= 3, got K={K}")
    return DEFAULT_RESOLUTION[K]


@lru_cache(maxsize=16)
def _gauss_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(order)
    return (t + 1.0) / 2.0, w / 2.0


def _axis_rule(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _gauss_unit(order)
    h = np.diff(edges)
    keep = h > 0
    lo, h = edges[:-1][keep], h[keep]
    nodes = (lo[:, None] + h[:, None] * t[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def order_for_degree(degree: int | None) -> int:
    if degree is None:
        return 3
    return max(1, (degree + 2) // 2)


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray  # (N, K)
    weights: np.ndarray  # (N,)

    @property
    def K(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    def values(self, f) -> np.ndarray:
        return np.asarray(f(self.nodes), dtype=float) if callable(f) else np.asarray(f, dtype=float)

    def integrate(self, f) -> float:
        return float(self.weights @ self.values(f))

    def sup_abs(self, f) -> float:
        return float(np.max(np.abs(self.values(f))))

    def lp_norm(self, f, r: float) -> float:
        v = np.abs(self.values(f))
        if np.isinf(r):
            return float(np.max(v))
        return float((self.weights @ v**r) ** (1.0 / r))

    @classmethod
    def from_edges(cls, edges: Sequence[np.ndarray], order: int = 1) -> "Quadrature":
        rules = [_axis_rule(np.asarray(e, dtype=float), order) for e in edges]
        grids = np.meshgrid(*(r[0] for r in rules), indexing="ij")
        wgrids = np.meshgrid(*(r[1] for r in rules), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return cls(nodes, weights)

    @classmethod
    def uniform(cls, K: int, resolution: int | None = None, order: int = 1) -> "Quadrature":
        resolution = default_resolution(K) if resolution is None else resolution
        if resolution < 1:
            raise InvalidArgument("quadrature resolution must be >= 1")
        return cls.from_edges([np.linspace(0.0, 1.0, resolution + 1)] * K, order)


def unit_edges(K: int, resolution: int | None, *functions: Evaluable, extra=None) -> list[np.ndarray]:
    resolution = default_resolution(K) if resolution is None else resolution
    if resolution < 1:
        raise InvalidArgument("quadrature resolution must be >= 1")
    base = tuple(np.linspace(0.0, 1.0, resolution + 1) for _ in range(K))
    parts = [base] + [f.breakpoints() for f in functions]
    if extra is not None:
        parts.append(extra)
    merged = merge_breakpoints(K, *parts)
    return [np.clip(e[(e >= 0.0) & (e <= 1.0)], 0.0, 1.0) for e in merged]


def adapted(K: int, *functions: Evaluable, resolution: int | None = None,
            order: int = 1, extra=None) -> Quadrature:
    """Mesh on ``[0,1]^K`` refined at all breakpoints of ``functions``."""
    return Quadrature.from_edges(unit_edges(K, resolution, *functions, extra=extra), order)


def resolve(quadrature, K: int, *functions: Evaluable, order: int = 1) -> Quadrature:
    """Accept a ready ``Quadrature``, a per-axis resolution, or ``None`` (default)."""
    if isinstance(quadrature, Quadrature):
        return quadrature
    if quadrature is not None and int(quadrature) < 1:
        raise InvalidArgument("quadrature resolution must be >= 1")
    return adapted(K, *functions, resolution=quadrature, order=order)


def integrate_boxes(f: Evaluable, lo: np.ndarray, hi: np.ndarray, order: int | None = None,
                    subdivisions: int = 64) -> np.ndarray:
    """Integral of ``f`` over each box ``[lo_b, hi_b]``; returns shape ``(B,)``.

    Boxes are split at the breakpoints of ``f``; if its degree is unknown every
    axis is additionally cut into ``subdivisions`` pieces.
    """
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    order = order_for_degree(f.degree) if order is None else order
    breaks = f.breakpoints()
    all_nodes, all_w, owner = [], [], []
    for b in range(lo.shape[0]):
        edges = []
        for k in range(f.K):
            a, z = lo[b, k], hi[b, k]
            inner = breaks[k][(breaks[k] > a) & (breaks[k] < z)]
            if f.degree is None:
                inner = np.union1d(inner, np.linspace(a, z, subdivisions + 1)[1:-1])
            edges.append(np.concatenate(([a], inner, [z])))
        q = Quadrature.from_edges(edges, order)
        all_nodes.append(q.nodes)
        all_w.append(q.weights)
        owner.append(np.full(q.weights.size, b))
    if not all_nodes:
        return np.zeros(0)
    nodes = np.concatenate(all_nodes)
    w = np.concatenate(all_w)
    vals = f._eval(nodes) * w
    return np.bincount(np.concatenate(owner), weights=vals, minlength=lo.shape[0])


def corners(K: int):
    return itertools.product((0, 1), repeat=K)


def probe_points(K: int, *functions: Evaluable, resolution: int | None = None) -> np.ndarray:
    """Mesh midpoints and mesh vertices; used for range and sup-norm checks.

    Vertices catch the extremes of piecewise-linear functions, midpoints the
    values of piecewise-constant ones.
    """
    edges = unit_edges(K, resolution, *functions)
    mids = [(e[:-1] + e[1:]) / 2.0 for e in edges]
    pts = []
    for axes in (mids, edges):
        grids = np.meshgrid(*axes, indexing="ij")
        pts.append(np.stack([g.ravel() for g in grids], axis=1))
    return np.concatenate(pts)
