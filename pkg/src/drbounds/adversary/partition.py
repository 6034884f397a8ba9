"""Weight-balanced partitions of the unit cube into hyperrectangle collections.

``split_half`` slides a half-length window along the last axis of every box in
a collection until the window carries half the weight.  Applying it
recursively yields ``M = 2^levels`` collections of measure ``1/M`` each, all
carrying the same integral of the balancing weight.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument, NonConvergence
from ..functions import Evaluable, GridFunction, PiecewiseLinear, Pointwise, as_points
from ..quadrature import integrate_boxes, probe_points


@dataclass(frozen=True)
class RectCollection:
    """Axis-aligned boxes ``[lo_b, hi_b]``, disjoint up to measure zero."""

    lo: np.ndarray  # (B, K)
    hi: np.ndarray  # (B, K)

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_2d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape:
            raise InvalidArgument("lo and hi must have the same shape")
        if np.any(hi < lo):
            raise InvalidArgument("box with hi < lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, K: int) -> "RectCollection":
        return cls(np.zeros((1, K)), np.ones((1, K)))

    @property
    def K(self) -> int:
        return self.lo.shape[1]

    def __len__(self) -> int:
        return self.lo.shape[0]

    def measure(self) -> float:
        return float(np.prod(self.hi - self.lo, axis=1).sum())

    def integral(self, f: Evaluable) -> float:
        return float(integrate_boxes(f, self.lo, self.hi).sum())

    def merged(self) -> "RectCollection":
        """Fuse boxes that abut along the last axis with identical cross-sections."""
        if len(self) <= 1:
            return self
        K = self.K
        keys = np.concatenate([self.lo[:, :-1], self.hi[:, :-1], self.lo[:, -1:]], axis=1)
        order = np.lexsort(keys.T[::-1])
        lo, hi = self.lo[order], self.hi[order]
        out_lo, out_hi = [lo[0].copy()], [hi[0].copy()]
        for a, b in zip(lo[1:], hi[1:]):
            prev_lo, prev_hi = out_lo[-1], out_hi[-1]
            same = K == 1 or (np.array_equal(a[:-1], prev_lo[:-1]) and np.array_equal(b[:-1], prev_hi[:-1]))
            if same and a[-1] == prev_hi[-1]:
                prev_hi[-1] = b[-1]
            else:
                out_lo.append(a.copy())
                out_hi.append(b.copy())
        return RectCollection(np.array(out_lo), np.array(out_hi))


def _window(S: RectCollection, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    a, L = S.lo[:, -1], S.hi[:, -1] - S.lo[:, -1]
    lo, hi = S.lo.copy(), S.hi.copy()
    lo[:, -1] = a + alpha * L / 2
    hi[:, -1] = a + (1 + alpha) * L / 2
    return lo, hi


def split_half(S: RectCollection, w: Evaluable, tol: float = 1e-12,
               max_iter: int = 200) -> tuple[RectCollection, RectCollection]:
    """Split ``S`` into two collections of equal measure and equal ``w``-mass.

    Each box keeps its cross-section and contributes the window
    ``[a + alpha L/2, a + (1+alpha) L/2]`` of its last axis to the first half.
    ``alpha`` is found by bisection on ``[0, 1]``; ``alpha = 0`` is tried first.
    """
    total = S.integral(w)
    if not total > 0:
        raise InvalidArgument(f"weight has no mass on the collection (integral {total:.3g})")
    half = total / 2

    def resid(alpha):
        lo, hi = _window(S, alpha)
        return float(integrate_boxes(w, lo, hi).sum()) - half

    r0 = resid(0.0)
    a_lo, a_hi, alpha = 0.0, 1.0, 0.0
    r = r0
    if abs(r0) > tol:
        # psi(0) + psi(1) = total, so the residual changes sign on [0, 1]
        sign0 = np.sign(r0)
        for _ in range(max_iter):
            alpha = (a_lo + a_hi) / 2
            r = resid(alpha)
            if abs(r) <= tol or a_hi - a_lo <= np.finfo(float).eps:
                break
            if np.sign(r) == sign0:
                a_lo = alpha
            else:
                a_hi = alpha
        if abs(r) > max(tol, 64 * np.finfo(float).eps * total):
            raise NonConvergence(f"split_half residual {abs(r):.3g} after bisection (alpha={alpha})")
    lo1, hi1 = _window(S, alpha)
    left_lo, left_hi = S.lo.copy(), S.hi.copy()
    left_hi[:, -1] = lo1[:, -1]
    right_lo, right_hi = S.lo.copy(), S.hi.copy()
    right_lo[:, -1] = hi1[:, -1]
    lo2 = np.concatenate([left_lo, right_lo])
    hi2 = np.concatenate([left_hi, right_hi])
    keep1 = hi1[:, -1] > lo1[:, -1]
    keep2 = hi2[:, -1] > lo2[:, -1]
    S1 = RectCollection(lo1[keep1], hi1[keep1]).merged()
    S2 = RectCollection(lo2[keep2], hi2[keep2]).merged()
    return S1, S2


def sup_norm(w: Evaluable) -> float:
    return float(np.max(np.abs(w._eval(probe_points(w.K, w)))))


def orient_weight(w: Evaluable) -> tuple[Evaluable, int]:
    """Return ``(w, +1)`` or ``(-w, -1)`` so that ``{w > ||w||/2}`` has positive mass."""
    s = sup_norm(w)
    if s <= 0:
        raise InvalidArgument("weight is identically zero")
    pts = probe_points(w.K, w)
    if np.any(w._eval(pts) > s / 2):
        return w, 1
    if isinstance(w, PiecewiseLinear):
        return PiecewiseLinear(w.knots, -w.values), -1
    return -w, -1


def truncate_weight(w: Evaluable) -> Evaluable:
    """``w(x) 1{w(x) > ||w||_inf / 2}``."""
    s = sup_norm(w)
    if s <= 0:
        raise InvalidArgument("weight is identically zero")
    thr = s / 2
    extra = (w.crossings(thr),) if isinstance(w, PiecewiseLinear) else None
    return Pointwise(lambda v: np.where(v > thr, v, 0.0), (w,), degree=w.degree, extra_breaks=extra)


@dataclass(frozen=True)
class Partition:
    """``M`` collections ``B_1..B_M`` (stored 0-based) covering the cube."""

    cells: tuple[RectCollection, ...]
    levels: int
    _lattice: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.cells) != 2 ** self.levels:
            raise InvalidArgument("number of cells must be 2**levels")
        object.__setattr__(self, "_lattice", self._build_lattice())

    @property
    def M(self) -> int:
        return len(self.cells)

    @property
    def K(self) -> int:
        return self.cells[0].K

    def boxes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo = np.concatenate([c.lo for c in self.cells])
        hi = np.concatenate([c.hi for c in self.cells])
        owner = np.concatenate([np.full(len(c), j) for j, c in enumerate(self.cells)])
        return lo, hi, owner

    def breakpoints(self) -> tuple[np.ndarray, ...]:
        return self._lattice[0]

    def _build_lattice(self):
        lo, hi, owner = self.boxes()
        K = lo.shape[1]
        axes = tuple(np.unique(np.concatenate([lo[:, k], hi[:, k], [0.0, 1.0]])) for k in range(K))
        grid = np.full(tuple(a.size - 1 for a in axes), -1, dtype=np.int64)
        i0 = [np.searchsorted(axes[k], lo[:, k]) for k in range(K)]
        i1 = [np.searchsorted(axes[k], hi[:, k]) for k in range(K)]
        for b in range(lo.shape[0]):
            grid[tuple(slice(i0[k][b], i1[k][b]) for k in range(K))] = owner[b]
        if (grid < 0).any():
            raise InvalidArgument("partition does not cover the unit cube")
        return axes, grid

    def locate(self, x: np.ndarray) -> np.ndarray:
        """0-based cell index; boundary points go to the lowest-index adjacent cell."""
        axes, grid = self._lattice
        K = len(axes)
        idx_choices = []
        for k in range(K):
            n = axes[k].size - 1
            right = np.clip(np.searchsorted(axes[k], x[:, k], side="right") - 1, 0, n - 1)
            left = np.clip(np.searchsorted(axes[k], x[:, k], side="left") - 1, 0, n - 1)
            idx_choices.append((left, right))
        best = None
        for combo in itertools.product((0, 1), repeat=K):
            cand = grid[tuple(idx_choices[k][combo[k]] for k in range(K))]
            best = cand if best is None else np.minimum(best, cand)
        return best

    def cell_measures(self) -> np.ndarray:
        return np.array([c.measure() for c in self.cells])

    def cell_integrals(self, f: Evaluable) -> np.ndarray:
        lo, hi, owner = self.boxes()
        return np.bincount(owner, weights=integrate_boxes(f, lo, hi), minlength=self.M)

    @staticmethod
    def pair_and_sign(cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cell ``k`` (0-based) is ``B_{k+1}``: pair ``k // 2``, sign ``+1`` for ``B_{2j}``."""
        cell = np.asarray(cell)
        return cell // 2, np.where(cell % 2 == 1, 1.0, -1.0)

    @classmethod
    def from_grid(cls, shape: tuple[int, ...], order: np.ndarray | None = None) -> "Partition":
        """Dyadic grid cells as single-box collections, listed in ``order``."""
        K = len(shape)
        idx = np.array(list(np.ndindex(*shape)))
        if order is not None:
            idx = idx[np.asarray(order)]
        sizes = np.array(shape, dtype=float)
        lo, hi = idx / sizes, (idx + 1) / sizes
        M = idx.shape[0]
        levels = int(round(np.log2(M)))
        cells = tuple(RectCollection(lo[j:j + 1], hi[j:j + 1]) for j in range(M))
        return cls(cells, levels)


def build_partition(w: Evaluable, levels: int, tol: float = 1e-12) -> Partition:
    """Recursively halve the cube, balancing ``w * w_hat`` on every split."""
    if levels < 0:
        raise InvalidArgument("levels must be >= 0")
    w, _ = orient_weight(w)
    target = w * truncate_weight(w)
    cells = [RectCollection.unit(w.K)]
    for _ in range(levels):
        nxt = []
        for S in cells:
            nxt.extend(split_half(S, target, tol))
        cells = nxt
    return Partition(tuple(cells), levels)


def uniform_partition(K: int, levels: int) -> Partition:
    """Balanced partition for a constant weight, built without bisection."""
    if K == 1:
        M = 2 ** levels
        edges = np.linspace(0.0, 1.0, M + 1)
        return Partition(tuple(RectCollection(edges[j:j + 1, None], edges[j + 1:j + 2, None])
                               for j in range(M)), levels)
    return build_partition(GridFunction(np.ones((1,) * K)), levels)


class BumpFunction(Evaluable):
    """``Delta(lambda, x) = sum_j lambda_j (1{x in B_2j} - 1{x in B_2j-1})``."""

    degree = 0

    def __init__(self, partition: Partition, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (partition.M // 2,):
            raise InvalidArgument(f"need {partition.M // 2} signs, got shape {lam.shape}")
        self.partition = partition
        self.lam = lam
        self.K = partition.K
        j, s = Partition.pair_and_sign(np.arange(partition.M))
        self.cell_values = lam[j] * s

    def _eval(self, x):
        return self.cell_values[self.partition.locate(x)]

    def breakpoints(self):
        return self.partition.breakpoints()


def bump(lam, partition: Partition, x) -> np.ndarray:
    return BumpFunction(partition, lam)(as_points(x, partition.K))


def rademacher(M: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(np.array([-1.0, 1.0]), size=M // 2)
