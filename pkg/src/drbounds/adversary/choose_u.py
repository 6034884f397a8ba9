"""Auxiliary weight ``u`` for the ATT construction.

With ``delta = g_hat(1,.) - g_hat(0,.) - theta_ml`` the ATT family needs a
nonnegative ``u``, constant on the cells of a grid-aligned partition, such that
``E[u delta Delta(lambda, .)] = 0`` for every ``lambda`` while
``E[u / (m_hat (1 - m_hat))]`` stays bounded below.  Cells on which
``delta >= delta0`` are paired up; within a pair ``u`` is 1 on the cell with
the smaller ``delta``-integral and the ratio of the two integrals on the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateConstruction, InvalidArgument
from ..functions import Evaluable, GridFunction
from ..model import NuisancePair, true_att
from ..quadrature import Quadrature
from .partition import Partition

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AttAuxiliary:
    u: Evaluable
    C_u: float
    c_u: float
    delta0: float
    v: Evaluable
    theta_ml: float
    partition: Partition
    alpha_prob: float = 0.0
    mirrored: bool = False


def grid_shape(K: int, M: int) -> tuple[int, ...]:
    levels = int(round(np.log2(M)))
    if 2**levels != M:
        raise InvalidArgument(f"M must be a power of two, got {M}")
    per_axis = [levels // K + (1 if k < levels % K else 0) for k in range(K)]
    return tuple(2**p for p in per_axis)


def choose_u(center: NuisancePair, M: int, subsamples: int = 8, delta_floor: float = 1e-6) -> AttAuxiliary:
    """Build ``u`` on a dyadic grid of ``M`` cells.

    Membership of a grid cell in ``{delta >= delta0}`` is decided at the
    midpoints of a ``subsamples``-per-axis sub-grid of the cell.
    """
    if M < 2 or M % 2:
        raise InvalidArgument(f"M must be even and >= 2, got {M}")
    K = center.K
    shape = grid_shape(K, M)
    fine_shape = tuple(s * subsamples for s in shape)
    fine = Quadrature.from_edges([np.linspace(0, 1, r + 1) for r in fine_shape], order=1)
    theta_ml = true_att(center)
    delta = center.g1._eval(fine.nodes) - center.g0._eval(fine.nodes) - theta_ml
    v = (1 - center.m) / center.m

    alpha = float(fine.weights @ (np.abs(delta) <= ZERO_TOL))
    if alpha >= 1 - ZERO_TOL:
        part = Partition.from_grid(shape)
        return AttAuxiliary(GridFunction(np.ones(shape)), 1.0, 1.0, 1.0, v, theta_ml, part, alpha)

    mirrored = bool(fine.weights @ (delta < -ZERO_TOL) > fine.weights @ (delta > ZERO_TOL))
    if mirrored:
        delta = -delta
    M_alpha = 2 * int(np.floor((1 - alpha) * M / 6))
    if M_alpha < 2:
        raise InvalidArgument(f"M={M} too small: M_alpha={M_alpha} < 2")

    # fine nodes -> coarse cell (flat index) via the tensor layout of from_edges
    fidx = np.indices(fine_shape).reshape(K, -1)
    cell_flat = np.ravel_multi_index(tuple(fidx[k] // subsamples for k in range(K)), shape)
    cell_min = np.full(M, np.inf)
    np.minimum.at(cell_min, cell_flat, delta)
    cell_int = np.bincount(cell_flat, weights=delta * fine.weights, minlength=M)

    delta0 = 1.0
    while delta0 >= delta_floor:
        prob = float(fine.weights @ (delta >= delta0))
        inside = np.flatnonzero(cell_min >= delta0)
        if prob >= (1 - alpha) / 3 and inside.size >= M_alpha:
            break
        delta0 /= 2
    else:
        raise DegenerateConstruction(f"no admissible delta0 down to {delta_floor:g}")

    # lowest-index admissible cells, then pair by increasing integral
    chosen = inside[:M_alpha]
    chosen = chosen[np.argsort(cell_int[chosen], kind="stable")]
    rest = np.setdiff1d(np.arange(M), chosen)
    order = np.concatenate([chosen, rest])
    u_flat = np.zeros(M)
    first, second = chosen[0::2], chosen[1::2]
    u_flat[first] = 1.0
    u_flat[second] = cell_int[first] / cell_int[second]
    u = GridFunction(u_flat.reshape(shape))
    C_u = (2 + abs(theta_ml)) / delta0
    c_u = 0.1 * (1 - alpha)
    return AttAuxiliary(u, C_u, c_u, delta0, v, theta_ml, Partition.from_grid(shape, order),
                        alpha, mirrored)
