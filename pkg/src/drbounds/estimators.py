"""Plug-in and doubly robust estimators of WATE and ATT.

Nuisance estimates are taken as given (fitted on independent data), so there
is no sample splitting here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NoTreated, OverlapViolation
from .functions import Evaluable, lift
from .model import Dataset, NuisancePair


@dataclass(frozen=True)
class EstimateResult:
    value: float
    n_used: int
    mean_abs_ipw: float = 0.0
    n_treated: int = 0


def _check(data: Dataset) -> int:
    n = len(data)
    if n == 0:
        raise InvalidArgument("empty dataset")
    return n


def _mean(v: np.ndarray) -> float:
    # numpy reductions over contiguous float arrays use pairwise summation
    return float(np.sum(v) / v.size)


def plug_in_wate(data: Dataset, hat: NuisancePair, w: Evaluable | float) -> EstimateResult:
    n = _check(data)
    w = lift(w, hat.K)
    v = w._eval(data.x) * (hat.g1._eval(data.x) - hat.g0._eval(data.x))
    return EstimateResult(_mean(v), n, 0.0, int(data.d.sum()))


def dr_wate(data: Dataset, hat: NuisancePair, w: Evaluable | float) -> EstimateResult:
    n = _check(data)
    w = lift(w, hat.K)
    x, d, y = data.x, data.d, data.y
    mh = hat.m._eval(x)
    if np.any((mh <= 0.0) | (mh >= 1.0)):
        i = int(np.argmax((mh <= 0.0) | (mh >= 1.0)))
        raise OverlapViolation(f"m_hat={mh[i]:.6g} at x={x[i]} is outside (0,1)")
    g1, g0 = hat.g1._eval(x), hat.g0._eval(x)
    gd = np.where(d == 1, g1, g0)
    ipw = (d - mh) / (mh * (1.0 - mh))
    v = w._eval(x) * (g1 - g0 + ipw * (y - gd))
    return EstimateResult(_mean(v), n, float(np.mean(np.abs(ipw))), int(d.sum()))


def plug_in_att(data: Dataset, hat: NuisancePair) -> EstimateResult:
    n = _check(data)
    treated = data.d == 1
    nt = int(treated.sum())
    if nt == 0:
        raise NoTreated("no treated units in the sample")
    r = data.y[treated] - hat.g0._eval(data.x[treated])
    return EstimateResult(float(np.sum(r) / nt), n, 0.0, nt)


def dr_att(data: Dataset, hat: NuisancePair) -> EstimateResult:
    n = _check(data)
    x, d, y = data.x, data.d, data.y
    nt = int(d.sum())
    if nt == 0:
        raise NoTreated("no treated units in the sample")
    mh = hat.m._eval(x)
    untreated = d == 0
    if np.any(untreated & (mh >= 1.0)):
        i = int(np.argmax(untreated & (mh >= 1.0)))
        raise OverlapViolation(f"m_hat=1 at untreated x={x[i]}")
    resid = y - hat.g0._eval(x)
    odds = np.where(untreated, mh / np.where(untreated, 1.0 - mh, 1.0), 0.0)
    v = np.where(d == 1, resid, -odds * resid)
    return EstimateResult(float(np.sum(v) / nt), n, float(np.mean(odds[untreated])) if untreated.any() else 0.0, nt)


ESTIMATORS = {
    "plug_in_wate": plug_in_wate,
    "dr_wate": dr_wate,
    "plug_in_att": plug_in_att,
    "dr_att": dr_att,
}
