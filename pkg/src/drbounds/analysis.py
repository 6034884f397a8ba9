"""Risk measurement, rate fitting, Hellinger distances and distinguishability.

Replications and trials are keyed by ``(seed, index)`` through counter-based
streams, so a run gives the same numbers with any number of threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .adversary.construction import PerturbedFamily
from .adversary.partition import Partition, rademacher
from .errors import EstimatorFailure, InvalidArgument, InvalidDensity
from .estimators import ESTIMATORS, EstimateResult
from .functions import Evaluable, lift, ramp
from .model import Dataset, NuisancePair, density_table, sample_dataset, true_att, true_wate
from .nuisance_oracle import ErrorBudget, synthesize_estimates
from .quadrature import adapted, order_for_degree
from .rng import stream

TIE_TOL = 1e-9


@dataclass(frozen=True)
class Scenario:
    """A true law, fixed nuisance estimates and the target functional."""

    truth: NuisancePair
    hat: NuisancePair
    kind: str = "WATE"
    w: Evaluable | None = None
    label: str = ""
    truth_value: float = field(default=math.nan)

    def __post_init__(self):
        if self.kind not in ("WATE", "ATT"):
            raise InvalidArgument(f"unknown functional {self.kind!r}")
        if self.kind == "WATE" and self.w is None:
            object.__setattr__(self, "w", lift(1.0, self.truth.K))
        if math.isnan(self.truth_value):
            val = true_wate(self.truth, self.w) if self.kind == "WATE" else true_att(self.truth)
            object.__setattr__(self, "truth_value", val)


def rate_scenario(n: int, kind: str = "WATE", exponent: float = -0.25, kappa: float = 1.0,
                  zero: bool = False, center: float = 0.5, c: float = 0.1,
                  budget: ErrorBudget | None = None) -> Scenario:
    """Constant estimates at ``center``; the truth sits at squared L2 distance
    ``kappa * n**exponent`` (or ``budget``) from them along a checkerboard."""
    hat = NuisancePair.of(center, center, center, c=c)
    if budget is None:
        budget = ErrorBudget.uniform(0.0 if zero else kappa * n**exponent)
    truth = synthesize_estimates(hat, budget, "checkerboard", bounds=(0.0, 1.0))
    return Scenario(truth, hat, kind, label=f"rate n={n}")


def bias_scenario(bias: float = 0.1, kind: str = "WATE", w: Evaluable | None = None,
                  c: float = 0.1) -> Scenario:
    """Exact propensity; ``g_hat(1,.)`` shifted by ``bias * w`` for WATE and
    ``g_hat(0,.)`` shifted by ``-bias`` for ATT (the ATT plug-in ignores ``g(1,.)``)."""
    w = lift(1.0, 1) if w is None else w
    truth = NuisancePair.of(ramp(0.3, 0.7), ramp(0.4, 0.7), 0.3, c=c)
    if kind == "ATT":
        hat = NuisancePair(truth.m, truth.g1, truth.g0 - bias, c=c)
    else:
        hat = NuisancePair(truth.m, truth.g1 + bias * w, truth.g0, c=c)
    return Scenario(truth, hat, kind, w=w if kind == "WATE" else None, label=f"bias={bias}")


EstimatorFn = Callable[[Dataset, NuisancePair, Evaluable | None], EstimateResult | float]


def _resolve_estimator(estimator) -> tuple[str, EstimatorFn]:
    if callable(estimator):
        return getattr(estimator, "__name__", "custom"), estimator
    if estimator not in ESTIMATORS:
        raise InvalidArgument(f"unknown estimator {estimator!r}")
    fn = ESTIMATORS[estimator]
    if estimator.endswith("att"):
        return estimator, lambda data, hat, w: fn(data, hat)
    return estimator, fn


def quantile(values: np.ndarray, gamma: float) -> float:
    """Order statistic at ``ceil(gamma R)`` (1-based); no interpolation."""
    if not 0 < gamma < 1:
        raise InvalidArgument(f"gamma must lie in (0,1), got {gamma}")
    v = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(gamma * v.size))
    return float(v[k - 1])


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def squared_errors(estimator, scenario: Scenario, n: int, reps: int, seed: int,
                   threads: int = 1) -> np.ndarray:
    _, fn = _resolve_estimator(estimator)

    def one(rep):
        data = sample_dataset(scenario.truth, n, seed, index=(n, rep))
        try:
            out = fn(data, scenario.hat, scenario.w)
        except Exception as exc:  # surfaced with the replication index
            raise EstimatorFailure(rep, exc) from exc
        value = out.value if isinstance(out, EstimateResult) else float(out)
        return (value - scenario.truth_value) ** 2

    return np.asarray(_map(one, range(reps), threads))


def quantile_risk(estimator, scenario: Scenario, n: int, reps: int, gamma: float, seed: int,
                  threads: int = 1) -> tuple[float, np.ndarray]:
    if reps < 20:
        raise InvalidArgument(f"need at least 20 replications, got {reps}")
    if not 0 < gamma < 1:
        raise InvalidArgument(f"gamma must lie in (0,1), got {gamma}")
    errs = squared_errors(estimator, scenario, n, reps, seed, threads)
    return quantile(errs, gamma), errs


@dataclass(frozen=True)
class RiskRow:
    n: int
    gamma: float
    quantile_risk: float
    reps: int


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    intercept: float


@dataclass(frozen=True)
class RiskReport:
    rows: tuple[RiskRow, ...]
    fits: dict  # gamma -> RateFit
    estimator: str = ""

    @property
    def fitted_slope(self) -> float:
        return next(iter(self.fits.values())).slope

    @property
    def slope_stderr(self) -> float:
        return next(iter(self.fits.values())).stderr


def fit_loglog(ns: Sequence[float], risks: Sequence[float]) -> RateFit:
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(risks, float))
    res = stats.linregress(x, y)
    return RateFit(float(res.slope), float(res.stderr), float(res.intercept))


def rate_sweep(scenario_for_n: Callable[[int], Scenario], ns: Sequence[int], estimator,
               gammas: Sequence[float] = (0.9,), reps: int = 200, seed: int = 0,
               threads: int = 1) -> RiskReport:
    """Quantile risks over an ``n`` grid and their log-log slope per ``gamma``."""
    ns = sorted(int(n) for n in ns)
    if len(set(ns)) < 4:
        raise InvalidArgument("a rate sweep needs at least 4 distinct n values")
    name, _ = _resolve_estimator(estimator)
    rows = []
    for n in ns:
        errs = squared_errors(estimator, scenario_for_n(n), n, reps, seed, threads)
        rows.extend(RiskRow(n, g, quantile(errs, g), reps) for g in gammas)
    fits = {}
    for g in gammas:
        pts = [(r.n, r.quantile_risk) for r in rows if r.gamma == g]
        fits[g] = fit_loglog(*zip(*pts))
    return RiskReport(tuple(rows), fits, name)


# Hellinger distances

def _density_values(p, x: np.ndarray) -> np.ndarray:
    if isinstance(p, NuisancePair):
        return density_table(p.m._eval(x), p.g1._eval(x), p.g0._eval(x))
    return np.asarray(p(x), dtype=float)


def _pair_quadrature(*pairs, resolution=None):
    fns = [f for p in pairs if isinstance(p, NuisancePair) for f in p.functions]
    K = fns[0].K if fns else 1
    pc = all(f.degree == 0 for f in fns)
    return adapted(K, *fns, resolution=resolution, order=1 if pc else order_for_degree(None))


def hellinger_single(p, q, quadrature=None) -> float:
    """``H^2 = 1/2 sum_{d,y} int (sqrt p - sqrt q)^2``.

    ``p`` and ``q`` are ``NuisancePair`` laws or callables returning the
    ``(N, 4)`` density table.
    """
    quad = _pair_quadrature(p, q) if quadrature is None else quadrature
    pv, qv = _density_values(p, quad.nodes), _density_values(q, quad.nodes)
    if (pv < -1e-15).any() or (qv < -1e-15).any():
        raise InvalidDensity("negative density on the quadrature grid")
    pv, qv = np.clip(pv, 0, None), np.clip(qv, 0, None)
    return float(0.5 * quad.weights @ np.sum((np.sqrt(pv) - np.sqrt(qv)) ** 2, axis=1))


def hellinger_product2(p, q, quadrature=None) -> float:
    """``H^2`` between the two-fold products, by direct double quadrature."""
    quad = _pair_quadrature(p, q) if quadrature is None else quadrature
    sp = np.sqrt(_density_values(p, quad.nodes).ravel())
    sq = np.sqrt(_density_values(q, quad.nodes).ravel())
    wv = np.repeat(quad.weights, 4)
    ww = np.outer(wv, wv)
    return float(0.5 * np.sum(ww * (np.outer(sp, sp) - np.outer(sq, sq)) ** 2))


def fano_floor(delta: float) -> float:
    if not 0 <= delta <= 2:
        raise InvalidArgument(f"delta must lie in [0, 2], got {delta}")
    return (1 - math.sqrt(max(0.0, delta * (1 - delta / 4)))) / 2


# distinguishability

@dataclass(frozen=True)
class DistinguishReport:
    n: int
    M: int
    trials: int
    empirical_test_error: float
    fano_floor: float
    delta: float


def _obs_terms(family: PerturbedFamily, data: Dataset):
    """Per-observation log ratios ``log q_s / p_hat`` for ``lambda_j = +1`` and ``-1``."""
    x = data.x
    pair_idx, sign = Partition.pair_and_sign(family.partition.locate(x))
    inp = family.inputs(x)
    col = 2 * data.d.astype(int) + data.y.astype(int)
    rows = np.arange(len(x))
    p_hat = density_table(inp["mh"], inp["g1h"], inp["g0h"])[rows, col]
    logs = []
    for s in (1.0, -1.0):
        qv = density_table(*family.values(x, s * sign, inp))[rows, col]
        logs.append(np.log(qv) - np.log(p_hat))
    return pair_idx, logs[0], logs[1]


def mixture_log_lr(family: PerturbedFamily, data: Dataset) -> float:
    """``log`` of the n-sample mixture likelihood over ``p_hat^n``, factorised by cell pair."""
    pair_idx, lp, lm = _obs_terms(family, data)
    npairs = family.M // 2
    A = np.bincount(pair_idx, weights=lp, minlength=npairs)
    B = np.bincount(pair_idx, weights=lm, minlength=npairs)
    occupied = np.bincount(pair_idx, minlength=npairs) > 0
    return float(np.sum(np.logaddexp(A[occupied], B[occupied]) - math.log(2)))


def mixture_log_lr_bruteforce(family: PerturbedFamily, data: Dataset) -> float:
    """Same quantity by enumerating every sign vector; for small ``M`` only."""
    npairs = family.M // 2
    if npairs > 12:
        raise InvalidArgument("brute-force enumeration limited to M <= 24")
    x = data.x
    inp = family.inputs(x)
    col = 2 * data.d.astype(int) + data.y.astype(int)
    rows = np.arange(len(x))
    log_p = np.sum(np.log(density_table(inp["mh"], inp["g1h"], inp["g0h"])[rows, col]))
    pair_idx, sign = Partition.pair_and_sign(family.partition.locate(x))
    terms = []
    for lam in product((-1.0, 1.0), repeat=npairs):
        D = np.asarray(lam)[pair_idx] * sign
        q = density_table(*family.values(x, D, inp))[rows, col]
        terms.append(np.sum(np.log(q)))
    terms = np.asarray(terms)
    return float(np.logaddexp.reduce(terms) - math.log(len(terms)) - log_p)


def distinguishability_experiment(family: PerturbedFamily, n: int, trials: int, seed: int,
                                  delta: float = 1.0, threads: int = 1) -> DistinguishReport:
    """Error rate of the likelihood-ratio test of ``p_hat^n`` against the mixture.

    Each trial draws a fair coin, then a dataset from ``p_hat`` or from
    ``Q_lambda`` with fresh signs.  Ties count as half an error.
    """
    M = family.M

    def one(t):
        rng = stream(seed, M, n, t)
        alt = bool(rng.integers(2))
        law = family.pair(rademacher(M, rng)) if alt else family.center
        data = sample_dataset(law, n, seed, index=(M, n, t, 1))
        llr = mixture_log_lr(family, data)
        if abs(llr) < TIE_TOL:
            return 0.5
        return float((llr > 0) != alt)

    errors = _map(one, range(trials), threads)
    return DistinguishReport(n, M, trials, float(np.mean(errors)), fano_floor(delta), delta)
