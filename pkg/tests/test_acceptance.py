"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.
"""

import time

import numpy as np
import pytest
from conftest import LEVELS, case_budget, record

from drbounds import NuisancePair, sample_dataset
from drbounds.adversary import (
    RectCollection,
    build_partition,
    chi_square_premises,
    orient_weight,
    bump_identities,
    radius_bounds,
    split_half,
    truncate_weight,
    uniform_partition,
    verify_family_membership,
    verify_mixture_equality,
    verify_separation,
)
from drbounds.adversary.verify import family_quadrature
from drbounds.analysis import (
    bias_scenario,
    distinguishability_experiment,
    hellinger_single,
    mixture_log_lr,
    mixture_log_lr_bruteforce,
    quantile_risk,
    rate_scenario,
    rate_sweep,
)
from drbounds.functions import PiecewiseLinear, lift, random_grid
from drbounds.nuisance_oracle import ErrorBudget
from drbounds.quadrature import integrate_boxes
from drbounds.rng import stream
from drbounds.suite import build_family, sample_lambdas

CASES = ("Case1", "Case2", "Case3", "Case4", "ATT")
SEED = 20240601
THREADS = 4


@pytest.fixture(scope="module")
def families(center, weight, partition):
    out, secs = {}, {}
    for case in CASES:
        t0 = time.perf_counter()
        out[case] = build_family(center, weight, case, case_budget(case), LEVELS,
                                 partition=None if case == "ATT" else partition)
        secs[case] = time.perf_counter() - t0
    return out, secs


@pytest.fixture(scope="module")
def lams():
    return sample_lambdas(2**LEVELS, 100, SEED)


def test_01_mixture_equality(families, weight):
    fams, build_secs = families
    t0 = time.perf_counter()
    build_partition(weight, LEVELS)
    part_secs = time.perf_counter() - t0
    worst, slowest, ok = 0.0, 0.0, True
    for case, fam in fams.items():
        t0 = time.perf_counter()
        dev = verify_mixture_equality(fam)
        secs = build_secs[case] + time.perf_counter() - t0
        worst, slowest = max(worst, dev), max(slowest, secs)
        ok &= dev <= 1e-10 and secs < 1.0
    record(1, "mixture equality, 5 cases", ok, f"max deviation {worst:.2e} (<= 1e-10), slowest case {slowest:.2f}s "
           f"(< 1s); shared partition build {part_secs:.2f}s, reported only")
    assert ok


def test_02_membership_and_radii(families, lams):
    fams, _ = families
    ok, slowest, worst_ratio = True, 0.0, 0.0
    for case, fam in fams.items():
        t0 = time.perf_counter()
        q = family_quadrature(fam)
        members = verify_family_membership(fam, case_budget(case), lams, q)
        radii = radius_bounds(fam, lams, q)
        secs = time.perf_counter() - t0
        slowest = max(slowest, secs)
        worst_ratio = max(worst_ratio, max(r.distance / r.bound for r in radii if r.bound > 0))
        ok &= all(r.member for r in members) and all(r.ok for r in radii) and secs < 5.0
    record(2, "membership and r in {2, inf} radii, 100 lambdas", ok,
           f"worst distance/radius {worst_ratio:.3f} (<= 1), slowest case {slowest:.2f}s (< 5s)")
    assert ok


def test_03_separation(families, lams):
    fams, _ = families
    margins = {case: verify_separation(fam, lams).min_margin for case, fam in fams.items()}
    ok = all(m >= -1e-12 for m in margins.values())
    detail = ", ".join(f"{c} {m:.2e}" for c, m in margins.items())
    record(3, "separation margins, 100 lambdas", ok, f"min margin per case: {detail} (>= -1e-12)")
    assert ok


def test_04_chi_square_premises(families):
    fams, _ = families
    reps = {case: chi_square_premises(fam) for case, fam in fams.items()}
    ok = all(r.bound_ok for r in reps.values())
    worst_b = max(r.b / r.bound for r in reps.values())
    worst_pj = max(max(abs(r.max_pj - 2 / r.M), abs(r.min_pj - 2 / r.M)) for r in reps.values())
    record(4, "b <= 4/c^2 and p_j = 2/M", ok, f"max b/(4/c^2) {worst_b:.2e}, max |p_j - 2/M| {worst_pj:.1e} (<= 1e-12)")
    assert ok


def test_05_bump_identities(weight, partition, lams):
    w, _ = orient_weight(weight)
    x = stream(SEED, 5).random((10**4, 1))
    rep = bump_identities(partition, w, truncate_weight(w), x, lams)
    ok = rep.mean_over_signs == 0 and rep.square_dev == 0 and rep.weighted_mean <= 1e-9
    record(5, "bump identities at 1e4 points", ok,
           f"|E_lam Delta| {rep.mean_over_signs:g} (exact), |E[w w_hat Delta]| {rep.weighted_mean:.1e} (<= 1e-9), "
           f"|Delta^2-1| {rep.square_dev:g} (exact)")
    assert ok


NS = [2**k for k in range(10, 17)]


@pytest.mark.parametrize("estimator,kind", [("dr_wate", "WATE"), ("dr_att", "ATT")])
def test_06_upper_bound_rates(estimator, kind):
    slopes = {}
    for zero, target in ((False, -0.5), (True, -1.0)):
        rep = rate_sweep(lambda n: rate_scenario(n, kind, zero=zero), NS, estimator, (0.9,), 200, SEED, THREADS)
        slopes[target] = rep.fitted_slope
    ok = all(abs(s - t) <= 0.15 for t, s in slopes.items())
    record(6, f"{estimator} 0.9-quantile risk slopes", ok,
           f"n^-1/4 budgets {slopes[-0.5]:+.3f} (-0.5 +/- 0.15), zero budgets {slopes[-1.0]:+.3f} (-1 +/- 0.15)")
    assert ok


def test_07_double_robustness_dominance():
    ratios = {}
    for kind in ("WATE", "ATT"):
        sc = bias_scenario(0.1, kind)
        s = kind.lower()
        plug, _ = quantile_risk(f"plug_in_{s}", sc, 2**14, 200, 0.9, SEED, THREADS)
        dr, _ = quantile_risk(f"dr_{s}", sc, 2**14, 200, 0.9, SEED, THREADS)
        ratios[kind] = plug / dr
    ok = all(r >= 5 for r in ratios.values())
    record(7, "plug-in / DR risk at n=2^14, 0.1 outcome bias", ok,
           f"WATE {ratios['WATE']:.1f}, ATT {ratios['ATT']:.1f} (>= 5)")
    assert ok


def test_08_oracle_shift_hellinger_scaling():
    center = NuisancePair.of(random_grid(0.3, 0.7, 16, seed=1), random_grid(0.3, 0.7, 16, seed=2),
                             random_grid(0.3, 0.7, 16, seed=3), c=0.1)
    w = random_grid(0.5, 1.5, 16, seed=4)
    vals = []
    for k in range(6, 15):
        n = 2**k
        fam = build_family(center, w, "OracleShift", ErrorBudget(), 0, n=n)
        vals.append(n * hellinger_single(center, fam.pair()))
    ratio = max(vals) / min(vals)
    ok = ratio <= 3
    record(8, "n H^2(center, shift) over n = 2^6..2^14", ok,
           f"range {min(vals):.4f}..{max(vals):.4f}, max/min {ratio:.3f} (<= 3)")
    assert ok


def test_09_distinguishability():
    center = NuisancePair.of(0.5, 0.5, 0.5, c=0.4)
    w = lift(1.0, 1)
    budget = ErrorBudget.uniform(1.0)
    errors = {}
    for levels in (14, 10, 8):
        fam = build_family(center, w, "Case1", budget, levels, partition=uniform_partition(1, levels))
        errors[2**levels] = distinguishability_experiment(fam, 256, 1000, SEED, 1.0, THREADS).empirical_test_error
    trend = [errors[2**14], errors[2**10], errors[2**8]]
    small = build_family(center, w, "Case1", budget, 3, partition=uniform_partition(1, 3))
    brute_gap = 0.0
    for n in (1, 2, 4, 8, 16):
        for t in range(4):
            rng = stream(SEED, 9, n, t)
            law = small.pair(rng.choice([-1.0, 1.0], size=4)) if t % 2 else small.center
            data = sample_dataset(law, n, SEED, index=(9, n, t))
            brute_gap = max(brute_gap, abs(mixture_log_lr(small, data) - mixture_log_lr_bruteforce(small, data)))
    ok = trend[0] >= 0.35 and trend[0] >= trend[1] >= trend[2] and brute_gap <= 1e-12
    record(9, "likelihood-ratio test error, n=256, 1000 trials", ok,
           f"M=2^14 {trend[0]:.3f} (>= 0.35), 2^10 {trend[1]:.3f}, 2^8 {trend[2]:.3f} (non-increasing); "
           f"cell-wise vs brute force at M=8 {brute_gap:.1e}")
    assert ok


def test_10_split_half_property():
    worst_measure = worst_mass = 0.0
    for i in range(50):
        rng = stream(SEED, 10, i)
        knots = np.concatenate([[0.0], np.sort(rng.random(int(rng.integers(1, 8)))), [1.0]])
        w = PiecewiseLinear(knots, rng.uniform(0, 2, knots.size))
        S = RectCollection.unit(1)
        total = S.integral(w)
        for half in split_half(S, w):
            worst_measure = max(worst_measure, abs(half.measure() - 0.5))
            mass = float(integrate_boxes(w, half.lo, half.hi).sum())
            worst_mass = max(worst_mass, abs(mass / total - 0.5))
    ok = worst_measure <= 1e-9 and worst_mass <= 1e-9
    record(10, "split_half on 50 random piecewise-linear weights", ok,
           f"max |measure - 1/2| {worst_measure:.1e}, max |mass share - 1/2| {worst_mass:.1e} (<= 1e-9)")
    assert ok


def test_partition_of_acceptance_weight_is_balanced(weight, partition):
    w, _ = orient_weight(weight)
    ints = partition.cell_integrals(w * truncate_weight(w))
    assert np.max(np.abs(ints - ints.mean())) <= 1e-9
    assert np.allclose(partition.cell_measures(), 1 / partition.M, atol=1e-12)
    assert build_partition(weight, 2).M == 4
