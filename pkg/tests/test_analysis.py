import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drbounds import NuisancePair, sample_dataset
from drbounds.adversary import PerturbationParams, construct, rademacher, uniform_partition
from drbounds.analysis import (
    Scenario,
    bias_scenario,
    distinguishability_experiment,
    fano_floor,
    hellinger_product2,
    hellinger_single,
    mixture_log_lr,
    mixture_log_lr_bruteforce,
    quantile,
    quantile_risk,
    rate_scenario,
    rate_sweep,
)
from drbounds.errors import EstimatorFailure, InvalidArgument
from drbounds.functions import random_grid


def exact(data, hat, w):
    return 0.4


def test_constant_estimator_at_truth_has_zero_risk():
    sc = Scenario(NuisancePair.of(0.5, 0.7, 0.3), NuisancePair.of(0.5, 0.7, 0.3))
    for g in (0.1, 0.5, 0.9):
        risk, errs = quantile_risk(exact, sc, 50, 20, g, seed=0)
        assert risk <= 1e-30 and np.all(errs <= 1e-30)  # truth by quadrature


def test_median_order_statistic():
    v = np.random.default_rng(1).random(101)
    assert quantile(v, 0.5) == np.median(v)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=50), st.floats(0.01, 0.98), st.floats(0.001, 0.5))
def test_quantile_monotone_in_gamma(vals, g, dg):
    g2 = min(g + dg, 0.99)
    assert quantile(np.array(vals), g) <= quantile(np.array(vals), g2)


def test_plug_in_risk_approaches_squared_bias():
    risk, _ = quantile_risk("plug_in_wate", bias_scenario(0.1), 2**16, 20, 0.5, seed=3)
    assert risk == pytest.approx(0.01, abs=1e-3)


def test_quantile_risk_needs_reps():
    with pytest.raises(InvalidArgument):
        quantile_risk("dr_wate", bias_scenario(0.1), 100, 5, 0.5, seed=0)


def test_estimator_failure_carries_rep_index():
    def boom(data, hat, w):
        raise ZeroDivisionError("x")

    with pytest.raises(EstimatorFailure) as err:
        quantile_risk(boom, bias_scenario(0.1), 10, 20, 0.5, seed=0)
    assert err.value.rep == 0


def test_rate_sweep_rows_finite():
    rep = rate_sweep(lambda n: rate_scenario(n), [256, 512, 1024, 2048], "dr_wate", (0.5, 0.9), 20, seed=1, threads=2)
    risks = np.array([r.quantile_risk for r in rep.rows])
    assert np.all(np.isfinite(risks)) and np.all(risks >= 0)
    assert set(rep.fits) == {0.5, 0.9}


def test_threads_do_not_change_results():
    a = rate_sweep(lambda n: rate_scenario(n, "ATT"), [256, 512, 1024, 2048], "dr_att", (0.9,), 20, seed=4)
    b = rate_sweep(lambda n: rate_scenario(n, "ATT"), [256, 512, 1024, 2048], "dr_att", (0.9,), 20, seed=4, threads=3)
    assert a.rows == b.rows


def pairs(seed):
    return [NuisancePair.of(random_grid(0.05, 0.95, 8, seed=seed + 3 * i),
                            random_grid(0.05, 0.95, 8, seed=seed + 3 * i + 1),
                            random_grid(0.05, 0.95, 8, seed=seed + 3 * i + 2)) for i in range(2)]


def test_hellinger_identity():
    p, _ = pairs(0)
    assert hellinger_single(p, p) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**5))
def test_hellinger_symmetric_and_bounded(seed):
    p, q = pairs(seed)
    h = hellinger_single(p, q)
    assert 0 <= h <= 1
    assert h == pytest.approx(hellinger_single(q, p), abs=1e-15)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**5))
def test_hellinger_tensorization(seed):
    p, q = pairs(seed)
    h = hellinger_single(p, q)
    assert hellinger_product2(p, q) == pytest.approx(1 - (1 - h) ** 2, abs=1e-8)


def test_fano_floor_values():
    assert fano_floor(0.0) == 0.5
    assert fano_floor(2.0) == 0.0
    assert fano_floor(1.0) == pytest.approx((1 - math.sqrt(0.75)) / 2)
    assert fano_floor(1.0) == pytest.approx(0.066987, abs=1e-6)


def small_family(levels=3, c=0.4):
    center = NuisancePair.of(0.5, 0.5, 0.5, c=c)
    return construct("Case1", center, uniform_partition(1, levels), PerturbationParams("Case1", 0.25, 0.1))


@pytest.mark.parametrize("n", [1, 4, 16])
def test_cellwise_likelihood_matches_enumeration(n):
    fam = small_family()
    for t in range(5):
        rng = np.random.default_rng(t)
        law = fam.pair(rademacher(fam.M, rng)) if t % 2 else fam.center
        data = sample_dataset(law, n, seed=t)
        assert mixture_log_lr(fam, data) == pytest.approx(mixture_log_lr_bruteforce(fam, data), abs=1e-12)


def test_single_sample_is_uninformative():
    rep = distinguishability_experiment(small_family(6), 1, 400, seed=2, delta=1.0)
    assert abs(rep.empirical_test_error - 0.5) <= 0.02
    assert rep.fano_floor == fano_floor(1.0)
