import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drbounds.adversary import (
    BumpFunction,
    Partition,
    RectCollection,
    bump,
    build_partition,
    bump_identities,
    rademacher,
    split_half,
    truncate_weight,
    uniform_partition,
)
from drbounds.errors import InvalidArgument
from drbounds.functions import Analytic, GridFunction, PiecewiseLinear, lift, ramp, random_grid
from drbounds.quadrature import integrate_boxes


def test_split_constant_weight_takes_alpha_zero():
    S1, S2 = split_half(RectCollection.unit(1), lift(1.0, 1))
    assert np.allclose(S1.lo, [[0.0]]) and np.allclose(S1.hi, [[0.5]])
    assert S2.measure() == pytest.approx(0.5)


def test_split_linear_weight():
    S1, _ = split_half(RectCollection.unit(1), ramp(0.0, 1.0))
    assert S1.lo[0, 0] == pytest.approx(0.25, abs=1e-11)
    assert S1.hi[0, 0] == pytest.approx(0.75, abs=1e-11)
    assert S1.integral(ramp(0.0, 1.0)) == pytest.approx(0.25, abs=1e-12)


def test_split_zero_weight_rejected():
    with pytest.raises(InvalidArgument):
        split_half(RectCollection.unit(1), lift(0.0, 1))


def test_uniform_weight_partition():
    part = build_partition(lift(1.0, 1), 2)
    assert np.allclose(part.cell_measures(), 0.25)
    lo, hi, _ = part.boxes()
    assert np.allclose(np.sort(hi[:, 0] - lo[:, 0]), 0.25)


def test_linear_weight_depth_one_balances_target():
    w = ramp(0.0, 1.0)
    part = build_partition(w, 1)
    target = w * truncate_weight(w)
    assert np.allclose(part.cell_measures(), 0.5)
    ints = part.cell_integrals(target)
    assert ints[0] == pytest.approx(ints[1], abs=2.5e-12)  # split tolerance 1e-12 per half


def test_uniform_partition_matches_bisection():
    a, b = uniform_partition(1, 3), build_partition(lift(1.0, 1), 3)
    assert np.allclose(a.cell_measures(), b.cell_measures())


def test_truncate_weight_examples():
    assert np.allclose(truncate_weight(lift(1.0, 1))(np.array([[0.2], [0.9]])), 1.0)
    wh = truncate_weight(ramp(0.0, 1.0))
    assert wh(np.array([[0.4]]))[0] == 0.0
    assert wh(np.array([[0.8]]))[0] == pytest.approx(0.8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_truncated_weight_below_weight(seed):
    w = random_grid(0, 2, 16, seed=seed)
    x = np.random.default_rng(seed).random((500, 1))
    assert np.all(truncate_weight(w)(x) <= w(x))


def test_bump_sign_bookkeeping():
    part = uniform_partition(1, 2)
    lam = np.array([1.0, -1.0])
    x = np.array([[0.1], [0.3], [0.6], [0.9]])  # B1, B2, B3, B4
    assert np.array_equal(bump(lam, part, x), [-1, 1, 1, -1])


def test_locate_boundary_goes_to_lowest_cell():
    part = uniform_partition(1, 2)
    assert part.locate(np.array([[0.25], [0.5], [0.0], [1.0]])).tolist() == [0, 1, 0, 3]


def test_from_grid_order():
    part = Partition.from_grid((2, 2), order=[3, 2, 1, 0])
    assert part.locate(np.array([[0.9, 0.9]]))[0] == 0


def test_balance_on_random_piecewise_linear():
    rng = np.random.default_rng(7)
    for _ in range(3):
        knots = np.linspace(0, 1, 6)
        w = PiecewiseLinear(knots, rng.uniform(0, 1, 6))
        part = build_partition(w, 4)
        ints = part.cell_integrals(w * truncate_weight(w))
        assert np.max(np.abs(ints - ints.mean())) <= 1e-9


def test_two_dimensional_partition():
    w = Analytic(lambda x: 1 + x[:, 0] * x[:, 1], K=2, degree=2)
    part = build_partition(w, 3)
    assert np.allclose(part.cell_measures(), 1 / 8, atol=1e-9)
    ints = part.cell_integrals(w * truncate_weight(w))
    assert np.max(np.abs(ints - ints.mean())) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_bump_mean_zero_and_unit_square(seed):
    part = uniform_partition(1, 4)
    rng = np.random.default_rng(seed)
    lam = rademacher(part.M, rng)
    x = rng.random((1000, 1))
    D = BumpFunction(part, lam)(x)
    assert np.all(D**2 == 1)
    assert np.all(D + BumpFunction(part, -lam)(x) == 0)


def test_bump_identities(partition, weight):
    from drbounds.adversary import orient_weight

    w, _ = orient_weight(weight)
    rng = np.random.default_rng(0)
    lams = [rademacher(partition.M, rng) for _ in range(20)]
    rep = bump_identities(partition, w, truncate_weight(w), rng.random((10**4, 1)), lams)
    assert rep.mean_over_signs == 0 and rep.square_dev == 0
    assert rep.weighted_mean <= 1e-9


def test_grid_function_weight_split_is_exact():
    w = GridFunction(np.array([1.0, 3.0]))
    S1, S2 = split_half(RectCollection.unit(1), w)
    assert S1.integral(w) == pytest.approx(1.0, abs=1e-12)
    assert float(integrate_boxes(w, S2.lo, S2.hi).sum()) == pytest.approx(1.0, abs=1e-12)
