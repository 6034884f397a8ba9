import numpy as np
import pytest
from conftest import LEVELS, case_budget

from drbounds import NuisancePair, true_wate
from drbounds.adversary import (
    PerturbationParams,
    choose_u,
    closed_form_residual,
    construct,
    chi_square_premises,
    rademacher,
    select_params,
    uniform_partition,
    verify_mixture_equality,
    verify_separation,
)
from drbounds.adversary.choose_u import grid_shape
from drbounds.errors import CaseMismatch, ConstructionInvalid, NTooSmall
from drbounds.functions import GridFunction, lift, ramp, random_grid
from drbounds.nuisance_oracle import ErrorBudget
from drbounds.quadrature import Quadrature
from drbounds.suite import build_family

CASES = ("Case1", "Case2", "Case3", "Case4", "ATT")


def test_select_params_case1():
    p = select_params("Case1", ErrorBudget(0.0, 0.01, 0.0025), 0.5, 0.1)
    assert p.alpha == pytest.approx(0.05) and p.beta == pytest.approx(0.0025)


def test_select_params_case_mismatch():
    with pytest.raises(CaseMismatch):
        select_params("Case1", ErrorBudget(0.0, 0.001, 0.01), 0.5, 0.1)
    with pytest.raises(CaseMismatch):
        select_params("Case2", ErrorBudget(0.0, 0.01, 0.001), 0.5, 0.1)


def test_select_params_att():
    p = select_params("ATT", ErrorBudget(0.01, 0.0, 0.01), 1.0, 0.2, c_u=0.1, C_u=1.0)
    assert p.alpha == pytest.approx(0.005) and p.beta == pytest.approx(0.0025)


def test_select_params_strict_raises_on_smallness():
    budget = ErrorBudget.uniform(0.01)
    loose = select_params("Case1", budget, 0.5, 0.1, w_sup=1.0, moment=1.0)
    assert not all(ok for _, _, ok in loose.conditions.values())
    with pytest.raises(NTooSmall):
        select_params("Case1", budget, 0.5, 0.1, w_sup=1.0, moment=1.0, strict=True)


def test_case1_substitution():
    center = NuisancePair.of(0.5, 0.5, 0.5)
    fam = construct("Case1", center, uniform_partition(1, 2), PerturbationParams("Case1", 0.05, 0.0025))
    x = np.array([[0.3]])
    m, g1, g0 = fam.values(x, np.array([1.0]))
    assert m[0] == pytest.approx(0.4975)
    assert g1[0] == pytest.approx(0.55 * 0.5 / 0.4975)
    assert g1[0] == pytest.approx(0.552764, abs=1e-6)
    assert g0[0] == 0.5


@pytest.mark.parametrize("case", CASES)
def test_null_perturbation(case, center, weight):
    fam = build_family(center, weight, case, case_budget(case), LEVELS)
    null = fam.with_coefficients(**{k: 0.0 for k in fam.coefficients})
    x = np.random.default_rng(0).random((200, 1))
    for D in (-1.0, 1.0):
        got = null.values(x, np.full(200, D))
        for a, b in zip(got, center.functions):
            assert np.max(np.abs(a - b(x))) <= 1e-15


def test_oracle_shift_substitution():
    center = NuisancePair.of(0.4, 0.5, 0.3)
    fam = construct("OracleShift", center, None, PerturbationParams("OracleShift", xi=0.1), 1.0)
    pair = fam.pair()
    x = np.array([[0.2], [0.8]])
    assert np.allclose(pair.g1(x), 0.6)
    assert np.allclose(pair.m(x), 0.4) and np.allclose(pair.g0(x), 0.3)


def test_oracle_shift_functional_gap():
    center = NuisancePair.of(random_grid(0.3, 0.7, 16, seed=1), random_grid(0.3, 0.7, 16, seed=2), 0.4)
    w = random_grid(0.5, 1.5, 16, seed=3)
    fam = build_family(center, w, "OracleShift", ErrorBudget(), 0, n=1000)
    gap = true_wate(fam.pair(), w) - true_wate(center, w)
    w_sq = float(np.mean(w.values**2))
    assert gap == pytest.approx(fam.params.xi * w_sq, abs=1e-12)
    assert verify_separation(fam, [None]).ok


def test_out_of_range_construction_rejected():
    center = NuisancePair.of(0.5, 0.95, 0.5)
    with pytest.raises(ConstructionInvalid):
        construct("Case1", center, uniform_partition(1, 2), PerturbationParams("Case1", 0.2, 0.01))


@pytest.mark.parametrize("case", CASES)
def test_mixture_equality_and_closed_form(case, center, weight):
    fam = build_family(center, weight, case, case_budget(case), LEVELS)
    assert verify_mixture_equality(fam) <= 1e-12
    assert closed_form_residual(fam) <= 1e-12


def test_doubled_beta_breaks_mixture():
    center = NuisancePair.of(0.5, 0.5, 0.5)
    fam = construct("Case1", center, uniform_partition(1, 2), PerturbationParams("Case1", 0.05, 0.0025))
    assert verify_mixture_equality(fam) <= 1e-15
    bad = fam.mutated("m.beta", fam.params.beta)
    assert verify_mixture_equality(bad) > 1e-4


@pytest.mark.parametrize("case", CASES)
def test_every_coefficient_mutation_is_flagged(case, center, weight):
    fam = build_family(center, weight, case, case_budget(case), LEVELS)
    for name in fam.coefficients:
        bad = fam.mutated(name, 1e-3)
        flagged = verify_mixture_equality(bad) > 1e-10 or closed_form_residual(bad) > 1e-10
        assert flagged, f"{case}: mutation of {name} went unnoticed"


def test_null_params_separation_and_chi_square(center, weight):
    fam = build_family(center, weight, "Case1", case_budget("Case1"), 4)
    null = fam.with_coefficients(**{k: 0.0 for k in fam.coefficients})
    null = type(fam)(**{**null.__dict__, "params": PerturbationParams("Case1", 0.0, 0.0)})
    lams = [rademacher(null.M, np.random.default_rng(i)) for i in range(5)]
    rep = verify_separation(null, lams)
    assert rep.required == 0 and np.max(np.abs(rep.gaps)) <= 1e-15
    assert chi_square_premises(null).b <= 1e-30


def test_choose_u_constant_effect():
    aux = choose_u(NuisancePair.of(ramp(0.3, 0.7), 0.7, 0.3), 16)
    x = np.random.default_rng(0).random((100, 1))
    assert np.all(aux.u(x) == 1.0) and aux.c_u == 1.0


@pytest.mark.parametrize("K,M", [(1, 64), (2, 16), (3, 64)])
def test_choose_u_bounds(K, M):
    m = GridFunction(np.random.default_rng(K).uniform(0.2, 0.8, (4,) * K))
    g1 = GridFunction(np.random.default_rng(K + 10).uniform(0.1, 0.9, (4,) * K))
    center = NuisancePair.of(m, g1, 0.4, K=K)
    aux = choose_u(center, M)
    q = Quadrature.from_edges([np.linspace(0, 1, s * 8 + 1) for s in grid_shape(K, M)])
    u = aux.u(q.nodes)
    assert np.max(np.abs(u)) <= aux.C_u
    mh = center.m(q.nodes)
    assert q.weights @ (u / (mh * (1 - mh))) >= aux.c_u
    # paired cells cancel the centered effect
    assert aux.partition.M == M


def test_cell_mass_uniform(center, weight):
    for case in CASES:
        rep = chi_square_premises(build_family(center, weight, case, case_budget(case), LEVELS))
        assert rep.bound_ok, case
