import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from youngcharge.charge import GridCharge, density_charge, holder_norm
from youngcharge.dyadic import CubeId, DyadicFigure
from youngcharge.field import SampledField
from youngcharge.generators import (
    random_figure,
    random_holder_charge,
    random_piecewise_constant,
    weierstrass_field,
)
from youngcharge.young import (
    SeedFunction,
    check_exponents,
    fit_rate,
    indefinite,
    locality_check,
    riemann_seed,
    riemann_sum,
    sew,
    series_tail,
    tail_constant,
    young_integral,
    young_loeve_bound,
    young_loeve_error,
)


def test_lebesgue_integral_closed_form():
    f = SampledField.from_function(lambda x, y: np.exp(x) * np.cos(y), 2, 7)
    res = young_integral(f, GridCharge.lebesgue(2, 5), 0.9)
    assert res.value == pytest.approx((math.e - 1) * math.sin(1), rel=1e-10)
    assert res.generations_used == 5


def test_density_integral_is_product_integral():
    f = SampledField.from_function(lambda x, y: x + y, 2, 6)
    g = SampledField.from_function(lambda x, y: x * y, 2, 6)
    omega = density_charge(g, 6)
    res = young_integral(f, omega, 0.9)
    # integral of (x + y) x y over the unit square is 1/3
    assert res.value == pytest.approx(1 / 3, abs=2**-10)
    assert abs(res.value - 1 / 3) <= res.total_bound


def test_exponent_condition():
    assert check_exponents(0.5, 0.8, 2) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        check_exponents(0.3, 0.8, 2)
    f = SampledField.from_function(lambda x, y: x, 2, 4, beta=0.2)
    with pytest.raises(ValueError):
        young_integral(f, GridCharge.lebesgue(2, 3), 0.8)


def test_pair_validation():
    f = SampledField.from_function(lambda x: x, 1, 3)
    with pytest.raises(ValueError):
        young_integral(f, GridCharge.lebesgue(2, 3), 0.9)
    with pytest.raises(ValueError):
        young_integral(f, GridCharge.lebesgue(1, 4), 0.9)


def test_series_tail_geometric():
    d, beta, gamma = 2, 1.0, 0.8
    rate = d - d * gamma - beta
    t5, t6 = (series_tail(d, beta, gamma, 1.0, 1.0, N) for N in (5, 6))
    assert t6 / t5 == pytest.approx(2**rate)
    assert tail_constant(1, 1.0, 1.0) == 1.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_integral_bilinear(seed):
    rng = np.random.default_rng(seed)
    f1 = random_piecewise_constant(2, 5, 2, rng)
    f2 = weierstrass_field(2, 5, 0.8, rng)
    w1 = random_holder_charge(2, 4, 0.9, rng)
    w2 = random_holder_charge(2, 4, 0.9, rng)
    a, b = rng.uniform(-2, 2, 2)
    lhs = young_integral(f1.scale(a) + f2.scale(b), w1, 0.9).value
    rhs = a * young_integral(f1, w1, 0.9).value + b * young_integral(f2, w1, 0.9).value
    assert lhs == pytest.approx(rhs, abs=1e-12)
    lhs = young_integral(f2, w1.scale(a) + w2.scale(b), 0.9).value
    rhs = a * young_integral(f2, w1, 0.9).value + b * young_integral(f2, w2, 0.9).value
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_riemann_sum_examples():
    one = SampledField.constant(1.0, 2, 5)
    rng = np.random.default_rng(1)
    omega = random_holder_charge(2, 5, 0.9, rng)
    for m in range(6):
        assert riemann_sum(one, omega, m) == pytest.approx(omega.mass)
    with pytest.raises(ValueError):
        riemann_sum(one, omega, 6)


def test_riemann_sum_at_full_depth_matches_series_for_piecewise_constant():
    rng = np.random.default_rng(2)
    f = random_piecewise_constant(2, 4, 4, rng)
    omega = random_holder_charge(2, 4, 0.9, rng)
    # f is constant on every leaf, so the center-tagged sum is the integral
    assert riemann_sum(f, omega, 4, "center") == pytest.approx(young_integral(f, omega, 0.9).value, abs=1e-13)


def test_sewing_additive_seed_is_identity():
    rng = np.random.default_rng(3)
    omega = random_holder_charge(2, 5, 0.9, rng)
    seed = SeedFunction.from_charge(omega)
    theta, gap = sew(seed, 0.9, 5)
    assert gap == 0.0
    assert np.array_equal(theta.leaves, omega.leaves)
    assert seed.observed_kappa(5) == pytest.approx(0.0, abs=1e-13)


def test_sewing_gap_bound_holds():
    rng = np.random.default_rng(4)
    f = weierstrass_field(2, 7, 0.9, rng)
    omega = random_holder_charge(2, 6, 0.95, rng)
    seed = riemann_seed(f, omega, 0.95)
    assert seed.observed_kappa(6) <= seed.kappa
    theta, gap = sew(seed, 0.95, 6)
    for n in range(6):
        diff = np.abs(seed.values(n) - theta.level(n))
        assert diff.max() <= gap * 2.0 ** (-n * 2 * (1 + seed.eps)) * (1 + 1e-12)


def test_indefinite_total_agrees_with_series():
    rng = np.random.default_rng(5)
    f = weierstrass_field(2, 8, 1.0, rng)
    omega = random_holder_charge(2, 7, 0.9, rng)
    res = young_integral(f, omega, 0.9)
    theta = indefinite(f, omega, 0.9)
    assert abs(theta.mass - res.value) <= theta.meta["tail_bound"] + res.total_bound


def test_indefinite_against_lebesgue():
    f = SampledField.from_function(lambda x, y: x * y, 2, 9)
    theta = indefinite(f, GridCharge.lebesgue(2, 7), 0.9, tag="average")
    # average tags reproduce exact cell integrals of the field
    assert theta.mass == pytest.approx(0.25, rel=1e-12)
    quarter = DyadicFigure.from_cubes([CubeId(2, 1, 0)], 7)
    assert theta.evaluate(quarter) == pytest.approx(1 / 64, rel=1e-12)


def test_young_loeve_envelope():
    rng = np.random.default_rng(6)
    f = weierstrass_field(2, 7, 0.9, rng)
    omega = random_holder_charge(2, 6, 0.95, rng)
    theta = indefinite(f, omega, 0.95)
    norm = holder_norm(omega, 0.95)
    for _ in range(30):
        fig = random_figure(2, 6, rng)
        err = young_loeve_error(f, omega, 0.95, fig, primitive=theta)
        assert err <= young_loeve_bound(f, omega, 0.95, fig, norm=norm)


def test_locality():
    rng = np.random.default_rng(7)
    N = 5
    mask = np.zeros((32, 32), bool)
    mask[:16] = True
    left = DyadicFigure.from_mask(mask)
    f = SampledField.from_function(lambda x, y: np.maximum(x - 0.5, 0) ** 2, 2, N)
    omega = random_holder_charge(2, N, 0.9, rng)
    rep = locality_check(f, omega, 0.9, left)
    assert rep.ok and rep.case == "field"
    leaves = omega.leaves.copy()
    leaves[left.cells] = 0.0
    rep = locality_check(weierstrass_field(2, N, 1.0, rng), GridCharge(2, N, leaves), 0.9, left)
    assert rep.ok and rep.case == "charge" and rep.value == 0.0
    with pytest.raises(ValueError):
        locality_check(weierstrass_field(2, N, 1.0, rng), omega, 0.9, left)


def test_fit_rate():
    ms = np.arange(1, 8)
    assert fit_rate(ms, 3 * 2.0 ** (-0.7 * ms)) == pytest.approx(0.7)
    with pytest.raises(ValueError):
        fit_rate([1, 2], [0.0, 1.0])


def test_result_dict_keys():
    f = SampledField.constant(1.0, 1, 3)
    d = young_integral(f, GridCharge.lebesgue(1, 3), 0.5).to_dict()
    assert set(d) == {"value", "truncationBound", "discretizationBound", "generationsUsed", "riemannTable"}
