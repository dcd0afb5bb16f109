import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from youngcharge.charge import (
    ChargeFormatError,
    FaberCoeffs,
    GridCharge,
    analyze,
    coeffs_from_dict,
    coeffs_to_dict,
    density_charge,
    holder_norm,
    holder_profile,
    isoperimetric_check,
    pullback_affine,
    read_charge,
    restrict,
    synthesize,
    write_charge,
)
from youngcharge.dyadic import CubeId, DyadicFigure
from youngcharge.field import SampledField
from youngcharge.generators import random_figure, random_holder_charge


def haar_density(d, M):
    """g_{0,0,1} sampled as a field: +1 on even children, -1 on odd children."""
    def fn(*xs):
        return np.where(xs[0] < 0.5, 1.0, -1.0) + 0 * sum(xs)
    return SampledField.from_function(fn, d, M, 1.0)


def test_lebesgue_analysis():
    c = analyze(GridCharge.lebesgue(2, 4))
    assert c.mass == pytest.approx(1.0)
    assert all(np.all(a == 0) for a in c.a)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_haar_function_charge_analysis(d):
    omega = density_charge(haar_density(d, 3), 3)
    c = analyze(omega)
    assert c.mass == pytest.approx(0.0, abs=1e-15)
    assert c.a[0][0, 0] == pytest.approx(1.0)
    rest = np.concatenate([c.a[0][0, 1:]] + [a.reshape(-1) for a in c.a[1:]])
    assert np.allclose(rest, 0.0, atol=1e-15)


def test_synthesize_examples():
    leb = synthesize(FaberCoeffs.zeros(2, 3, mass=1.0))
    assert np.allclose(leb.leaves, 2.0**-6)
    one = FaberCoeffs(1, 1, 0.0, [np.array([[1.0]])])
    assert synthesize(one).leaves.tolist() == [0.5, -0.5]
    assert analyze(synthesize(one)).a[0][0, 0] == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_round_trip(d, N, seed):
    rng = np.random.default_rng(seed)
    omega = GridCharge(d, N, rng.standard_normal(1 << (N * d)))
    back = synthesize(analyze(omega))
    assert np.max(np.abs(back.leaves - omega.leaves)) <= 1e-12
    c = analyze(omega)
    again = analyze(synthesize(c))
    assert all(np.allclose(x, y, atol=1e-12) for x, y in zip(c.a, again.a))


def test_synthesize_linear():
    rng = np.random.default_rng(1)
    c1 = analyze(random_holder_charge(2, 4, 0.9, rng))
    c2 = analyze(random_holder_charge(2, 4, 0.9, rng))
    lhs = synthesize(c1 + c2.scale(2.0)).leaves
    rhs = synthesize(c1).leaves + 2 * synthesize(c2).leaves
    assert np.allclose(lhs, rhs, atol=1e-15)


def test_additivity():
    rng = np.random.default_rng(2)
    omega = GridCharge(2, 5, rng.standard_normal(1 << 10))
    for n in range(5):
        kids = omega.level(n + 1).reshape(-1, 4).sum(axis=1)
        assert np.allclose(omega.level(n), kids, atol=1e-13)


def test_holder_norm_examples():
    leb = GridCharge.lebesgue(2, 5)
    assert holder_norm(leb, 0.8) == pytest.approx(1.0)
    assert holder_profile(leb, 0.8).argmax() == 0
    rng = np.random.default_rng(3)
    omega = random_holder_charge(2, 4, 0.9, rng)
    assert holder_norm(omega.scale(-3.0), 0.9) == pytest.approx(3 * holder_norm(omega, 0.9))


def test_holder_norm_brute_force():
    omega = density_charge(haar_density(2, 4), 4)
    gamma = 0.9
    brute = 0.0
    for n in range(5):
        for k in range(1 << (2 * n)):
            c = CubeId(2, n, k)
            # independent evaluation: sum leaves geometrically inside the cube
            lo = np.array([float(a) for a, _ in c.bounds()])
            val = 0.0
            for leaf in range(1 << 8):
                p = np.array(CubeId(2, 4, leaf).coords()) / 16
                if np.all(p >= lo) and np.all(p < lo + c.side):
                    val += omega.leaves[leaf]
            brute = max(brute, abs(val) * 2 ** (n * 2 * gamma))
    assert holder_norm(omega, gamma) == pytest.approx(brute)


def test_holder_norm_exponent_range():
    with pytest.raises(ValueError):
        holder_norm(GridCharge.lebesgue(2, 2), 0.5)
    with pytest.raises(ValueError):
        holder_norm(GridCharge.lebesgue(2, 2), 1.1)


def test_density_charge_examples():
    one = SampledField.constant(1.0, 2, 4)
    assert np.allclose(density_charge(one, 3).leaves, GridCharge.lebesgue(2, 3).leaves)
    lin = SampledField.from_function(lambda x: 2 * x, 1, 6)
    omega = density_charge(lin, 2)
    assert omega.value(CubeId(1, 2, 1)) == pytest.approx(3 / 16)
    ind = SampledField.from_function(lambda x, y: ((x < 0.5) & (y < 0.5)).astype(float), 2, 4)
    om = density_charge(ind, 2)
    inside = DyadicFigure.from_cubes([CubeId(2, 1, 0)], 2)
    expect = np.zeros(16)
    expect[inside.cells] = 1 / 16
    assert np.allclose(om.leaves, expect)
    with pytest.raises(ValueError):
        density_charge(lin, 7)


def test_restrict():
    rng = np.random.default_rng(4)
    omega = random_holder_charge(2, 4, 0.9, rng)
    assert np.array_equal(restrict(omega, CubeId(2, 0, 0)).leaves, omega.leaves)
    K = CubeId(2, 1, 2)
    r = restrict(omega, K)
    for leaf in range(256):
        L = CubeId(2, 4, leaf)
        assert r.value(L) == (omega.value(L) if K.contains(L) else 0.0)
    assert holder_norm(r, 0.9) <= holder_norm(omega, 0.9) + 1e-15
    for _ in range(20):
        F = random_figure(2, 4, rng)
        KF = DyadicFigure.from_cubes([K], 4).intersection(F)
        assert r.evaluate(F) == pytest.approx(omega.evaluate(KF), abs=1e-15)


def test_pullback():
    rng = np.random.default_rng(5)
    omega = random_holder_charge(2, 5, 0.9, rng)
    assert np.array_equal(pullback_affine(omega, CubeId(2, 0, 0)).leaves, omega.leaves)
    leb = pullback_affine(GridCharge.lebesgue(2, 4), CubeId(2, 1, 3))
    assert np.allclose(leb.leaves, GridCharge.lebesgue(2, 3).leaves / 4)
    K = CubeId(2, 2, 9)
    pb = pullback_affine(omega, K)
    assert pb.depth == 3
    kc = np.array(K.coords())
    for m in range(4):
        for k in range(1 << (2 * m)):
            L = CubeId(2, m, k)
            image = CubeId.from_coords(2, K.n + m, kc * (1 << m) + np.array(L.coords()))
            assert pb.value(L) == pytest.approx(omega.value(image), abs=1e-15)
    gamma = 0.9
    assert holder_norm(pb, gamma) <= holder_norm(omega, gamma) * K.volume**gamma * (1 + 1e-12)
    with pytest.raises(ValueError):
        pullback_affine(omega, CubeId(2, 6, 0))


def test_isoperimetric_unit_cube():
    gamma, d = 0.9, 2
    rep = isoperimetric_check(GridCharge.lebesgue(d, 3), gamma, [DyadicFigure.full(d), DyadicFigure(d, 2, [])])
    assert rep.excluded == 1
    assert rep.max_ratio == pytest.approx((1 / (2 * d)) ** (d * (1 - gamma)))


def test_isoperimetric_bounded_on_random_figures():
    rng = np.random.default_rng(6)
    for _ in range(5):
        omega = random_holder_charge(2, 5, 0.95, rng)
        figs = [random_figure(2, 5, rng) for _ in range(50)]
        assert isoperimetric_check(omega, 0.95, figs).max_ratio < 2.0


def test_decay_two_sided():
    # explicit constants: upper 2^{d(1-gamma)}, lower from the geometric series over generations
    rng = np.random.default_rng(7)
    d, gamma = 2, 0.9
    q = 2.0 ** (-d * (1 - gamma))
    lower_c = (2**d - 1) * q / (1 - q)
    for _ in range(10):
        g = SampledField(rng.uniform(-1, 1, (64, 64)), 1.0)
        omega = density_charge(g, 6)
        c = analyze(omega)
        norm = holder_norm(omega, gamma)
        D = c.decay_constant(gamma)
        assert D <= 2 ** (d * (1 - gamma)) * norm * (1 + 1e-12)
        assert norm <= max(abs(c.mass), lower_c * D) * (1 + 1e-12)


def test_stability_of_partial_sums():
    rng = np.random.default_rng(8)
    d, N, gamma = 2, 7, 0.9
    omega = random_holder_charge(d, N, gamma, rng)
    c = analyze(omega)
    weighted = []
    norms = []
    for p in range(1, N + 1):
        part = FaberCoeffs(d, N, c.mass, [a if n < p else np.zeros_like(a) for n, a in enumerate(c.a)])
        wp = synthesize(part)
        norms.append(holder_norm(wp, gamma))
        weighted.append(max(np.abs(wp.level(n) - omega.level(n)).max() * 2 ** (n * (d - 1))
                            for n in range(N + 1)))
    assert max(norms) <= 4 * holder_norm(omega, gamma)
    assert weighted[-1] <= 1e-13
    assert all(b <= a + 1e-15 for a, b in zip(weighted, weighted[1:]))


def test_charge_file_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    omega = random_holder_charge(3, 3, 0.9, rng)
    path = tmp_path / "w.hchg"
    write_charge(path, omega, {"origin": "test"})
    back = read_charge(path)
    assert back.leaves.tobytes() == omega.leaves.tobytes()
    assert back.gamma == 0.9 and back.d == 3 and back.depth == 3
    assert back.meta["provenance"] == {"origin": "test"}
    write_charge(path, GridCharge(2, 1, [1, 2, 3, 4]))
    assert read_charge(path).gamma is None


def test_charge_file_errors(tmp_path):
    path = tmp_path / "bad.hchg"
    write_charge(path, GridCharge.lebesgue(2, 2))
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(ChargeFormatError, match="magic"):
        read_charge(path)
    write_charge(path, GridCharge.lebesgue(2, 2))
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(ChargeFormatError, match="version"):
        read_charge(path)
    write_charge(path, GridCharge.lebesgue(2, 2))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ChargeFormatError):
        read_charge(path)


def test_coefficient_json_round_trip():
    rng = np.random.default_rng(10)
    c = analyze(random_holder_charge(2, 3, 0.9, rng))
    back = coeffs_from_dict(coeffs_to_dict(c))
    assert back.mass == c.mass
    assert all(np.array_equal(x, y) for x, y in zip(back.a, c.a))
    with pytest.raises(ChargeFormatError):
        coeffs_from_dict({"format": "other"})


def test_shape_validation():
    with pytest.raises(ValueError):
        GridCharge(2, 2, np.zeros(15))
    with pytest.raises(ValueError):
        FaberCoeffs(2, 1, 0.0, [np.zeros((1, 2))])
    with pytest.raises(ValueError):
        GridCharge.lebesgue(2, 2) + GridCharge.lebesgue(2, 3)
    assert math.isclose(GridCharge.lebesgue(2, 3).truncate(1).mass, 1.0)
