import numpy as np
import pytest
from scipy.optimize import brentq

from picone_lab import (ExponentField, InvalidInputError, ScalarField, build_grid,
                        full_mask)
from picone_lab.lebesgue import (holder_check, luxemburg_norm, modular,
                                 norm_modular_relations)

# Continuum root of the unit-modular equation for u = 1+x, p = 2+x on (0,1),
# computed with adaptive quadrature and Brent root finding.
CONTINUUM_ROOT_1PX = 1.5720306675895044


def unit_interval(n=101):
    g = build_grid([(0, 1)], [n])
    return g, full_mask(g)


def unit_square(n=17):
    g = build_grid([(0, 1), (0, 1)], [n, n])
    return g, full_mask(g)


def random_exponent(g, mask, rng, lo=1.5, hi=3.5):
    mid = rng.uniform(lo + 0.2, hi - 0.2)
    amp = rng.uniform(0.05, min(mid - lo, hi - mid))
    freq = rng.uniform(0.5, 3.0)
    vals = ScalarField.from_function(
        g, lambda *cs: mid + amp * np.sin(freq * sum(cs)))
    return ExponentField.from_field(vals, mask)


def test_modular_of_zero_field():
    g, m = unit_square()
    assert modular(ScalarField.constant(g, 0.0), ExponentField.constant(g, 2.0), m) == 0.0


def test_modular_constant_field():
    g, m = unit_square(33)
    val = modular(ScalarField.constant(g, 2.0), ExponentField.constant(g, 2.0), m)
    assert val == pytest.approx(4.0, abs=1e-12)


def test_modular_cubic():
    g, m = unit_interval()
    u = ScalarField.from_function(g, lambda x: x)
    val = modular(u, ExponentField.constant(g, 3.0), m)
    assert val == pytest.approx(0.25, abs=1e-4)


def test_luxemburg_norm_of_one_on_unit_measure_domain():
    g, m = unit_square(33)
    p = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + x + y), m)
    assert luxemburg_norm(ScalarField.constant(g, 1.0), p, m) == pytest.approx(1.0, abs=1e-10)


def test_luxemburg_norm_constant_exponent_homogeneity():
    g, m = unit_square(33)
    p = ExponentField.constant(g, 2.0)
    assert luxemburg_norm(ScalarField.constant(g, 2.0), p, m) == pytest.approx(2.0, abs=1e-10)


def test_luxemburg_norm_zero_field():
    g, m = unit_square()
    assert luxemburg_norm(ScalarField.constant(g, 0.0), ExponentField.constant(g, 2.0), m) == 0.0


def test_luxemburg_norm_against_independent_root_solve():
    # same grid, two routes: package bisection vs trapz + Brent on the
    # unit-modular equation
    g, m = unit_interval(201)
    x = g.coords[0]
    u = ScalarField.from_function(g, lambda x: 1 + x)
    p = ExponentField.from_field(ScalarField.from_function(g, lambda x: 2 + x), m)

    def discrete_modular(t):
        return np.trapezoid(((1 + x) / t) ** (2 + x), x) - 1.0

    oracle = brentq(discrete_modular, 0.5, 4.0, xtol=1e-14, rtol=8.9e-16)
    got = luxemburg_norm(u, p, m)
    assert got == pytest.approx(oracle, abs=1e-8)
    # grid value approaches the continuum root at second order
    assert got == pytest.approx(CONTINUUM_ROOT_1PX, abs=1e-4)


def test_luxemburg_norm_spec_constant_case_root():
    # for u = 2 on a measure-one domain the unit-modular equation has the
    # exact root t = 2 regardless of the exponent profile
    g, m = unit_interval(101)
    u = ScalarField.constant(g, 2.0)
    p = ExponentField.from_field(ScalarField.from_function(g, lambda x: 2 + x), m)
    assert luxemburg_norm(u, p, m) == pytest.approx(2.0, abs=1e-10)


def test_luxemburg_homogeneity_variable_exponent():
    g, m = unit_square(17)
    rng = np.random.default_rng(5)
    for _ in range(20):
        u = ScalarField(g, rng.uniform(-2, 2, g.shape))
        p = random_exponent(g, m, rng)
        c = rng.uniform(0.05, 20.0)
        cu = ScalarField(g, c * u.values)
        n1 = luxemburg_norm(cu, p, m)
        n2 = c * luxemburg_norm(u, p, m)
        assert abs(n1 - n2) <= 1e-9 * max(1.0, abs(n2))


def test_luxemburg_normalization_property():
    g, m = unit_square(17)
    rng = np.random.default_rng(6)
    p = random_exponent(g, m, rng)
    u = ScalarField(g, rng.uniform(0.1, 3.0, g.shape))
    t = luxemburg_norm(u, p, m)
    scaled = ScalarField(g, u.values / t)
    assert modular(scaled, p, m) == pytest.approx(1.0, abs=1e-9)


def test_modular_and_norm_monotone_in_the_field():
    g, m = unit_square(17)
    rng = np.random.default_rng(8)
    p = random_exponent(g, m, rng)
    u = rng.uniform(0.0, 1.0, g.shape)
    w = u + rng.uniform(0.0, 1.0, g.shape)
    fu, fw = ScalarField(g, u), ScalarField(g, w)
    assert modular(fu, p, m) <= modular(fw, p, m)
    assert luxemburg_norm(fu, p, m) <= luxemburg_norm(fw, p, m) * (1 + 1e-12)


def test_holder_equality_for_unit_constants():
    g, m = unit_square(33)
    one = ScalarField.constant(g, 1.0)
    rep = holder_check(one, one, ExponentField.constant(g, 2.0), m)
    assert rep.holds
    assert rep.lhs == pytest.approx(1.0, abs=1e-12)
    assert rep.rhs == pytest.approx(1.0, abs=1e-10)


def test_holder_affine_case():
    g, m = unit_interval(101)
    u = ScalarField.from_function(g, lambda x: x)
    v = ScalarField.from_function(g, lambda x: 1 - x)
    rep = holder_check(u, v, ExponentField.constant(g, 2.0), m)
    assert rep.lhs == pytest.approx(1.0 / 6.0, abs=1e-4)
    assert rep.holds


def test_holder_random_sweep():
    g, m = unit_square(9)
    rng = np.random.default_rng(9)
    p = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + np.sin(3 * x) ** 2), m)
    for _ in range(1000):
        u = ScalarField(g, rng.uniform(0.0, 2.0, g.shape))
        v = ScalarField(g, rng.uniform(0.0, 2.0, g.shape))
        assert holder_check(u, v, p, m).holds


def test_norm_modular_relations_unit_constant():
    g, m = unit_square(33)
    p = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + x), m)
    rep = norm_modular_relations(ScalarField.constant(g, 1.0), p, m)
    assert rep.norm == pytest.approx(1.0, abs=1e-9)
    assert rep.modular == pytest.approx(1.0, abs=1e-12)
    assert rep.all_hold


def test_norm_modular_power_sandwich():
    g, m = unit_square(17)
    p = ExponentField.from_field(
        ScalarField.from_function(g, lambda x, y: 2 + (x + y) / 2), m)
    u = ScalarField.constant(g, 2.0)
    rep = norm_modular_relations(u, p, m)
    assert rep.all_hold
    assert rep.norm ** 2 <= rep.modular <= rep.norm ** 3


def test_norm_modular_random_sweep():
    g, m = unit_square(9)
    rng = np.random.default_rng(10)
    for _ in range(300):
        u = ScalarField(g, rng.uniform(-3.0, 3.0, g.shape) * rng.uniform(0.1, 3.0))
        p = random_exponent(g, m, rng)
        assert norm_modular_relations(u, p, m).all_hold


def test_norm_and_modular_vanish_together():
    g, m = unit_square(17)
    rng = np.random.default_rng(11)
    p = random_exponent(g, m, rng)
    u = ScalarField(g, rng.uniform(0.5, 1.5, g.shape))
    for mth in range(1, 30, 4):
        scaled = ScalarField(g, u.values / mth)
        rep = norm_modular_relations(scaled, p, m)
        assert (rep.norm == 0.0) == (rep.modular == 0.0)


def test_norm_modular_sequence_decays_monotonically():
    g, m = unit_square(9)
    rng = np.random.default_rng(12)
    p = random_exponent(g, m, rng)
    u = ScalarField(g, rng.uniform(0.5, 2.0, g.shape))
    norms, mods = [], []
    for mth in (1, 2, 4, 8, 16, 64, 256):
        scaled = ScalarField(g, u.values / mth)
        norms.append(luxemburg_norm(scaled, p, m))
        mods.append(modular(scaled, p, m))
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert all(a > b for a, b in zip(mods, mods[1:]))
    assert norms[-1] < 1e-2 and mods[-1] < 1e-4


def test_luxemburg_rejects_bad_tol():
    g, m = unit_square(9)
    with pytest.raises(InvalidInputError):
        luxemburg_norm(ScalarField.constant(g, 1.0), ExponentField.constant(g, 2.0),
                       m, tol=0.0)
