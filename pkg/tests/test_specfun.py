import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from smtinv.forward import SphereGrid
from smtinv.specfun import (
    CoeffTable,
    binom,
    coeff_E,
    coeff_E_sum,
    d_weights,
    gegenbauer,
    gegenbauer_at_one,
    harmonic_count,
    inner_sum_check,
    mode_indices,
    mode_prefactor,
    ode_coeff_eval,
    ode_coeffs,
    radial_prefactor,
    real_sph_harm,
    surface_area,
)

T = sp.symbols("t", positive=True)


def laurent_expr(table: CoeffTable, m: int, prefactor) -> sp.Expr:
    return sum(
        (sp.Rational(c.numerator, c.denominator) * (1 - T) ** a / T**b
         for (a, b), c in table.laurent(m, prefactor).items()),
        sp.Integer(0),
    )


# -- elementary functions ----------------------------------------------------


def test_binom_zero_convention():
    assert binom(5, 2) == 10
    assert binom(3, -1) == 0 and binom(3, 4) == 0 and binom(-1, -1) == 0


def test_binom_extended_convention():
    assert binom(-1, -1, "extended") == 1
    assert binom(-1, 2, "extended") == 1  # (-1)^2 C(2, 2)
    assert binom(-3, 1, "extended") == -3
    assert binom(-2, -1, "extended") == 0
    with pytest.raises(ValueError):
        binom(2, 1, "contour")


@given(st.integers(0, 40), st.integers(-5, 45))
def test_binom_conventions_agree_for_nonnegative_top(a, b):
    assert binom(a, b) == binom(a, b, "extended")


def test_surface_area():
    assert surface_area(1) == pytest.approx(2 * math.pi)
    assert surface_area(2) == pytest.approx(4 * math.pi)
    assert surface_area(3) == pytest.approx(2 * math.pi**2)


def test_gegenbauer_examples():
    assert gegenbauer(0, 2.3, 0.17) == 1
    assert gegenbauer(1, 1.5, 0.4) == pytest.approx(1.2)
    x = 0.7
    assert gegenbauer(4, 0.5, x) == pytest.approx((35 * x**4 - 30 * x**2 + 3) / 8, abs=1e-14)


@given(st.integers(0, 8), st.sampled_from([0.5, 1.0, 1.5, 2.5]), st.floats(-1, 1))
def test_gegenbauer_matches_sympy(q, lam, x):
    ref = float(sp.gegenbauer(q, sp.nsimplify(lam), sp.Float(x, 30)))
    assert gegenbauer(q, lam, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_gegenbauer_at_one():
    assert gegenbauer_at_one(0, 5) == 1
    assert all(gegenbauer_at_one(q, 3) == 1 for q in range(6))
    # Gamma(q + 2 lam) / (Gamma(2 lam) q!) with lam = 3/2: 4! / (2! 2!) = 6
    assert gegenbauer_at_one(2, 5) == 6
    for q in range(6):
        for n in (3, 5, 7, 9):
            assert float(gegenbauer_at_one(q, n)) == pytest.approx(gegenbauer(q, (n - 2) / 2, 1.0))


def test_harmonic_count():
    assert harmonic_count(0, 7) == 1
    assert harmonic_count(1, 3) == 3
    assert harmonic_count(2, 5) == 14
    assert all(harmonic_count(q, 3) == 2 * q + 1 for q in range(8))


def test_harmonic_count_brute_force_n5_q2():
    # dimension of harmonic homogeneous quadratics in 5 variables:
    # all quadratics (15) minus multiples of |x|^2 (1)
    assert harmonic_count(2, 5) == math.comb(2 + 4, 4) - math.comb(0 + 4, 4)


# -- spherical harmonics -----------------------------------------------------


def test_real_sph_harm_constant_mode():
    th = np.linspace(0.1, 3.0, 7)
    assert np.allclose(real_sph_harm(0, 1, th, 2 * th), 1 / math.sqrt(4 * math.pi))


def test_real_sph_harm_orthonormal():
    grid = SphereGrid.for_degree(6)
    modes = mode_indices(3)
    Y = np.array([real_sph_harm(q, s, grid.theta, grid.phi) for q, s in modes])
    gram = (Y * grid.weights) @ Y.T
    assert np.max(np.abs(gram - np.eye(len(modes)))) < 1e-10
    i, j = modes.index((1, 1)), modes.index((2, 3))
    assert abs(gram[i, j]) < 1e-10


def test_mode_indices_count():
    assert len(mode_indices(4)) == sum(2 * q + 1 for q in range(5))


# -- D-operator weights and E coefficients ------------------------------------


def test_d_weights_examples():
    assert d_weights(1) == [1]
    assert d_weights(2) == [-1, 1]
    assert d_weights(3)[0] == 3


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_d_weights_against_sympy(r):
    f = sp.Function("f")
    expr = f(T)
    for _ in range(r):
        expr = sp.diff(expr, T) / T
    expected = sum(w * sp.diff(f(T), T, j) / T ** (2 * r - j)
                   for j, w in enumerate((sp.Rational(x.numerator, x.denominator)
                                          for x in d_weights(r)), start=1))
    assert sp.simplify(sp.expand(expr - expected)) == 0


def test_coeff_E_examples():
    assert coeff_E(1, 1, 2) == 1
    for l in range(1, 8):
        for m in range(1, l + 1):
            assert coeff_E(l, m, l) == 0
        assert coeff_E(l, l, l) == 0


def test_abel_aigner_two_forms_agree():
    for l in range(1, 9):
        for n in range(1, l + 1):
            for m in range(1, n + 1):
                assert coeff_E(n, m, l) == coeff_E_sum(n, m, l)


def test_inner_sum_examples():
    assert inner_sum_check(1, 0) == (2, 2)
    assert inner_sum_check(2, 0) == (12, 12)
    assert inner_sum_check(2, 2) == (8, 8)


def test_inner_sum_k0_depends_on_convention():
    assert inner_sum_check(0, 0) == (0, 1)
    assert inner_sum_check(0, 0, "extended") == (1, 1)


@pytest.mark.parametrize("k", range(0, 9))
def test_inner_sum_extended_all(k):
    for l in range(k + 1):
        lhs, rhs = inner_sum_check(k, l, "extended")
        assert lhs == rhs
        if k >= 1:
            assert inner_sum_check(k, l) == (lhs, rhs)


# -- ODE coefficients -----------------------------------------------------------


def test_ode_coeffs_K0():
    assert dict(ode_coeffs(0).terms) == {(0, 0, 0): Fraction(1)}


def test_prefactors():
    assert radial_prefactor(1) == -4
    assert radial_prefactor(2) == 32
    assert mode_prefactor(1, 0) == Fraction(-1, 2)
    for k in range(6):
        assert radial_prefactor(k) == mode_prefactor(0, k) * 4**k


def test_n5_ode_symbolic():
    table = ode_coeffs(1)
    pref = radial_prefactor(1)
    assert sp.simplify(laurent_expr(table, 1, pref) - (-8 * (1 - T) ** 2 / T)) == 0
    assert sp.simplify(laurent_expr(table, 0, pref) - (-8 * (1 - T) * (1 + T + T**2) / T**2)) == 0
    # before the prefactor
    assert sp.simplify(laurent_expr(table, 1, 1) - 2 * (1 - T) ** 2 / T) == 0
    assert sp.simplify(laurent_expr(table, 0, 1)
                       - (2 * (1 - T) + 4 * (1 - T) / T + 2 * (1 - T) ** 2 / T**2)) == 0


def test_n7_ode_symbolic():
    table = ode_coeffs(2)
    pref = radial_prefactor(2)
    assert sp.simplify(laurent_expr(table, 2, pref) - 128 * (1 - T) ** 3 / T**2) == 0
    assert sp.simplify(laurent_expr(table, 1, pref) - 384 * (1 - T) ** 2 * (1 + T + T**2) / T**3) == 0
    assert sp.simplify(laurent_expr(table, 0, pref) - 384 * (1 - T**5) / T**4) == 0


def test_ode_coeff_eval_examples():
    table = ode_coeffs(1)
    assert ode_coeff_eval(table, 1, 0.5, radial_prefactor(1)) == pytest.approx(-4.0, abs=1e-14)
    assert ode_coeff_eval(table, 0, 0.5, radial_prefactor(1)) == pytest.approx(-28.0, abs=1e-13)


@pytest.mark.parametrize("K", range(0, 7))
def test_leading_coefficient(K):
    table = ode_coeffs(K)
    expr = laurent_expr(table, K, 1)
    assert sp.simplify(expr - 2**K * (1 - T) ** (K + 1) / T**K) == 0


def test_coeff_table_json():
    d = ode_coeffs(2).to_dict()
    assert d["K"] == 2 and d["entries"]
    assert all({"m", "n", "l", "num", "den"} <= set(e) for e in d["entries"])
