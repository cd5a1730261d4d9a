import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbmcurrent.errors import PreconditionError
from fbmcurrent.frac_ops import apply_m_plus, eta, k_constant
from fbmcurrent.functions import GridFunction, HermiteSeries, Indicator
from fbmcurrent.numerics import truncated_exp
from fbmcurrent.stransform import (
    DonskerSpec,
    TestFunction,
    UFunctional,
    donsker_functional,
    donsker_s,
    donsker_s_truncated,
    fractional_noise_s,
    growth_bound_check,
    l2_inner,
    mc_donsker_s,
    noise_functional,
    time_profile,
    unit_functional,
    wick_product,
)

mp.mp.dps = 30
PHI1 = TestFunction.hermite([[0.3, 0.1]], 0.2, 0.8)
PHI2 = TestFunction.hermite([[0.2, -0.1, 0.05], [0.1, 0.15]], 0.4)
complex_z = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def _pairing_mpmath(f, h, t):
    """<f, eta_t> from the kernel c0((t-x)_+^p - (-x)_+^p), integrated by mpmath."""
    h = mp.mpf(h)
    p = h - mp.mpf(1) / 2
    c0 = mp.sqrt(mp.gamma(2 * h + 1) * mp.sin(mp.pi * h)) / mp.gamma(h + mp.mpf(1) / 2)
    fm = lambda x: mp.mpf(float(f(float(x))))  # noqa: E731
    left = mp.quad(lambda u: fm(-u) * ((t + u) ** p - u ** p), [0, 1, 12])
    right = mp.quad(lambda u: fm(t - u) * u ** p, [0, t])
    return float(c0 * (left + right))


# --- TestFunction ------------------------------------------------------------------

def test_test_function_norms_and_scaling():
    phi = TestFunction.hermite([[3.0, 4.0], [0.0, 0.0, 1.0]])
    assert phi.d == 2 and phi.norm2() == 26.0
    assert (2 * phi).norm2() == pytest.approx(104.0)
    assert TestFunction.zero(3).is_zero()
    with pytest.raises(PreconditionError):
        TestFunction(())
    with pytest.raises(PreconditionError):
        TestFunction((Indicator(0.0, 1.0),))


def test_grid_component_norm_is_exact_for_interpolant():
    g = GridFunction(0.0, 0.5, np.array([0.0, 1.0, 1.0, 0.0]))
    # triangles of area 1/3 * 0.5 each plus a flat unit square of width 0.5
    assert TestFunction((g,)).norm2() == pytest.approx(0.5 / 3 * 2 + 0.5)


# --- pairings <phi_j, eta_t> ------------------------------------------------------------

@pytest.mark.parametrize("h", [0.3, 0.7])
@pytest.mark.parametrize("t", [0.25, 1.0, 2.0])
def test_eta_pairing_against_mpmath(h, t):
    f = HermiteSeries((0.3, 0.1), 0.2, 0.8)
    assert l2_inner(f, eta(h, t)) == pytest.approx(_pairing_mpmath(f, h, t), abs=1e-12)


def test_eta_pairing_at_half_is_plain_integral():
    f = HermiteSeries((1.0,))
    ref = math.pi ** -0.25 * math.sqrt(math.pi / 2) * math.erf(1.0 / math.sqrt(2))
    assert l2_inner(f, eta(0.5, 1.0)) == pytest.approx(ref, rel=1e-12)


def test_l2_inner_generic_route():
    f = Indicator(0.0, 1.0)
    assert l2_inner(f, HermiteSeries((1.0,))) == pytest.approx(
        math.pi ** -0.25 * math.sqrt(math.pi / 2) * math.erf(1 / math.sqrt(2)), rel=1e-12)
    assert l2_inner(Indicator(0.0, 1.0), Indicator(2.0, 3.0)) == 0.0


@pytest.mark.parametrize("h", [0.3, 0.5, 0.8])
def test_time_profile_duality(h):
    prof = time_profile(h, PHI2, 1.5)
    for j in range(2):
        assert prof.consistency(j) < 1e-9
    t = np.array([0.1, 0.9, 1.5])
    direct = [l2_inner(PHI2[1], eta(h, ti)) for ti in t]
    assert np.allclose(prof.pairing(1, t), direct, atol=1e-13)
    assert np.allclose(prof.noise(0, t), apply_m_plus(h, PHI2[0], t), atol=1e-12)
    assert prof.pairings(t).shape == (2, 3)
    assert time_profile(h, PHI2, 1.5) is prof


# --- Donsker delta ---------------------------------------------------------------------

def test_donsker_at_zero_is_gaussian_density():
    spec = DonskerSpec((0.4, -0.2), 0.3, 2.0)
    var = 2.0 ** 0.6
    ref = (2 * math.pi * var) ** -1 * math.exp(-0.2 / (2 * var))
    assert donsker_s(spec, 0.0, PHI2) == pytest.approx(ref, rel=1e-14)
    assert donsker_s(spec, 1.3, TestFunction.zero(2)) == pytest.approx(ref, rel=1e-14)


def test_donsker_vectorized_over_z():
    spec = DonskerSpec(0.5, 0.7, 1.0)
    z = np.array([0.0, 1.0 + 0.5j, -2.0])
    vec = donsker_s(spec, z, PHI1)
    assert vec.shape == (3,)
    assert np.allclose(vec, [donsker_s(spec, zi, PHI1) for zi in z], rtol=1e-14)


def test_donsker_dimension_mismatch():
    with pytest.raises(PreconditionError):
        donsker_s(DonskerSpec((0.0, 0.0), 0.3, 1.0), 1.0, PHI1)


def test_truncation_zero_is_untruncated():
    a = DonskerSpec(0.3, 0.4, 1.0)
    b = DonskerSpec(0.3, 0.4, 1.0, truncation=0)
    assert donsker_s_truncated(b, 0.7 - 0.2j, PHI1) == pytest.approx(donsker_s(a, 0.7 - 0.2j, PHI1), rel=1e-14)
    with pytest.raises(PreconditionError):
        donsker_s(b, 1.0, PHI1)
    with pytest.raises(PreconditionError):
        donsker_s_truncated(a, 1.0, PHI1)


@given(complex_z, st.integers(1, 6))
def test_truncated_plus_head_is_untruncated(z, N):
    h, t = 0.35, 1.2
    full = donsker_s(DonskerSpec(0.0, h, t), z, PHI1)
    trunc = donsker_s_truncated(DonskerSpec(0.0, h, t, truncation=N), z, PHI1)
    # the exponent at x = 0 is w = -z^2 a^2 / (2 t^{2H})
    a = l2_inner(PHI1[0], eta(h, t))
    w = -((z * a) ** 2) / (2 * t ** (2 * h))
    head = (2 * math.pi * t ** (2 * h)) ** -0.5 * sum(w ** n / math.factorial(n) for n in range(N))
    assert abs(trunc + head - full) <= 1e-13 * abs(full) + 1e-15


def test_truncated_at_x0_matches_tail_series():
    spec = DonskerSpec(0.0, 0.6, 1.0, truncation=2)
    a = l2_inner(PHI1[0], eta(0.6, 1.0))
    w = -((2.0j * a) ** 2) / 2  # -(x - z a)^2 / (2 t^{2H}) at x = 0, t = 1
    ref = (2 * math.pi) ** -0.5 * complex(mp.exp(w) - 1 - w)
    assert donsker_s_truncated(spec, 2.0j, PHI1) == pytest.approx(ref, rel=1e-13)
    assert donsker_s_truncated(spec, 2.0j, PHI1) == pytest.approx(
        (2 * math.pi) ** -0.5 * truncated_exp(2, w), rel=1e-15)


def test_fractional_noise_matches_operator():
    assert fractional_noise_s(0.3, 0.8, 1, PHI1) == pytest.approx(apply_m_plus(0.3, PHI1[0], 0.8), rel=1e-14)
    assert fractional_noise_s(0.5, 0.8, 2, PHI2) == pytest.approx(PHI2[1](0.8), rel=1e-15)
    with pytest.raises(PreconditionError):
        fractional_noise_s(0.3, 0.8, 3, PHI2)


def test_monte_carlo_agrees_with_closed_form():
    spec = DonskerSpec(0.3, 0.6, 1.0)
    est, se = mc_donsker_s(spec, 0.8, PHI1, 200_000, seed=2024)
    exact = donsker_s(spec, 0.8, PHI1)
    assert abs(est - exact) < 4 * se + 2e-3 * abs(exact)
    again = mc_donsker_s(spec, 0.8, PHI1, 200_000, seed=2024)
    assert again == (est, se)


def test_monte_carlo_preconditions():
    spec = DonskerSpec(0.3, 0.6, 1.0)
    with pytest.raises(PreconditionError):
        mc_donsker_s(spec, 1.0j, PHI1, 5000, 0)
    with pytest.raises(PreconditionError):
        mc_donsker_s(spec, 1.0, PHI1, 10, 0)
    with pytest.raises(PreconditionError):
        mc_donsker_s(DonskerSpec(0.0, 0.6, 1.0, truncation=1), 1.0, PHI1, 5000, 0)


# --- U-functionals, Wick products, growth bounds ----------------------------------------

@settings(max_examples=25)
@given(complex_z, st.floats(0.1, 0.9), st.floats(-2, 2))
def test_donsker_growth_bound_property(z, h, x):
    for N in (None, 2):
        u = donsker_functional(DonskerSpec(x, h, 0.7, truncation=N))
        assert growth_bound_check(u, PHI1, [z]).passed


@settings(max_examples=25)
@given(complex_z)
def test_wick_commutes_and_has_unit(z):
    a = donsker_functional(DonskerSpec(0.2, 0.4, 1.0))
    b = noise_functional(0.4, 0.5, 1, T=1.0)
    ab, ba = wick_product(a, b), wick_product(b, a)
    assert ab(z, PHI1) == pytest.approx(ba(z, PHI1), rel=1e-14, abs=1e-300)
    one = unit_functional()
    assert wick_product(a, one)(z, PHI1) == pytest.approx(a(z, PHI1), rel=1e-15)
    assert growth_bound_check(ab, PHI1, [z]).passed


def test_wick_constants_and_norms():
    a = donsker_functional(DonskerSpec(0.2, 0.4, 1.0))
    b = noise_functional(0.4, 0.5, 1, T=1.0)
    ab = wick_product(a, b)
    assert ab.K1 == a.K1 * b.K1 and ab.K2 == a.K2 + b.K2
    assert ab.norm(PHI1) == pytest.approx(math.hypot(a.norm(PHI1), b.norm(PHI1)))
    assert wick_product(a, a).norm_id == a.norm_id


def test_growth_check_reports_violation_with_witness():
    liar = UFunctional(lambda z, phi: np.exp(2 * np.abs(np.asarray(z)) ** 2), 1.0, 0.1)
    z = np.array([0.0, 0.5, 1.0, 2.0])
    rep = growth_bound_check(liar, PHI1, z)
    assert not rep.passed
    assert rep.witness_z == 0.5
    assert rep.n_probes == 4 and rep.max_ratio > 1
    with pytest.raises(PreconditionError):
        UFunctional(lambda z, phi: z, -1.0, 0.0)


def test_noise_functional_bound_uses_sup_norm():
    u = noise_functional(0.3, 0.5, 1, T=1.0)
    t = np.linspace(0, 1, 2001)
    sup = np.max(np.abs(apply_m_plus(0.3, PHI1[0], t)))
    assert u.norm(PHI1) == pytest.approx(sup, rel=1e-3)
    assert growth_bound_check(u, PHI1, np.linspace(-3, 3, 31) + 0.5j).passed
    with pytest.raises(PreconditionError):
        noise_functional(0.3, 2.0, 1, T=1.0)


def test_k_constant_used_in_kernel():
    # eta_t just left of 0 agrees with the closed-form kernel
    h, t, x = 0.7, 1.0, -0.5
    p = h - 0.5
    ref = k_constant(h) / math.gamma(h + 0.5) * ((t - x) ** p - (-x) ** p)
    assert eta(h, t)(x) == pytest.approx(ref, rel=1e-14)
