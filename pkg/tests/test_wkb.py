import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supergain.errors import DivergentGap, DomainError
from supergain.wkb import (
    gap_delta, kernel_ell, l_integrals, lower_bound_supergain, phase_C, prefactor,
    regime_margin, solve_B, tau, upper_bound_supergain, wkb_point,
)

# reference values from mpmath quadrature at 40+ digits, or scipy.integrate.quad
# applied to the textbook (unsimplified) kernels
L_045_097 = (0.16656641406720846, 12.606644543025511, 0.10167860345106248, 11.417577791627972)
L_025_03 = (0.9265964088245106, 3.3119604616980605, 0.47397155172320489, 3.1973897198427278)


def naive_kernels(d, B, phi):
    A = math.cos(2 * math.pi * d)
    s, c = math.sin(phi) ** 2, math.cos(phi) ** 2
    r12 = math.sqrt(((A + B) * s + (1 + A) * c) * (2 * c + (1 + B) * s))
    r34 = math.sqrt(((1 + B) * c + (1 - A) * s) * ((1 - B) + (A + B) * s))
    return 2 * (1 - B) * c / r12, 2 / r12, 2 * (A + B) * s / r34, 2 / r34


def test_kernel_l3_reference():
    assert kernel_ell(3, 0.25, 0.5, math.pi / 4) == pytest.approx(0.51639777949432225, rel=1e-14)


@pytest.mark.parametrize("d,B,phi", [(0.1, -0.5, 0.3), (0.3, 0.5, 1.2), (0.45, 0.97, 0.01)])
def test_kernels_match_direct_formulas(d, B, phi):
    ref = naive_kernels(d, B, phi)
    for i in range(4):
        assert kernel_ell(i + 1, d, B, phi) == pytest.approx(ref[i], rel=1e-12)


def test_l1_kernel_vanishes_at_upper_end():
    phi = np.linspace(0, np.pi / 2, 9)
    assert np.all(np.abs(kernel_ell(1, 0.3, 1 - 1e-13, phi)) < 1e-11)


def test_kernel_domain_errors():
    A = math.cos(2 * math.pi * 0.3)
    with pytest.raises(DomainError):
        kernel_ell(1, 0.3, -A, 0.5)
    with pytest.raises(DomainError):
        kernel_ell(2, 0.3, 1.0, 0.5)
    with pytest.raises(DomainError):
        kernel_ell(5, 0.3, 0.0, 0.5)
    with pytest.raises(DomainError):
        kernel_ell(1, 0.5, 0.0, 0.5)


def test_l_integrals_reference():
    np.testing.assert_allclose(l_integrals(0.45, 0.97), L_045_097, rtol=1e-9)
    np.testing.assert_allclose(l_integrals(0.25, 0.3), L_025_03, rtol=1e-9)


def test_l_integrals_vectorised():
    L = l_integrals(0.25, np.array([0.3, 0.3]))
    np.testing.assert_allclose(L[1], [L_025_03[1]] * 2, rtol=1e-10)


@pytest.mark.parametrize("B", [-0.5, 0.3, 0.9])
def test_l2_small_spacing_limit(B):
    target = math.pi / math.sqrt(2 * (1 + B))
    errs = [abs(l_integrals(d, B)[1] - target) for d in (1e-3, 1e-4)]
    assert errs[1] < errs[0]
    assert errs[1] / target < 1e-6


def test_l1_vanishes_as_B_to_one():
    assert l_integrals(0.3, 1 - 1e-9)[0] < 1e-8


def test_solve_B_reference():
    assert solve_B(0.25, 0.5) == pytest.approx(0.38871347150950411, rel=1e-10)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.45])
def test_solve_B_monotone(d):
    x = np.linspace(0.01, 0.99, 50)
    B = solve_B(d, x)
    assert np.all(np.diff(B) > 0)


def test_solve_B_limits():
    d = 0.45
    A = math.cos(2 * math.pi * d)
    assert solve_B(d, 1e-9) == pytest.approx(-A, abs=1e-9)
    assert solve_B(d, 1 - 1e-9) == pytest.approx(1.0, abs=1e-8)


def test_solve_B_scalar_and_array_agree():
    x = np.array([0.2, 0.7])
    np.testing.assert_allclose(solve_B(0.3, x), [solve_B(0.3, 0.2), solve_B(0.3, 0.7)], rtol=1e-12)


def test_solve_B_domain_errors():
    for x in (0.0, 1.0, -0.1, float("nan")):
        with pytest.raises(DomainError):
            solve_B(0.3, x)
    with pytest.raises(DomainError):
        solve_B(0.0, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.02, 0.48), st.floats(0.01, 0.99))
def test_solve_B_satisfies_constraint(d, x):
    L1 = l_integrals(d, solve_B(d, x))[0]
    assert L1 == pytest.approx(math.pi * (1 - 2 * d) * (1 - x), abs=1e-10)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.45])
def test_l2_decreasing_in_x3p(d):
    x = np.linspace(0.01, 0.99, 40)
    L2 = l_integrals(d, solve_B(d, x))[1]
    assert np.all(np.diff(L2) < 0)


def test_phase_reference():
    assert phase_C(0.45, 0.5, 100) == pytest.approx(1.2678162381164009, rel=1e-9)
    assert phase_C(0.45, 0.9, 100) == pytest.approx(1.5119137526998374, rel=1e-9)
    assert phase_C(0.45, 0.3, 37) == pytest.approx(0.03985416327927027, rel=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.48), st.floats(0.01, 0.99), st.integers(1, 5000))
def test_phase_bounds(d, x, N):
    pt = wkb_point(d, x, N)
    assert 0 <= pt.C_phase <= 8 * math.pi / pt.L2p


def test_phase_at_upper_end():
    pt = wkb_point(0.45, 1 - 1e-12, 100)
    assert pt.C_phase * pt.L2p / 4 == pytest.approx(3 * math.pi / 4, rel=1e-9)
    forced = phase_C(0.45, 1 - 1e-12, 100, parity=-1)
    assert forced * pt.L2p / 4 == pytest.approx(math.pi / 4, rel=1e-9)


def test_prefactor_conventions():
    d = 0.3
    assert prefactor(d) == pytest.approx(math.pi * 0.4 / np.sinc(0.6))
    assert prefactor(d, "main") == pytest.approx(2 * math.pi * 0.3 / np.sinc(0.6))
    with pytest.raises(DomainError):
        prefactor(d, "other")
    ratio = lower_bound_supergain(100, 0.45, 1e-8, "main") / lower_bound_supergain(100, 0.45, 1e-8)
    assert ratio == pytest.approx(0.45 / 0.05, rel=1e-12)


def test_tau_reference():
    assert tau(0.45) == pytest.approx(0.22391072743214654, rel=1e-8)


def test_tau_ends():
    assert tau(0.49) < 0.05
    assert tau(0.01) > 0.99
    assert tau(0.25) == pytest.approx(math.pi / 4, rel=1e-9)
    for d in (0.0, 0.5, -0.1):
        with pytest.raises(DomainError):
            tau(d)


def test_tau_decreasing():
    t = [tau(d) for d in (0.01, 0.1, 0.2, 0.3, 0.4, 0.49)]
    assert np.all(np.diff(t) < 0)


def test_lower_bound_reference():
    g = lower_bound_supergain(100, 0.45, 1e-12)
    assert g == pytest.approx(14.462775275569387, rel=1e-8)
    assert g < tau(0.45) * 100


def test_lossless_bound_is_linear():
    vals = [lower_bound_supergain(N, 0.45, 0.0) / N for N in (50, 100, 200)]
    assert max(vals) - min(vals) <= 1e-6 * vals[0]
    assert vals[0] == pytest.approx(tau(0.45), rel=1e-12)


def test_lower_bound_vanishes_for_large_loss():
    assert lower_bound_supergain(100, 0.45, 1e10) < 1e-9
    assert lower_bound_supergain(100, 0.45, 1e300) < 1e-290


@pytest.mark.parametrize("N", [30, 100, 200])
def test_lower_bound_non_increasing_in_rho(N):
    rhos = [0.0, 1e-24, 1e-16, 1e-12, 1e-8, 1e-4, 1e-1, 1.0]
    g = [lower_bound_supergain(N, 0.45, r) for r in rhos]
    assert np.all(np.diff(g) <= 1e-9 * g[0])


def test_upper_above_lower():
    for N in (20, 100):
        for rho in (1e-3, 1e-1):
            lo = lower_bound_supergain(N, 0.3, rho)
            assert upper_bound_supergain(N, 0.3, rho) == pytest.approx(lo + gap_delta(0.3, rho))
            assert upper_bound_supergain(N, 0.3, rho) > lo


def test_small_spacing_squeeze():
    ds = (0.05, 0.02, 0.01)
    for N in (20, 41, 100, 200):
        up = [upper_bound_supergain(N, d, 1e-3) for d in ds]
        assert np.all(np.diff(up) < 0)
        lo = [lower_bound_supergain(N, d, 1e-3) for d in ds]
        assert lo[-1] < lo[0]
    lo = [lower_bound_supergain(41, d, 1e-3) for d in ds]
    assert np.all(np.diff(lo) < 0)


@pytest.mark.parametrize("rho", [1e-300, 1e-100, 1e-16, 1e-4, 1.0])
@pytest.mark.parametrize("N", [10, 1000, 10 ** 6])
def test_log_space_extremes(rho, N):
    g = lower_bound_supergain(N, 0.45, rho)
    assert math.isfinite(g)
    assert 0 < g <= tau(0.45) * N * (1 + 1e-8)


def test_smooth_phase_close_to_default():
    a = lower_bound_supergain(100, 0.45, 1e-12)
    b = lower_bound_supergain(100, 0.45, 1e-12, smooth_phase=True)
    assert a != b
    assert b == pytest.approx(a, rel=0.05)


def test_lower_bound_domain_errors():
    with pytest.raises(DomainError):
        lower_bound_supergain(0, 0.3, 1e-3)
    with pytest.raises(DomainError):
        lower_bound_supergain(10, 0.5, 1e-3)
    with pytest.raises(DomainError):
        lower_bound_supergain(10, 0.3, -1.0)


def test_gap_values():
    assert gap_delta(0.45, 1e-1) == pytest.approx(12 * 0.45 * math.log(1 + 1 / 0.09), rel=1e-14)
    assert gap_delta(0.25, 1e-3) == pytest.approx(3 * math.log(2001), rel=1e-14)


def test_gap_small_spacing():
    ds = [1e-2, 1e-4, 1e-6, 1e-8]
    gaps = [gap_delta(d, 1e-3) for d in ds]
    assert np.all(np.diff(gaps) < 0)
    ratios = [g / (-12 * d * math.log(d)) for g, d in zip(gaps, ds)]
    assert np.all(np.diff(ratios) < 0)
    assert ratios[-1] < 1.4


def test_gap_errors():
    with pytest.raises(DivergentGap):
        gap_delta(0.3, 0.0)
    with pytest.raises(DomainError):
        gap_delta(0.3, -1.0)


def test_regime_margin_reference():
    m = regime_margin(100, 0.45, 1e-8, 0.9)
    assert m.margin == pytest.approx(19.198643187723654, rel=1e-9)
    assert m.threshold_exponent == pytest.approx(203.69209574574447, rel=1e-9)


def test_regime_margin_lossless_and_growth():
    assert regime_margin(100, 0.45, 0.0, 0.9).margin == -math.inf
    m = [regime_margin(N, 0.45, 1e-8, 0.9).margin for N in (100, 200, 400, 800)]
    assert np.all(np.diff(m) > 0)
