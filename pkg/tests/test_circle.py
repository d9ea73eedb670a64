import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shiftconv import circle
from shiftconv.arith import DomainError, factor, is_squarefree, totient
from shiftconv.spectral import shifted_conv_all


def brute_paper_moduli(Q, cap):
    return [q for q in range(math.floor(Q / 2) + 1, math.floor(Q) + 1)
            if is_squarefree(q) and all(p % 3 == 2 and p <= cap for p in factor(q))]


def test_moduli_examples():
    assert circle.build_moduli_set(40, 1.0).moduli == [22, 23, 29, 34]
    ms = circle.build_moduli_set(40, 0.5, circle.ALL_SQUAREFREE)
    assert ms.moduli == [q for q in range(21, 41) if is_squarefree(q)]
    assert ms.phi_mass == sum(totient(q) for q in ms.moduli)


@given(st.floats(8, 400), st.floats(0.2, 1.0))
def test_paper_mode_filter(Q, eta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ms = circle.build_moduli_set(Q, eta)
    assert ms.moduli == brute_paper_moduli(Q, Q**eta)
    assert ms.empty == (not ms.moduli)
    assert Q**-2 <= ms.delta <= Q**-1


def test_phi_mass_ratio():
    for Q in (10**3, 10**4):
        ms = circle.build_moduli_set(Q, 0.5, circle.ALL_SQUAREFREE)
        assert 0.1 <= ms.phi_mass / Q**2 <= 1


def test_moduli_set_validation():
    with pytest.raises(DomainError):
        circle.build_moduli_set(3, 0.5)
    with pytest.raises(DomainError):
        circle.build_moduli_set(100, 0.5, delta=0.5)
    with pytest.raises(DomainError):
        circle.build_moduli_set(100, 0.0)
    with pytest.warns(UserWarning):
        assert circle.build_moduli_set(63, 0.5).empty


def test_moduli_text_roundtrip():
    ms = circle.build_moduli_set(120, 0.7)
    back = circle.ModuliSet.from_text(ms.to_text())
    assert back.moduli == ms.moduli and back.phi_mass == ms.phi_mass and back.delta == ms.delta


def test_single_interval_kernel():
    ms = circle.with_moduli([2], 4, 0.1)
    I = circle.eval_I(ms)
    assert I(0.5) == pytest.approx(5.0)
    assert I(0.3) == 0 and I(0.7) == 0 and I(0.0) == 0
    assert I.integral() == pytest.approx(1.0, abs=1e-15)


def test_kernel_positive_at_admissible_fractions():
    ms = circle.build_moduli_set(50, 1.0, circle.ALL_SQUAREFREE)
    I = circle.eval_I(ms)
    x = circle.admissible_fractions(ms.moduli)
    assert np.all(I(x) >= 1 / (2 * ms.delta * ms.phi_mass))


@pytest.mark.parametrize("Q, mode, power", [
    (60, circle.ALL_SQUAREFREE, 1.5), (200, circle.ALL_SQUAREFREE, 1.1), (200, circle.PAPER, 1.9),
    (1000, circle.ALL_SQUAREFREE, 1.5), (1000, circle.PAPER, 1.25),
])
def test_kernel_integral_and_pointwise(Q, mode, power):
    ms = circle.build_moduli_set(Q, 1.0, mode, delta=Q**-power)
    I = circle.eval_I(ms)
    assert abs(I.integral() - 1.0) <= 1e-12
    assert np.all(I.values >= 0)
    assert np.all(I.values[1:] != I.values[:-1]) and I.values[0] != I.values[-1]
    x = np.random.default_rng(1).random(10**6)
    # piece midpoints too; the endpoints themselves are rounded floats, a null set
    b = I.breakpoints
    x = np.concatenate([x, (b[:-1] + b[1:]) / 2])
    assert np.max(np.abs(I(x) - circle.eval_I_naive(ms, x))) < 1e-9


def test_kernel_piece_count():
    # with irrational-ish delta no endpoints coincide, so pieces = 2 * Phi
    ms = circle.build_moduli_set(30, 1.0, circle.ALL_SQUAREFREE, delta=30**-1.9)
    assert len(circle.eval_I(ms).breakpoints) == 2 * ms.phi_mass


def test_variance_empty_and_reported():
    empty = circle.with_moduli([], 10, 0.01)
    r = circle.variance(empty)
    assert r.value == 1.0
    ms = circle.build_moduli_set(1000, 0.5, circle.ALL_SQUAREFREE)
    assert circle.variance(ms).ratio <= 100


def test_variance_matches_quadrature():
    ms = circle.build_moduli_set(40, 1.0, circle.ALL_SQUAREFREE)
    I = circle.eval_I(ms)
    x = (np.arange(2_000_000) + 0.5) / 2_000_000
    brute = np.mean((1 - circle.eval_I_naive(ms, x)) ** 2)
    assert circle.variance(ms).value == pytest.approx(brute, rel=1e-3)
    assert I.integrate_squared_deviation() == circle.variance(ms, I).value


def test_variance_delta_doubling_and_monotone_sanity():
    Q = 300
    base = circle.build_moduli_set(Q, 0.5, circle.ALL_SQUAREFREE)
    r1 = circle.variance(base).ratio
    r2 = circle.variance(circle.with_moduli(base.moduli, Q, 2 * base.delta)).ratio
    assert max(r1, r2) / min(r1, r2) <= 4
    # adding moduli never raises the ratio by more than 4x
    ratios = []
    for k in range(5, len(base.moduli) + 1, 10):
        ratios.append(circle.variance(circle.with_moduli(base.moduli[:k], Q, base.delta)).ratio)
    assert all(b <= 4 * a for a, b in zip(ratios, ratios[1:]))


def test_fourier_closed_form():
    ms = circle.build_moduli_set(80, 1.0, circle.ALL_SQUAREFREE, delta=80**-1.3)
    k = np.arange(-300, 301)
    I = circle.eval_I(ms)
    assert np.max(np.abs(I.fourier(k) - circle.kernel_fourier_closed_form(ms, k))) < 1e-12
    assert I.fourier(np.array([0]))[0] == pytest.approx(1.0)


def test_ramanujan_sum_brute():
    for q in (1, 6, 30):
        for k in range(-10, 40):
            brute = sum(np.exp(2j * np.pi * a * k / q) for a in range(1, q + 1) if math.gcd(a, q) == 1)
            assert circle.ramanujan_sum(q, k) == pytest.approx(brute.real, abs=1e-9)


@pytest.fixture(scope="module")
def small_setup(gl2_stream, sym2_stream):
    ms = circle.build_moduli_set(12, 1.0, circle.ALL_SQUAREFREE, delta=12**-1.5)
    return 60, ms, sym2_stream, gl2_stream


def test_dstar_against_quadrature(small_setup):
    X, ms, g3, g2 = small_setup
    for h in (1, 5, -7, 40):
        exact = circle.dstar_h(h, X, ms, g3, g2)
        quad = circle.dstar_h_quadrature(h, X, ms, g3, g2)
        assert abs(exact - quad) <= 1e-9 * max(1.0, abs(exact))


def test_dstar_unit_kernel_is_shifted_sum(small_setup):
    X, ms, g3, g2 = small_setup
    one = circle.StepFunction(np.array([0.0]), np.array([1.0]))
    spec = shifted_conv_all(X, g3, g2)
    for h in (-50, 0, 3, 100):
        assert circle.dstar_h(h, X, ms, g3, g2, step=one) == pytest.approx(spec.at(h), abs=1e-12)


def test_dstar_real_for_real_streams(small_setup):
    # the kernel is even on the circle, so conjugating the integral gives it back
    X, ms, g3, g2 = small_setup
    for h in (2, 11, -13):
        v = circle.dstar_h(h, X, ms, g3, g2)
        assert abs(v.imag) <= 1e-9 * max(1.0, abs(v))


def test_dstar_outside_support_is_leakage_only(small_setup):
    X, ms, g3, g2 = small_setup
    inside = max(abs(circle.dstar_h(h, X, ms, g3, g2)) for h in (1, 10, 30))
    outside = abs(circle.dstar_h(4 * X, X, ms, g3, g2))
    assert outside < inside


def test_dstar_rejects_short_streams(small_setup):
    X, ms, g3, g2 = small_setup
    from shiftconv.coefficients import CoefficientStream
    short = CoefficientStream.from_values(np.ones(100))
    with pytest.raises(DomainError):
        circle.dstar_h(1, X, ms, short, g2)


def test_approximation_gap_reported(gl2_stream, sym2_stream):
    X = 2000
    ms = circle.build_moduli_set(X ** (6 / 11), 0.5, circle.ALL_SQUAREFREE, delta=1 / X)
    r = circle.approximation_gap(1, X, ms, sym2_stream, gl2_stream)
    assert r.value >= 0 and r.bound > 0
    assert r.ratio < 1


def test_eval_I_rejects_empty():
    with pytest.raises(DomainError):
        circle.eval_I(circle.with_moduli([], 10, 0.01))
