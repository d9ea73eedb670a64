import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import e, naive_kloosterman
from shiftconv import expsums as ex
from shiftconv.arith import DomainError, NotSquarefreeError, divisor_count, is_prime, is_squarefree, totient


def naive_baby_s(h, n, m, c, d):
    total = 0j
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        xbar = pow(x, -1, c) if c > 1 else 0
        total += naive_kloosterman(m, x, d) * e((h * xbar - n * x) / c)
    return total


def naive_baby_t(a, b, m, c):
    total = 0j
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        xbar = pow(x, -1, c) if c > 1 else 0
        total += naive_kloosterman(xbar + a, -b, c) * e(-m * x / c)
    return total / c


squarefree_moduli = st.integers(1, 60).filter(is_squarefree)


# -- Kloosterman sums ---------------------------------------------------------


def test_kloosterman_examples():
    assert ex.kloosterman(1, 1, 2).value == pytest.approx(1)
    assert ex.kloosterman(1, 1, 3).value == pytest.approx(-1)
    for c in (1, 7, 15, 30):
        assert ex.kloosterman(0, 0, c).value == pytest.approx(totient(c))
    assert ex.kloosterman_normalized(1, 3) == pytest.approx(-1 / math.sqrt(3))


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 40))
def test_kloosterman_matches_definition(m, n, c):
    assert abs(ex.kloosterman(m, n, c).value - naive_kloosterman(m, n, c)) < 1e-9


def test_kloosterman_symmetry_and_reality_exhaustive():
    for c in range(1, 201):
        K = ex.kloosterman_table(c)
        assert np.allclose(K, K.T, atol=1e-9)
        assert np.max(np.abs(K.imag)) <= 1e-9 * totient(c)


def test_matrix_agrees_with_enumeration():
    for c in (1, 2, 12, 35, 97):
        K = ex.kloosterman_matrix(c)
        for m, n in [(0, 0), (1, 1), (2, c - 1), (c // 2, 3)]:
            assert abs(K[m % c, n % c] - ex.kloosterman(m, n, c).value) < 1e-9


def test_kloosterman_row_large_modulus_path():
    c = 601
    row = ex.kloosterman_row(5, c)
    for z in (0, 1, 300, 600):
        assert abs(row[z] - ex.kloosterman(z, 5, c).value) < 1e-8


def test_exp_sum_value_triangle_inequality():
    v = ex.kloosterman(3, 7, 91)
    assert abs(v.value) <= v.term_count
    assert v.term_count == totient(91)


def test_weil_bound_small_primes():
    for p in (p for p in range(3, 200) if is_prime(p)):
        K = np.abs(ex.kloosterman_table(p)[1:, 1:])
        assert K.max() <= 2 * math.sqrt(p) + 1e-9


@given(st.integers(3, 3000).filter(is_squarefree), st.integers(0, 10**6))
def test_normalized_kloosterman_bounded_by_divisor_count(q, n):
    assert abs(ex.kloosterman_normalized(n, q)) <= divisor_count(q) + 1e-9


def test_normalized_rejects_non_squarefree():
    with pytest.raises(NotSquarefreeError):
        ex.kloosterman_normalized(1, 12)


# -- the two auxiliary sums ------------------------------------------------------


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), squarefree_moduli, st.data())
def test_baby_s_matches_definition(h, n, m, c, data):
    divs = [d for d in range(1, c + 1) if c % d == 0]
    d = data.draw(st.sampled_from(divs))
    if c > 30:
        return  # the naive oracle is quadratic in c
    got = ex.baby_s(h, n, m, c, d).value
    assert abs(got - naive_baby_s(h, n, m, c, d)) < 1e-8


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 30))
def test_baby_t_matches_definition(a, b, m, c):
    assert abs(ex.baby_t(a, b, m, c).value - naive_baby_t(a, b, m, c)) < 1e-9


def test_degenerate_cases():
    for c in (1, 6, 35):
        assert ex.baby_s(0, 0, 0, c, 1).value == pytest.approx(totient(c))
    assert ex.baby_t(3, 4, 5, 1).value == pytest.approx(1)
    with pytest.raises(DomainError):
        ex.baby_s(1, 1, 1, 15, 4)


def test_s_factorization_worked_example():
    # 15 = 3 * 5: both sides by enumeration
    lhs = ex.baby_s(1, 1, 1, 15, 3).value
    inv3, inv5 = pow(3, -1, 5), pow(5, -1, 3)
    rhs = 3 * ex.kloosterman(1, (-1 * inv3 * inv3) % 5, 5).value * ex.baby_t(inv5, inv5, 1, 3).value
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_t_multiplicativity_worked_example():
    for a, b, m in [(1, 2, 3), (0, 1, 7), (4, 11, 0)]:
        lhs = ex.baby_t(a, b, m, 15).value
        i5, i3 = pow(5, -1, 3), pow(3, -1, 5)
        rhs = ex.baby_t(a, b * i5 * i5, m * i5, 3).value * ex.baby_t(a, b * i3 * i3, m * i3, 5).value
        assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_s_factorization_exhaustive_small():
    assert ex.s_factorization_sweep(3, 5, exhaustive=True).passed
    assert ex.s_factorization_sweep(2, 11, exhaustive=False, samples=200).passed
    assert ex.t_multiplicativity_sweep(5, 6, exhaustive=True).passed


def test_verify_reports_and_rejections():
    r = ex.verify_s_factorization(4, 7, 9, 3, 10)
    assert r.passed and r.details["abs_diff"] <= 1e-6
    assert ex.verify_t_multiplicativity(2, 3, 4, 7, 11).passed
    with pytest.raises(DomainError):
        ex.verify_s_factorization(1, 1, 1, 3, 6)


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), st.integers(1, 60), st.integers(1, 60))
def test_s_factorization_property(h, n, m, d, ell):
    if math.gcd(d, ell) != 1 or not is_squarefree(d * ell):
        return
    lhs = ex.s_values(h, n, m, d * ell, d)
    rhs = ex.s_factorization_rhs(h, n, m, d, ell)
    assert abs(complex(lhs) - complex(rhs)) <= 1e-6 * (1 + abs(complex(lhs)))


def test_sweeps_are_reproducible():
    a = ex.t_multiplicativity_sweep(7, 13, exhaustive=False, seed=4)
    b = ex.t_multiplicativity_sweep(7, 13, exhaustive=False, seed=4)
    assert a.value == b.value


# -- Fourier transform -----------------------------------------------------------


def test_ft_delta_is_flat():
    p = 13
    f = np.zeros(p)
    f[0] = 1
    assert np.allclose(ex.fourier_transform_modp(f, p), 1 / math.sqrt(p))


@given(st.sampled_from([p for p in range(2, 98) if is_prime(p)]), st.integers(0, 2**32 - 1))
def test_ft_involution_and_plancherel(p, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    F = ex.fourier_transform_modp(f, p)
    assert np.allclose(F, ex.fourier_transform_direct(f, p), atol=1e-12)
    assert np.allclose(ex.fourier_transform_modp(F, p), f[(-np.arange(p)) % p], atol=1e-9)
    assert np.linalg.norm(F) ** 2 == pytest.approx(np.linalg.norm(f) ** 2, rel=1e-9)


def test_ft_of_kloosterman_trace():
    p = 31
    kl = ex.KloostermanTrace(p).table()
    F = ex.fourier_transform_modp(kl, p)
    assert np.linalg.norm(F) == pytest.approx(np.linalg.norm(kl), rel=1e-12)


def test_ft_rejects_non_squarefree():
    with pytest.raises(NotSquarefreeError):
        ex.fourier_transform_modp(np.ones(9), 9)


# -- correlations -------------------------------------------------------------------


def test_t_row_matches_pointwise():
    c = 35
    row = ex.t_row(2, 3, c)
    for y in (0, 1, 17, 34):
        assert abs(row[y] - ex.baby_t(2, 3, y, c).value) < 1e-10


def test_correlation_examples():
    diag = ex.correlation_t(3, 5, 3, 5, 101)
    assert diag.diagonal
    assert abs(diag.rho.imag) < 1e-9 and diag.rho.real > 0
    assert 0.3 <= diag.rho.real <= 3
    for args in [(1, 1, 2, 1), (1, 1, 1, 2)]:
        r = ex.correlation_t(*args, 101)
        assert r.normalized <= 10
    with pytest.raises(DomainError):
        ex.correlation_t(1, 101, 1, 1, 101)


def test_cube_map_bijective_for_two_mod_three():
    for p in range(3, 500):
        if is_prime(p):
            assert ex.cube_map_is_bijective(p) == (p % 3 != 1)


# -- incomplete sums and exponent pairs ---------------------------------------------


def test_complete_kloosterman_sum_over_period():
    # sum_n S(n, 1; q) = q * [1 coprime...] reduces to q * (number of x with x = 0) = q * mu-type value
    for q in (15, 21, 35):
        v = ex.incomplete_sum(ex.KloostermanTrace(q), range(1, q + 1))
        direct = sum(ex.kloosterman(n, 1, q).value for n in range(1, q + 1)) / math.sqrt(q)
        assert abs(v.value - direct) < 1e-9
    assert ex.incomplete_sum(ex.KloostermanTrace(15), range(3, 3)).value == 0


def test_incomplete_sum_rejects_large_weights():
    with pytest.raises(DomainError):
        ex.incomplete_sum(ex.KloostermanTrace(15), range(10), np.array([2.0]))


def test_polya_vinogradov_sweep_reports_constant():
    r = ex.polya_vinogradov_sweep(2 * 5 * 11 * 17, intervals=100)
    assert 0 < r.value < 5


def test_exponent_pair_examples():
    assert ex.exponent_pair_bound(ex.TRIVIAL_PAIR, 1000, 37, 2, 0.7) == pytest.approx(37)
    half = ex.ExponentPair(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), 1)
    assert ex.exponent_pair_bound(half, 1009, 50, 1, 1) == pytest.approx(math.sqrt(1009))
    mid = ex.KNOWN_PAIRS[1]
    assert ex.exponent_pair_bound(mid, 10**4, 10**2, 1, 1) == pytest.approx(10 ** (9 / 5))
    with pytest.raises(DomainError):
        ex.exponent_pair_bound(ex.TRIVIAL_PAIR, 10, 20, 1, 1)


def test_exponent_pair_validation():
    with pytest.raises(DomainError):
        ex.ExponentPair(Fraction(3, 4), 1, 0, 0)
    with pytest.raises(DomainError):
        ex.ExponentPair(Fraction(1, 2), Fraction(1, 3), 0, 0)
    assert ex.KNOWN_PAIRS[2].nu == Fraction(11, 28)


def test_exponent_pair_measurement_is_below_trivial():
    trace = ex.KloostermanTrace(3 * 7 * 11 * 13)
    r = ex.exponent_pair_measurement(trace, range(100, 400), None, ex.TRIVIAL_PAIR)
    assert r.value <= r.bound
