"""Complete exponential sums: Kloosterman sums and the two derived "baby" sums.

Notation: ``e(t) = exp(2 pi i t)``, ``x̄`` the inverse of ``x`` modulo the
relevant modulus, and starred sums run over units only.

    S(m, n; c)        = sum*_{x mod c} e((m x + n x̄) / c)
    𝒮(h, n, m; c, d)  = sum*_{x mod c} S(m, x; d) e((h x̄ - n x) / c)      (d | c)
    T(a, b, m; c)     = (1/c) sum*_{x mod c} S(x̄ + a, -b; c) e(-m x / c)

Every sum over ``x mod 1`` has the single term ``x = 0`` with character value
1, so ``S(.,.;1) = 1`` and ``T(.,.,.;1) = 1``; the CRT identities then need no
special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith import (
    DomainError,
    divisor_count,
    inv_or_zero,
    is_prime,
    squarefree_factor,
    unit_table,
)
from .report import SumReport

COMPENSATED_THRESHOLD = 10_000
IDENTITY_RTOL = 1e-6


@dataclass(frozen=True)
class ExpSumValue:
    value: complex
    modulus: int
    term_count: int

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag


@lru_cache(maxsize=512)
def twiddle(c: int) -> np.ndarray:
    """Table of ``e(j / c)`` for ``0 <= j < c``."""
    tw = np.exp(2j * np.pi * np.arange(c) / c)
    tw.setflags(write=False)
    return tw


def _accumulate(terms: np.ndarray) -> complex:
    if terms.size > COMPENSATED_THRESHOLD:
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return complex(terms.sum())


def kloosterman(m: int, n: int, c: int) -> ExpSumValue:
    """``S(m, n; c)`` by direct enumeration of the units modulo ``c``."""
    if c < 1:
        raise DomainError(f"modulus must be positive, got {c}")
    xs, inv = unit_table(c)
    phase = ((m % c) * xs + (n % c) * inv) % c
    return ExpSumValue(_accumulate(twiddle(c)[phase]), c, len(xs))


def kloosterman_table(c: int) -> np.ndarray:
    """All Kloosterman sums modulo ``c``: ``K[m, n] = S(m, n; c)``.

    Row ``n`` is ``c`` times an inverse DFT of ``u -> e(n ū / c)`` over units,
    so the whole table costs ``O(c^2 log c)``. Not cached; see
    :func:`kloosterman_matrix` for the memoized version.
    """
    xs, inv = unit_table(c)
    if c == 1:
        out = np.ones((1, 1), dtype=complex)
    else:
        h = np.zeros((c, c), dtype=complex)
        n = np.arange(c)[:, None]
        h[:, xs] = twiddle(c)[(n * inv[None, :]) % c]
        out = (c * np.fft.ifft(h, axis=1)).T
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def kloosterman_matrix(c: int) -> np.ndarray:
    return kloosterman_table(c)


def kloosterman_row(n: int, c: int) -> np.ndarray:
    """``z -> S(z, n; c)`` for every residue ``z`` modulo ``c``."""
    if c == 1:
        return np.ones(1, dtype=complex)
    if c <= 512:
        return kloosterman_matrix(c)[:, n % c]
    xs, inv = unit_table(c)
    h = np.zeros(c, dtype=complex)
    h[xs] = twiddle(c)[((n % c) * inv) % c]
    return c * np.fft.ifft(h)


def kloosterman_normalized(n: int, q: int) -> float:
    """``Kl(n, q) = S(n, 1; q) / sqrt(q)`` for squarefree ``q``."""
    squarefree_factor(q)
    return kloosterman(n, 1, q).real / math.sqrt(q)


def weil_bound(q: int) -> int:
    return divisor_count(q)


def _check_divides(d: int, c: int):
    if d < 1 or c < 1 or c % d:
        raise DomainError(f"need d | c, got d={d}, c={c}")


def s_values(h, n, m, c: int, d: int) -> np.ndarray:
    """Vectorized 𝒮(h, n, m; c, d) over broadcast integer arrays ``h, n, m``."""
    _check_divides(d, c)
    h, n, m = np.broadcast_arrays(*(np.asarray(v, dtype=np.int64) % c for v in (h, n, m)))
    xs, inv = unit_table(c)
    inner = kloosterman_matrix(d)
    tw = twiddle(c)
    flat = [v.ravel() for v in (h, n, m)]
    out = np.empty(flat[0].size, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, len(xs)))
    for lo in range(0, out.size, chunk):
        hh, nn, mm = (v[lo : lo + chunk, None] for v in flat)
        phase = (hh * inv[None, :] - nn * xs[None, :]) % c
        out[lo : lo + chunk] = np.sum(inner[mm % d, xs[None, :] % d] * tw[phase], axis=1)
    return out.reshape(h.shape)


def t_values(a, b, m, c: int) -> np.ndarray:
    """Vectorized T(a, b, m; c) over broadcast integer arrays."""
    if c < 1:
        raise DomainError(f"modulus must be positive, got {c}")
    a, b, m = np.broadcast_arrays(*(np.asarray(v, dtype=np.int64) % c for v in (a, b, m)))
    xs, inv = unit_table(c)
    kl = kloosterman_matrix(c)
    tw = twiddle(c)
    flat = [v.ravel() for v in (a, b, m)]
    out = np.empty(flat[0].size, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, len(xs)))
    for lo in range(0, out.size, chunk):
        aa, bb, mm = (v[lo : lo + chunk, None] for v in flat)
        ks = kl[(inv[None, :] + aa) % c, (-bb) % c]
        out[lo : lo + chunk] = np.sum(ks * tw[(-mm * xs[None, :]) % c], axis=1) / c
    return out.reshape(a.shape)


def baby_s(h: int, n: int, m: int, c: int, d: int) -> ExpSumValue:
    """𝒮(h, n, m; c, d): the inner Kloosterman sums enumerated per residue."""
    _check_divides(d, c)
    xs, inv = unit_table(c)
    dx, dinv = unit_table(d)
    # inner[y] = S(m, y; d) for every y mod d
    inner = twiddle(d)[((m % d) * dx[None, :] + np.arange(d)[:, None] * dinv[None, :]) % d].sum(axis=1)
    terms = inner[xs % d] * twiddle(c)[((h % c) * inv - (n % c) * xs) % c]
    return ExpSumValue(_accumulate(terms), c, len(xs) * len(dx))


def baby_t(a: int, b: int, m: int, c: int) -> ExpSumValue:
    """T(a, b, m; c) by direct enumeration (outer and inner sums)."""
    if c < 1:
        raise DomainError(f"modulus must be positive, got {c}")
    xs, inv = unit_table(c)
    # row[z] = S(z, -b; c)
    row = twiddle(c)[(np.arange(c)[:, None] * xs[None, :] - (b % c) * inv[None, :]) % c].sum(axis=1)
    terms = row[(inv + a) % c] * twiddle(c)[(-(m % c) * xs) % c]
    return ExpSumValue(_accumulate(terms) / c, c, len(xs) ** 2)


def _rel_diff(lhs, rhs) -> np.ndarray:
    return np.abs(np.asarray(lhs) - np.asarray(rhs)) / (1.0 + np.abs(lhs))


def _coprime_check(d: int, ell: int):
    if d < 1 or ell < 1 or math.gcd(d, ell) != 1:
        raise DomainError(f"moduli {d} and {ell} are not coprime")


def s_factorization_rhs(h, n, m, d: int, ell: int) -> np.ndarray:
    """``d * S(h, -n d̄^2; ell) * T(n ell̄, h ell̄, m; d)`` for coprime ``d, ell``."""
    _coprime_check(d, ell)
    h, n, m = (np.asarray(v, dtype=np.int64) for v in (h, n, m))
    d_inv = inv_or_zero(d, ell)
    l_inv = inv_or_zero(ell, d)
    kl = kloosterman_matrix(ell)[h % ell, (-n * d_inv * d_inv) % ell]
    return d * kl * t_values(n * l_inv, h * l_inv, m, d)


def t_multiplicativity_rhs(a, b, m, c1: int, c2: int) -> np.ndarray:
    """``T(a, b c̄2^2, m c̄2; c1) * T(a, b c̄1^2, m c̄1; c2)`` for coprime ``c1, c2``."""
    _coprime_check(c1, c2)
    a, b, m = (np.asarray(v, dtype=np.int64) for v in (a, b, m))
    i2 = inv_or_zero(c2, c1)
    i1 = inv_or_zero(c1, c2)
    return t_values(a, b * i2 * i2, m * i2, c1) * t_values(a, b * i1 * i1, m * i1, c2)


def verify_s_factorization(h: int, n: int, m: int, d: int, ell: int) -> SumReport:
    """Check 𝒮(h,n,m; d·ell, d) = d·S(h, -n d̄²; ell)·T(n ell̄, h ell̄, m; d)."""
    _coprime_check(d, ell)
    squarefree_factor(d * ell)
    lhs = baby_s(h, n, m, d * ell, d).value
    d_inv = inv_or_zero(d, ell)
    l_inv = inv_or_zero(ell, d)
    rhs = (
        d
        * kloosterman(h, -n * d_inv * d_inv, ell).value
        * baby_t(n * l_inv, h * l_inv, m, d).value
    )
    diff = abs(lhs - rhs)
    return SumReport(
        name="s_factorization",
        value={"lhs": lhs, "rhs": rhs},
        bound=IDENTITY_RTOL * (1 + abs(lhs)),
        ratio=diff / (1 + abs(lhs)),
        passed=diff <= IDENTITY_RTOL * (1 + abs(lhs)),
        params={"h": h, "n": n, "m": m, "d": d, "ell": ell},
        details={"abs_diff": diff},
    )


def verify_t_multiplicativity(a: int, b: int, m: int, c1: int, c2: int) -> SumReport:
    _coprime_check(c1, c2)
    lhs = baby_t(a, b, m, c1 * c2).value
    i2 = inv_or_zero(c2, c1)
    i1 = inv_or_zero(c1, c2)
    rhs = baby_t(a, b * i2 * i2, m * i2, c1).value * baby_t(a, b * i1 * i1, m * i1, c2).value
    diff = abs(lhs - rhs)
    return SumReport(
        name="t_multiplicativity",
        value={"lhs": lhs, "rhs": rhs},
        bound=IDENTITY_RTOL * (1 + abs(lhs)),
        ratio=diff / (1 + abs(lhs)),
        passed=diff <= IDENTITY_RTOL * (1 + abs(lhs)),
        params={"a": a, "b": b, "m": m, "c1": c1, "c2": c2},
        details={"abs_diff": diff},
    )


def _triples(c: int, exhaustive: bool, samples: int, rng: np.random.Generator):
    if exhaustive:
        g = np.arange(c, dtype=np.int64)
        return tuple(v.ravel() for v in np.meshgrid(g, g, g, indexing="ij"))
    return tuple(rng.integers(0, c, size=samples) for _ in range(3))


def s_factorization_sweep(d: int, ell: int, exhaustive: bool, samples: int = 100, seed: int = 0) -> SumReport:
    """Max relative gap of the 𝒮 factorization over triples modulo ``d * ell``."""
    c = d * ell
    h, n, m = _triples(c, exhaustive, samples, _rng(seed, c, d))
    lhs = s_values(h, n, m, c, d)
    rhs = s_factorization_rhs(h, n, m, d, ell)
    err = float(_rel_diff(lhs, rhs).max())
    return SumReport(
        name="s_factorization_sweep",
        value=err,
        bound=IDENTITY_RTOL,
        ratio=err / IDENTITY_RTOL,
        passed=err <= IDENTITY_RTOL,
        params={"d": d, "ell": ell, "exhaustive": exhaustive, "triples": int(h.size)},
    )


def t_multiplicativity_sweep(c1: int, c2: int, exhaustive: bool, samples: int = 100, seed: int = 0) -> SumReport:
    c = c1 * c2
    a, b, m = _triples(c, exhaustive, samples, _rng(seed, c, c1))
    lhs = t_values(a, b, m, c)
    rhs = t_multiplicativity_rhs(a, b, m, c1, c2)
    err = float(_rel_diff(lhs, rhs).max())
    return SumReport(
        name="t_multiplicativity_sweep",
        value=err,
        bound=IDENTITY_RTOL,
        ratio=err / IDENTITY_RTOL,
        passed=err <= IDENTITY_RTOL,
        params={"c1": c1, "c2": c2, "exhaustive": exhaustive, "triples": int(a.size)},
    )


def _rng(seed: int, *counter: int) -> np.random.Generator:
    # counter-based stream: identical (seed, counter) always yields the same samples
    return np.random.Generator(np.random.Philox(key=seed, counter=list(counter) + [0] * (4 - len(counter))))


def coprime_splittings(max_modulus: int):
    """All ordered pairs ``(d, ell)`` of coprime factors of squarefree ``c <= max_modulus``."""
    from .arith import squarefree_up_to

    mask = squarefree_up_to(max_modulus)
    for c in range(1, max_modulus + 1):
        if not mask[c]:
            continue
        for d in range(1, c + 1):
            if c % d == 0:
                yield d, c // d


# -- Fourier transform over Z/qZ ---------------------------------------------


def fourier_transform_modp(f, p: int) -> np.ndarray:
    """``f^(y) = q^{-1/2} sum_x f(x) e(-y x / q)`` for a table ``f`` of length ``q``.

    Accepts any squarefree modulus; the transform squares to ``x -> f(-x)``.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (p,):
        raise DomainError(f"table length {f.shape} does not match modulus {p}")
    squarefree_factor(p)
    return np.fft.fft(f) / math.sqrt(p)


def fourier_transform_direct(f, p: int) -> np.ndarray:
    """Naive O(p^2) evaluation of the same transform, kept as a cross-check."""
    f = np.asarray(f, dtype=complex)
    y = np.arange(p)
    return (twiddle(p)[(-np.outer(y, y)) % p] @ f) / math.sqrt(p)


# -- correlations of T and the amiability dichotomy ---------------------------


@dataclass(frozen=True)
class CorrelationReport:
    p: int
    tuple1: tuple[int, int]
    tuple2: tuple[int, int]
    rho: complex
    normalized: complex | float

    @property
    def diagonal(self) -> bool:
        return self.tuple1 == self.tuple2


def t_row(a: int, b: int, c: int) -> np.ndarray:
    """``y -> T(a, b, y; c)`` for all ``y`` modulo ``c``, via one DFT."""
    if c == 1:
        return np.ones(1, dtype=complex)
    xs, inv = unit_table(c)
    ks = kloosterman_row(-b, c)
    g = np.zeros(c, dtype=complex)
    g[xs] = ks[(inv + a) % c]
    return np.fft.fft(g) / c


def correlation_t(a1: int, b1: int, a2: int, b2: int, p: int) -> CorrelationReport:
    """Averaged correlation ``rho = (1/p) sum_y T(a1,b1,y;p) conj(T(a2,b2,y;p))``.

    Diagonal tuples give ``rho`` close to 1; off-diagonal tuples (the
    amiable case) give ``|rho| = O(p^{-1/2})``.
    """
    if (b1 * b2) % p == 0:
        raise DomainError(f"p={p} divides b1*b2={b1 * b2}")
    t1 = t_row(a1, b1, p)
    t2 = t_row(a2, b2, p)
    rho = complex(np.vdot(t2, t1)) / p
    k1 = (a1 % p, b1 % p)
    k2 = (a2 % p, b2 % p)
    normalized = rho if k1 == k2 else abs(rho) * math.sqrt(p)
    return CorrelationReport(p, k1, k2, rho, normalized)


def correlation_sweep(primes, tuples_per_prime: int = 20, seed: int = 0) -> SumReport:
    """Off-diagonal max of ``|rho| sqrt(p)`` and the range of diagonal ``rho``."""
    worst_off = 0.0
    diag_lo, diag_hi = math.inf, -math.inf
    diag_imag = 0.0
    rows = []
    for p in primes:
        rng = _rng(seed, int(p))
        off_max = 0.0
        drawn = 0
        while drawn < tuples_per_prime:
            a1, a2 = (int(v) for v in rng.integers(0, p, size=2))
            b1, b2 = (int(v) for v in rng.integers(1, p, size=2))
            if (a1, b1) == (a2, b2):
                continue
            drawn += 1
            off = correlation_t(a1, b1, a2, b2, p)
            off_max = max(off_max, float(off.normalized))
            diag = correlation_t(a1, b1, a1, b1, p)
            diag_lo = min(diag_lo, diag.rho.real)
            diag_hi = max(diag_hi, diag.rho.real)
            diag_imag = max(diag_imag, abs(diag.rho.imag))
        worst_off = max(worst_off, off_max)
        rows.append({"p": int(p), "max_off_diagonal": off_max})
    passed = worst_off <= 10 and 0.3 <= diag_lo and diag_hi <= 3 and diag_imag <= 1e-9
    return SumReport(
        name="correlation_dichotomy",
        value=worst_off,
        bound=10.0,
        ratio=worst_off / 10.0,
        passed=passed,
        params={"primes": [int(p) for p in primes], "tuples_per_prime": tuples_per_prime, "seed": seed},
        details={"diagonal_min": diag_lo, "diagonal_max": diag_hi, "diagonal_max_imag": diag_imag, "per_prime": rows},
    )


def cube_map_is_bijective(p: int) -> bool:
    """Whether ``k -> k^3`` permutes the units modulo the prime ``p``."""
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    cubes = {pow(k, 3, p) for k in range(1, p)}
    return len(cubes) == p - 1


# -- composite trace functions and incomplete sums ----------------------------


@dataclass(frozen=True)
class KloostermanTrace:
    """``n -> Kl(n, q)`` modulo a squarefree ``q``."""

    q: int

    def table(self) -> np.ndarray:
        squarefree_factor(self.q)
        return kloosterman_row(1, self.q) / math.sqrt(self.q)


@dataclass(frozen=True)
class TCorrelationTrace:
    """``y -> T(a1, b1, y; q) conj(T(a2, b2, y; q))`` modulo a squarefree ``q``."""

    q: int
    a1: int
    b1: int
    a2: int
    b2: int

    def table(self) -> np.ndarray:
        squarefree_factor(self.q)
        return t_row(self.a1, self.b1, self.q) * np.conj(t_row(self.a2, self.b2, self.q))


def incomplete_sum(trace, interval: range, weights=None) -> ExpSumValue:
    """``sum_{n in interval} K(n) W(n mod delta)`` with ``|W| <= 1``.

    ``weights`` is a table modulo ``delta``; None means ``W = 1, delta = 1``.
    """
    table = trace.table()
    q = trace.q
    w = np.ones(1) if weights is None else np.asarray(weights)
    if w.size and np.max(np.abs(w)) > 1 + 1e-12:
        raise DomainError("weights must satisfy ||W||_inf <= 1")
    n = np.arange(interval.start, interval.stop, interval.step, dtype=np.int64)
    if n.size == 0:
        return ExpSumValue(0j, q, 0)
    terms = table[n % q] * w[n % w.size]
    return ExpSumValue(_accumulate(terms), q, int(n.size))


def max_fourier_weight(weights) -> float:
    """``||Ŵ_δ||_∞`` with the unitary normalization over ``Z/δZ``."""
    w = np.asarray(weights, dtype=complex)
    return float(np.max(np.abs(np.fft.fft(w))) / math.sqrt(w.size))


def polya_vinogradov_sweep(q: int, intervals: int = 200, seed: int = 0) -> SumReport:
    """Largest ``|sum_{n in I} Kl(n, q)| / (sqrt(q) log q)`` over random intervals."""
    table = KloostermanTrace(q).table()
    # partial sums over two periods give every interval of length <= q in O(1)
    prefix = np.concatenate([[0], np.cumsum(np.tile(table, 2))])
    rng = _rng(seed, q)
    starts = rng.integers(0, q, size=intervals)
    lengths = rng.integers(1, q + 1, size=intervals)
    sums = prefix[starts + lengths] - prefix[starts]
    scale = math.sqrt(q) * math.log(q)
    worst = float(np.max(np.abs(sums)) / scale)
    return SumReport(
        name="polya_vinogradov",
        value=worst,
        params={"q": q, "intervals": intervals, "seed": seed},
        details={"max_abs": float(np.max(np.abs(sums)))},
    )


# -- arithmetic exponent pairs -------------------------------------------------


@dataclass(frozen=True)
class ExponentPair:
    kappa: Fraction
    lambda_: Fraction
    nu: Fraction
    mu: Fraction

    def __post_init__(self):
        for name in ("kappa", "lambda_", "nu", "mu"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not (0 <= self.kappa <= Fraction(1, 2) and self.kappa <= self.lambda_ <= 1):
            raise DomainError(f"inadmissible exponent pair {self}")


TRIVIAL_PAIR = ExponentPair(0, 1, 0, 0)
KNOWN_PAIRS = (
    ExponentPair(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), 1),
    ExponentPair(Fraction(11, 30), Fraction(16, 30), Fraction(1, 6), 1),
    ExponentPair(Fraction(2, 18), Fraction(13, 18), Fraction(11, 28), 0),
)


def exponent_pair_bound(pair: ExponentPair, q: float, interval_len: float, delta: float, w_hat_inf: float) -> float:
    """``(q/|I|)^κ |I|^λ δ^ν ||Ŵ||^μ``, without the ``q^ε`` factor."""
    if interval_len >= q * delta:
        raise DomainError(f"need |I| < q*delta, got |I|={interval_len}, q*delta={q * delta}")
    if min(q, interval_len, delta) <= 0:
        raise DomainError("q, |I| and delta must be positive")
    return (
        (q / interval_len) ** float(pair.kappa)
        * interval_len ** float(pair.lambda_)
        * delta ** float(pair.nu)
        * w_hat_inf ** float(pair.mu)
    )


def exponent_pair_measurement(trace, interval: range, weights, pair: ExponentPair) -> SumReport:
    """Measured incomplete sum against the ε-free exponent-pair bound."""
    w = np.ones(1) if weights is None else np.asarray(weights)
    value = incomplete_sum(trace, interval, w)
    bound = exponent_pair_bound(pair, trace.q, len(interval), w.size, max_fourier_weight(w))
    return SumReport(
        name="exponent_pair",
        value=abs(value),
        bound=bound,
        ratio=abs(value) / bound,
        params={
            "q": trace.q,
            "interval": [interval.start, interval.stop],
            "delta": int(w.size),
            "pair": [pair.kappa, pair.lambda_, pair.nu, pair.mu],
        },
    )
