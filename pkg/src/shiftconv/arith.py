"""Exact modular arithmetic, squarefree factorization and CRT helpers.

Python integers are unbounded, so products of residues never overflow; the
vectorized kernels elsewhere keep moduli small enough for int64 products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class DomainError(ValueError):
    """An argument violates a precondition (coprimality, range, squarefreeness)."""


class NotSquarefreeError(DomainError):
    pass


@dataclass(frozen=True)
class Factorization:
    modulus: int
    primes: tuple[int, ...]

    def __post_init__(self):
        if math.prod(self.primes) != self.modulus:
            raise DomainError(f"primes {self.primes} do not multiply to {self.modulus}")
        if len(set(self.primes)) != len(self.primes):
            raise NotSquarefreeError(f"repeated prime in {self.primes}")

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def mod_inv(a: int, m: int) -> int:
    """Inverse of ``a`` modulo ``m``, canonicalized to ``[1, m)``."""
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")
    a %= m
    if math.gcd(a, m) != 1:
        raise DomainError(f"{a} is not invertible mod {m}")
    return pow(a, -1, m)


def inv_or_zero(a: int, m: int) -> int:
    """Inverse mod ``m``, with the modulus-1 convention that everything is 0."""
    if m == 1:
        return 0
    return mod_inv(a, m)


def factor(n: int) -> dict[int, int]:
    """Prime factorization by trial division; fine for ``n <= 1e9``."""
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    out: dict[int, int] = {}
    for p in _SMALL_PRIMES:
        if p * p > n:
            break
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p = _SMALL_PRIMES[-1] + 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@lru_cache(maxsize=4096)
def squarefree_factor(n: int) -> Factorization:
    """Factor a squarefree ``n``; raise :class:`NotSquarefreeError` otherwise."""
    fac = factor(n)
    if any(e > 1 for e in fac.values()):
        raise NotSquarefreeError(f"{n} is not squarefree")
    return Factorization(n, tuple(sorted(fac)))


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factor(n).values())


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factor(n) == {n: 1}


def totient(n: int) -> int:
    out = n
    for p in factor(n):
        out -= out // p
    return out


def mobius(n: int) -> int:
    fac = factor(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def divisor_count(n: int) -> int:
    return math.prod(e + 1 for e in factor(n).values())


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factor(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def primes_up_to(n: int) -> np.ndarray:
    """Sieve of Eratosthenes, returning all primes ``<= n``."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0]


def squarefree_up_to(n: int) -> np.ndarray:
    """Boolean mask of length ``n + 1``; entry ``k`` is True iff ``k`` is squarefree."""
    mask = np.ones(n + 1, dtype=bool)
    mask[0] = False
    for p in primes_up_to(math.isqrt(n)):
        mask[p * p :: p * p] = False
    return mask


def totients_up_to(n: int) -> np.ndarray:
    phi = np.arange(n + 1, dtype=np.int64)
    for p in primes_up_to(n):
        phi[p::p] -= phi[p::p] // p
    return phi


def crt_split(x: int, f: Factorization) -> tuple[int, ...]:
    return tuple(x % p for p in f.primes)


def crt_combine(residues, f: Factorization) -> int:
    """Inverse of :func:`crt_split`: the unique ``x mod f.modulus``."""
    m = f.modulus
    x = 0
    for r, p in zip(residues, f.primes, strict=True):
        cofactor = m // p
        x += r * cofactor * inv_or_zero(cofactor, p)
    return x % m


@lru_cache(maxsize=512)
def unit_table(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Units ``x`` modulo ``c`` and their inverses, as parallel int64 arrays.

    For ``c == 1`` the single residue 0 counts as a unit with inverse 0.
    """
    if c == 1:
        z = np.zeros(1, dtype=np.int64)
        return z, z
    xs = np.array([x for x in range(1, c) if math.gcd(x, c) == 1], dtype=np.int64)
    inv = np.array([pow(int(x), -1, c) for x in xs], dtype=np.int64)
    xs.setflags(write=False)
    inv.setflags(write=False)
    return xs, inv
