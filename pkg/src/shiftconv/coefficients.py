"""Hecke eigenvalue streams: Ramanujan tau, its symmetric-square lift, tau_3.

The GL(2) stream is the unitarily normalized Delta function,
``lambda_2(n) = tau(n) / n^{11/2}``.  Two computable stand-ins fill the GL(3)
slot: the symmetric-square lift of Delta and the ternary divisor function.
"""

from __future__ import annotations

import math
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
import numpy as np

from .arith import DomainError, divisors, mobius, primes_up_to
from .report import SumReport

GL2 = "gl2-holomorphic-delta"
SYM2 = "gl3-sym2-lift"
TAU3 = "gl3-tau3-proxy"
CUSTOM = "custom"
KINDS = (GL2, SYM2, TAU3)

MAX_TAU_N = 10**6
_KIND_CODES = {GL2: 1, SYM2: 2, TAU3: 3}
_MAGIC = b"SHCVSTRM"
_HEADER = struct.Struct("<8sQQQ")  # magic, kind code, N, crc32 of payload


@dataclass
class CoefficientStream:
    """Coefficients ``values[n - 1]`` for ``1 <= n <= N``."""

    kind: str
    values: np.ndarray
    provenance: str = ""
    _padded: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.values)

    @property
    def length(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int):
        if not 1 <= n <= len(self.values):
            raise DomainError(f"index {n} outside stream range [1, {len(self.values)}]")
        return self.values[n - 1]

    def padded(self) -> np.ndarray:
        """Values indexed directly by ``n``, with a zero in slot 0."""
        if self._padded is None:
            self._padded = np.concatenate([np.zeros(1, dtype=self.values.dtype), self.values])
        return self._padded

    def scaled(self, factor: float) -> CoefficientStream:
        return CoefficientStream(CUSTOM, self.values * factor, f"{self.provenance} * {factor}")

    @classmethod
    def from_values(cls, values, provenance: str = "custom") -> CoefficientStream:
        return cls(CUSTOM, np.asarray(values), provenance)


# -- Ramanujan tau -------------------------------------------------------------


def _pack(coeffs, bits: int) -> gmpy2.mpz:
    # signed digits in base 2^bits: shift each into [0, 2^bits), then remove the shift
    nbytes = bits // 8
    off = 1 << (bits - 1)
    raw = b"".join((int(c) + off).to_bytes(nbytes, "little") for c in coeffs)
    shift = int.from_bytes(off.to_bytes(nbytes, "little") * len(coeffs), "little")
    return gmpy2.mpz(int.from_bytes(raw, "little")) - shift


def _unpack(value: gmpy2.mpz, count: int, bits: int) -> np.ndarray:
    nbytes = bits // 8
    off = 1 << (bits - 1)
    shift = int.from_bytes(off.to_bytes(nbytes, "little") * count, "little")
    value = (value + shift) % (gmpy2.mpz(1) << (bits * count))
    words = np.frombuffer(int(value).to_bytes(nbytes * count, "little"), dtype="<u8")
    words = words.reshape(count, nbytes // 8)
    out = words[:, -1].astype(object)
    for j in range(nbytes // 8 - 2, -1, -1):
        out = (out << 64) + words[:, j].astype(object)
    return out - off


def ramanujan_tau(N: int) -> np.ndarray:
    """Exact ``tau(0..N)`` (with ``tau(0) = 0``) from ``q prod (1 - q^n)^24``.

    Starts from Jacobi's sparse series for ``prod (1 - q^n)^3`` and squares
    three times; each squaring is one big-integer product via Kronecker
    substitution.  Coefficients below ``2^190`` cover ``N <= 10^6``.
    """
    if not 1 <= N <= MAX_TAU_N:
        raise DomainError(f"N must be in [1, {MAX_TAU_N}], got {N}")
    bits = 192
    series = [0] * N  # coefficient of q^j for 0 <= j < N
    k = 0
    while k * (k + 1) // 2 < N:
        series[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    for _ in range(3):
        packed = _pack(series, bits)
        series = _unpack(packed * packed, N, bits)
    tau = np.empty(N + 1, dtype=object)
    tau[0] = 0
    tau[1:] = series
    return tau


def eta_power_sparse(N: int, power: int = 24) -> list[int]:
    """Coefficients of ``prod (1 - q^n)^power`` below ``q^N`` by repeated sparse products.

    Uses Euler's pentagonal series; O(power * N^{3/2}).  Slow but independent
    of :func:`ramanujan_tau`.
    """
    pent = []
    k = 0
    while True:
        hit = False
        for j in (k, -k) if k else (0,):
            e = j * (3 * j - 1) // 2
            if e < N:
                pent.append((e, -1 if k % 2 else 1))
                hit = True
        if not hit and k > 0:
            break
        k += 1
    series = [0] * N
    series[0] = 1
    for _ in range(power):
        nxt = [0] * N
        for e, s in pent:
            for i in range(N - e):
                if series[i]:
                    nxt[i + e] += s * series[i]
        series = nxt
    return series


# -- streams -------------------------------------------------------------------


def lambda_gl2(N: int, cache_dir=None) -> CoefficientStream:
    """``lambda_2(n) = tau(n) / n^{11/2}`` for ``n <= N``."""
    return _cached(GL2, N, cache_dir, _build_gl2)


def _build_gl2(N: int) -> np.ndarray:
    tau = ramanujan_tau(N)
    n = np.arange(1, N + 1, dtype=float)
    return np.array([float(t) for t in tau[1:]]) / n**5.5


def hecke_prime_powers(lam_p: float, kmax: int) -> list[float]:
    """``lambda(p^k)`` for ``0 <= k <= kmax`` from ``lambda(p)`` by the Hecke recursion."""
    out = [1.0, lam_p]
    while len(out) <= kmax:
        out.append(lam_p * out[-1] - out[-2])
    return out[: kmax + 1]


def multiplicative_from_prime_powers(N: int, value_at) -> np.ndarray:
    """Multiplicative function on ``1..N`` (slot 0 unused) given ``value_at(p, k)``."""
    out = np.ones(N + 1)
    out[0] = 0.0
    for p in primes_up_to(N):
        p = int(p)
        pk, k = p, 1
        while pk <= N:
            idx = np.arange(pk, N + 1, pk)
            exact = idx[(idx // pk) % p != 0]
            out[exact] *= value_at(p, k)
            pk *= p
            k += 1
    return out


def sym2_lift(N: int, cache_dir=None) -> CoefficientStream:
    """``A(1, n) = sum_{a^2 b = n} lambda_2(b^2)`` for ``n <= N``."""
    return _cached(SYM2, N, cache_dir, _build_sym2)


def _build_sym2(N: int) -> np.ndarray:
    if N > MAX_TAU_N:
        raise DomainError(f"N must be <= {MAX_TAU_N}")
    lam = lambda_gl2(N).padded()
    kmax = max(1, int(math.log2(N)) + 1)
    cache: dict[int, list[float]] = {}

    def at_square(p: int, k: int) -> float:
        # lambda_2(p^{2k})
        if p not in cache:
            cache[p] = hecke_prime_powers(float(lam[p]), 2 * kmax)
        return cache[p][2 * k]

    g = multiplicative_from_prime_powers(N, at_square)
    out = np.zeros(N + 1)
    for a in range(1, math.isqrt(N) + 1):
        out[a * a :: a * a] += g[1 : N // (a * a) + 1]
    return out[1:]


def tau3(N: int, cache_dir=None) -> CoefficientStream:
    """Ternary divisor function ``#{(a, b, c): abc = n}`` by a two-pass sieve."""
    return _cached(TAU3, N, cache_dir, _build_tau3)


def _build_tau3(N: int) -> np.ndarray:
    if not 1 <= N <= MAX_TAU_N:
        raise DomainError(f"N must be in [1, {MAX_TAU_N}]")
    d = np.zeros(N + 1, dtype=np.int64)
    for k in range(1, N + 1):
        d[k::k] += 1
    t3 = np.zeros(N + 1, dtype=np.int64)
    for k in range(1, N + 1):
        t3[k::k] += d[k]
    return t3[1:]


_BUILDERS = {GL2: _build_gl2, SYM2: _build_sym2, TAU3: _build_tau3}


def build_stream(kind: str, N: int, cache_dir=None) -> CoefficientStream:
    if kind not in _BUILDERS:
        raise DomainError(f"unknown stream kind {kind!r}; expected one of {KINDS}")
    return _cached(kind, N, cache_dir, _BUILDERS[kind])


# -- caching -------------------------------------------------------------------

_memory_cache: dict[tuple[str, int], CoefficientStream] = {}


def _cached(kind: str, N: int, cache_dir, builder) -> CoefficientStream:
    if int(N) != N or N < 1:
        raise DomainError(f"stream length must be a positive integer, got {N}")
    N = int(N)
    key = (kind, N)
    if key in _memory_cache:
        return _memory_cache[key]
    cache_dir = cache_dir or os.environ.get("SHIFTCONV_CACHE_DIR")
    path = Path(cache_dir) / f"{kind}-{N}.bin" if cache_dir else None
    stream = None
    if path is not None and path.exists():
        try:
            stream = load_stream(path)
        except (OSError, ValueError):
            stream = None
    if stream is None:
        stream = CoefficientStream(kind, builder(N), _provenance(kind, N))
        if path is not None:
            save_stream(stream, path)
    _memory_cache[key] = stream
    return stream


def _provenance(kind: str, N: int) -> str:
    return {
        GL2: f"tau(n)/n^5.5 from q*prod(1-q^n)^24, n <= {N}",
        SYM2: f"sum_(a^2 b = n) lambda_2(b^2), Hecke recursion at primes, n <= {N}",
        TAU3: f"ternary divisor sieve, n <= {N}",
    }[kind]


def save_stream(stream: CoefficientStream, path) -> None:
    """Write ``stream`` as a 32-byte header plus a little-endian 64-bit column."""
    if stream.kind not in _KIND_CODES:
        raise DomainError(f"only {KINDS} streams are cacheable")
    dtype = "<i8" if stream.kind == TAU3 else "<f8"
    payload = np.ascontiguousarray(stream.values, dtype=dtype).tobytes()
    header = _HEADER.pack(_MAGIC, _KIND_CODES[stream.kind], len(stream), zlib.crc32(payload))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(header + payload)
    tmp.replace(path)


def load_stream(path) -> CoefficientStream:
    """Memory-map a cached stream, validating magic and checksum."""
    path = Path(path)
    with path.open("rb") as fh:
        magic, code, N, crc = _HEADER.unpack(fh.read(_HEADER.size))
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    kind = {v: k for k, v in _KIND_CODES.items()}.get(code)
    if kind is None:
        raise ValueError(f"{path}: unknown kind code {code}")
    dtype = "<i8" if kind == TAU3 else "<f8"
    values = np.memmap(path, dtype=dtype, mode="r", offset=_HEADER.size, shape=(N,))
    if zlib.crc32(values.tobytes()) != crc:
        raise ValueError(f"{path}: checksum mismatch")
    return CoefficientStream(kind, values, _provenance(kind, N) + " (cached)")


# -- GL(3) coefficients at two indices -----------------------------------------


def lambda1_full(m1: int, m2: int, stream: CoefficientStream) -> float:
    """``lambda_1(m1, m2) = sum_{d | (m1, m2)} mu(d) lambda_1(m1/d, 1) lambda_1(1, m2/d)``.

    Uses the self-dual convention ``lambda_1(m, 1) = lambda_1(1, m)``.
    """
    if m1 < 1 or m2 < 1:
        raise DomainError("indices must be positive")
    total = 0.0
    for d in divisors(math.gcd(m1, m2)):
        mu = mobius(d)
        if mu:
            total += mu * stream[m1 // d] * stream[m2 // d]
    return total


def second_moment_check(stream: CoefficientStream, ladder) -> SumReport:
    """Rankin-Selberg style second moments ``sum_{n <= N} |c(n)|^2 / N``.

    Passes when every ratio is at most 100 and doubling ``N`` (``N/2 -> N``)
    grows the ratio by at most 2.5x.
    """
    ladder = [int(N) for N in ladder]
    if max(ladder) > len(stream):
        raise DomainError(f"ladder exceeds stream length {len(stream)}")
    sq = np.cumsum(np.abs(np.asarray(stream.values, dtype=float)) ** 2)
    ratios = {N: float(sq[N - 1] / N) for N in ladder}
    growth = {N: ratios[N] / float(sq[N // 2 - 1] / (N // 2)) for N in ladder if N >= 2}
    passed = all(r <= 100 for r in ratios.values()) and all(g <= 2.5 for g in growth.values())
    return SumReport(
        name="second_moment",
        value=ratios,
        bound=100.0,
        ratio=max(ratios.values()) / 100.0,
        passed=passed,
        params={"kind": stream.kind, "ladder": ladder},
        details={"doubling_growth": growth},
    )
