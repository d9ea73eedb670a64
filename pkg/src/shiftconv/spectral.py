"""Shifted convolution sums, resonance sums and their average identities.

With windows ``V`` (bump on [1, 2]) and ``W`` (plateau on [2/3, 5/2],
support [1/2, 3]) the doubly windowed shifted convolution is

    D_h(X) = sum_m lambda_1(1, m) lambda_2(m + h) V(m / X) W((m + h) / X),

and the resonance sums are

    S1(x, X) = sum_m lambda_1(1, m) e(x m) V(m / X),
    S2(x, X) = sum_n lambda_2(n) e(-x n) W(n / X),

so that ``D_h(X) = int_0^1 e(x h) S1(x, X) S2(x, X) dx``.  For ``|h| <= X/3``
the plateau of ``W`` covers every ``m + h`` and ``D_h`` is the single-window sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import DomainError
from .coefficients import CoefficientStream
from .report import SumReport


def _flat(t: np.ndarray) -> np.ndarray:
    # exp(-1/t) for t > 0, else 0
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    a = _flat(t)
    return a / (a + _flat(1.0 - t))


@dataclass(frozen=True)
class SmoothWindow:
    kind: str
    support: tuple[float, float]
    plateau: tuple[float, float] | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "V-bump":
            lo, hi = self.support
            out = np.zeros_like(x)
            inside = (x > lo) & (x < hi)
            t = (x[inside] - lo) / (hi - lo)
            # exp(-1/((x-1)(2-x))) on [1, 2], scaled to peak value 1
            out[inside] = np.exp(4.0 - 1.0 / (t * (1.0 - t)))
            return out
        if self.kind == "W-plateau":
            lo, hi = self.support
            a, b = self.plateau
            return _smoothstep((x - lo) / (a - lo)) * _smoothstep((hi - x) / (hi - b))
        raise DomainError(f"unknown window kind {self.kind!r}")


V_BUMP = SmoothWindow("V-bump", (1.0, 2.0))
W_PLATEAU = SmoothWindow("W-plateau", (0.5, 3.0), (2.0 / 3.0, 2.5))


def window_eval(w: SmoothWindow, x):
    out = w(x)
    return float(out) if np.ndim(out) == 0 else out


# -- weighted sequences --------------------------------------------------------


def _int_range(lo: float, hi: float) -> np.ndarray:
    return np.arange(max(1, math.ceil(lo)), math.floor(hi) + 1, dtype=np.int64)


def _require(stream: CoefficientStream, top: float, what: str):
    if len(stream) < math.floor(top):
        raise DomainError(f"{what} stream has length {len(stream)}, needs >= {math.floor(top)}")


def gl3_sequence(X: float, stream: CoefficientStream, V: SmoothWindow = V_BUMP):
    """Indices ``m`` in the support of ``V(m/X)`` and weights ``lambda_1(1,m) V(m/X)``."""
    lo, hi = V.support
    _require(stream, hi * X, "GL(3)")
    m = _int_range(lo * X, hi * X)
    return m, stream.padded()[m] * V(m / X)


def gl2_sequence(X: float, stream: CoefficientStream, W: SmoothWindow = W_PLATEAU):
    lo, hi = W.support
    _require(stream, hi * X, "GL(2)")
    n = _int_range(lo * X, hi * X)
    return n, stream.padded()[n] * W(n / X)


def _eval_trig(idx: np.ndarray, coef: np.ndarray, alpha, sign: int):
    alpha = np.asarray(alpha, dtype=float)
    flat = alpha.ravel()
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 4_000_000 // max(1, idx.size))
    for lo in range(0, flat.size, chunk):
        a = flat[lo : lo + chunk, None]
        # reduce the phase exactly before scaling by 2 pi
        ph = np.mod(a * idx[None, :], 1.0)
        out[lo : lo + chunk] = np.exp(sign * 2j * np.pi * ph) @ coef
    return complex(out[0]) if alpha.ndim == 0 else out.reshape(alpha.shape)


def resonance_gl3(alpha, X: float, stream: CoefficientStream, V: SmoothWindow = V_BUMP):
    """``S1(alpha, X) = sum_m lambda_1(1, m) e(alpha m) V(m/X)``."""
    m, a = gl3_sequence(X, stream, V)
    return _eval_trig(m, a, alpha, +1)


def resonance_gl2(alpha, X: float, stream: CoefficientStream, W: SmoothWindow = W_PLATEAU):
    """``S2(alpha, X) = sum_n lambda_2(n) e(-alpha n) W(n/X)``."""
    n, b = gl2_sequence(X, stream, W)
    return _eval_trig(n, b, alpha, -1)


def _next_pow2(n: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(1.0, n))))


def resonance_sup(idx: np.ndarray, coef: np.ndarray, X: float) -> tuple[float, float]:
    """``sup |sum_k coef_k e(alpha k)|`` over the resonance grid, and its argmax.

    The grid is every ``j / M`` with ``M`` a power of two ``>= 16X``, plus all
    fractions ``a / q`` with ``q <= sqrt(X)``; the latter via residue-class
    sums and one length-``q`` DFT per denominator.
    """
    M = _next_pow2(max(16 * X, idx.max() + 1))
    dense = np.zeros(M, dtype=complex)
    dense[idx] = coef
    vals = np.abs(M * np.fft.ifft(dense))
    best = float(vals.max())
    where = float(np.argmax(vals) / M)
    for q in range(1, math.isqrt(int(X)) + 1):
        res = np.bincount(idx % q, weights=coef.real, minlength=q) + 1j * np.bincount(
            idx % q, weights=coef.imag, minlength=q
        )
        rv = np.abs(q * np.fft.ifft(res))
        j = int(np.argmax(rv))
        if rv[j] > best:
            best, where = float(rv[j]), j / q
    return best, where


def wilton_miller(X: float, gl3: CoefficientStream, gl2: CoefficientStream,
                  V: SmoothWindow = V_BUMP, W: SmoothWindow = W_PLATEAU) -> SumReport:
    """Sup-constants ``sup|S1| / X^{3/4}`` and ``sup|S2| / X^{1/2}`` at one scale."""
    m, a = gl3_sequence(X, gl3, V)
    n, b = gl2_sequence(X, gl2, W)
    s1, at1 = resonance_sup(m, a, X)
    s2, at2 = resonance_sup(n, b, X)
    c1 = s1 / X**0.75
    c2 = s2 / X**0.5
    return SumReport(
        name="wilton_miller",
        value={"gl3": c1, "gl2": c2},
        bound=20.0,
        ratio=max(c1, c2) / 20.0,
        passed=c1 <= 20 and c2 <= 20,
        params={"X": X, "gl3_kind": gl3.kind, "gl2_kind": gl2.kind},
        details={"gl3_sup": s1, "gl3_argmax": at1, "gl2_sup": s2, "gl2_argmax": at2},
    )


# -- shifted convolutions ------------------------------------------------------


@dataclass
class ShiftSpectrum:
    X: float
    h_min: int
    h_max: int
    values: np.ndarray

    def at(self, h):
        h = np.asarray(h)
        inside = (h >= self.h_min) & (h <= self.h_max)
        out = np.zeros(h.shape, dtype=complex)
        out[inside] = self.values[h[inside] - self.h_min]
        return complex(out) if out.ndim == 0 else out

    @property
    def shifts(self) -> np.ndarray:
        return np.arange(self.h_min, self.h_max + 1)

    def energy(self) -> float:
        return float(math.fsum(np.abs(self.values) ** 2))


def shifted_conv_direct(h: int, X: float, gl3: CoefficientStream, gl2: CoefficientStream,
                        V: SmoothWindow = V_BUMP, W: SmoothWindow = W_PLATEAU) -> complex:
    """``D_h(X)`` as a finite sum over the support of ``V``."""
    if abs(h) > 3 * X:
        raise DomainError(f"|h| = {abs(h)} exceeds 3X = {3 * X}")
    m, a = gl3_sequence(X, gl3, V)
    n = m + h
    lo, hi = W.support
    keep = (n >= max(1, lo * X)) & (n <= hi * X)
    _require(gl2, hi * X, "GL(2)")
    lam2 = gl2.padded()[n[keep]]
    return complex(np.sum(a[keep] * lam2 * W(n[keep] / X)))


def shifted_conv_all(X: float, gl3: CoefficientStream, gl2: CoefficientStream,
                     V: SmoothWindow = V_BUMP, W: SmoothWindow = W_PLATEAU) -> ShiftSpectrum:
    """Every ``D_h(X)`` for ``|h| <= 3X`` from one FFT cross-correlation."""
    m, a = gl3_sequence(X, gl3, V)
    n, b = gl2_sequence(X, gl2, W)
    size = _next_pow2(max(8 * X, m.size + n.size))
    # sum_i a_i b_{i+k}: transform of a with the opposite sign convention
    corr = np.fft.ifft(size * np.fft.ifft(a, size) * np.fft.fft(b, size))
    H = math.floor(3 * X)
    hs = np.arange(-H, H + 1)
    k = hs - (n[0] - m[0])
    valid = (k > -m.size) & (k < n.size)
    values = np.zeros(hs.size, dtype=complex)
    values[valid] = corr[k[valid] % size]
    if np.isrealobj(a) and np.isrealobj(b):
        values = values.real.astype(complex)
    return ShiftSpectrum(X, -H, H, values)


def parseval_check(X: float, gl3: CoefficientStream, gl2: CoefficientStream,
                   V: SmoothWindow = V_BUMP, W: SmoothWindow = W_PLATEAU,
                   spectrum: ShiftSpectrum | None = None) -> SumReport:
    """``sum_h |D_h|^2`` against ``int_0^1 |S1 S2|^2``.

    The integrand is a trigonometric polynomial whose frequencies span less
    than ``M``, so the ``M``-point equispaced rule evaluates it exactly; the
    right side never forms a shifted sum.
    """
    spectrum = spectrum or shifted_conv_all(X, gl3, gl2, V, W)
    lhs = spectrum.energy()
    m, a = gl3_sequence(X, gl3, V)
    n, b = gl2_sequence(X, gl2, W)
    M = _next_pow2(8 * X + 1)
    A = np.zeros(M, dtype=complex)
    A[m] = a
    B = np.zeros(M, dtype=complex)
    B[n] = b
    s1 = M * np.fft.ifft(A)  # sum_m a_m e(m j / M)
    s2 = np.fft.fft(B)  # sum_n b_n e(-n j / M)
    rhs = float(math.fsum(np.abs(s1 * s2) ** 2) / M)
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return SumReport(
        name="parseval",
        value={"lhs": lhs, "rhs": rhs},
        bound=1e-6,
        ratio=rel / 1e-6,
        passed=rel <= 1e-6,
        params={"X": X, "gl3_kind": gl3.kind, "gl2_kind": gl2.kind, "quadrature_points": M},
        details={"relative_difference": rel, "energy_over_X2": lhs / X**2},
    )


def smoothed_average(H: float, X: float, U, spectrum: ShiftSpectrum) -> SumReport:
    """``sum_{h >= 1} U(h/H) D_h(X)`` against the trivial bound ``H max|D_h|``."""
    if H > 3 * X:
        raise DomainError(f"H = {H} exceeds 3X = {3 * X}")
    hs = np.arange(1, spectrum.h_max + 1)
    weights = np.asarray(U(hs / H), dtype=float)
    vals = spectrum.at(hs)
    total = complex(np.sum(weights * vals))
    active = weights != 0
    peak = float(np.max(np.abs(vals[active]))) if active.any() else 0.0
    trivial = H * peak
    return SumReport(
        name="smoothed_average",
        value=total,
        bound=trivial,
        ratio=abs(total) / trivial if trivial else 0.0,
        params={"H": H, "X": spectrum.X},
        details={"max_abs_D": peak, "active_shifts": int(active.sum())},
    )


def decay_exponent_fit(h: int, X_grid, gl3: CoefficientStream, gl2: CoefficientStream,
                       V: SmoothWindow = V_BUMP, W: SmoothWindow = W_PLATEAU) -> SumReport:
    """Least-squares slope of ``log|D_h(X)|`` against ``log X``; reporting only."""
    X_grid = [float(X) for X in X_grid]
    if len(X_grid) < 4:
        raise DomainError("need at least 4 scales")
    vals = [abs(shifted_conv_direct(h, X, gl3, gl2, V, W)) for X in X_grid]
    keep = [(X, v) for X, v in zip(X_grid, vals) if v > 0]
    excluded = [X for X, v in zip(X_grid, vals) if v <= 0]
    if len(keep) < 2:
        raise DomainError("fewer than two nonzero values to fit")
    lx = np.log([X for X, _ in keep])
    lv = np.log([v for _, v in keep])
    slope = float(np.polyfit(lx, lv, 1)[0])
    return SumReport(
        name="decay_exponent",
        value=slope,
        params={"h": h, "X_grid": X_grid},
        details={"abs_values": vals, "excluded_zero_points": excluded},
    )
