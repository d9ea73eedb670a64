"""Voronoi summation for the weight 12 cusp form, checked numerically.

    sum lam(n) e(an/q) h(n) = (2 pi i^k / q) sum lam(n) e(-a' n/q) int h(x) J_{k-1}(4 pi sqrt(nx)/q) dx

with ``a a' = 1 mod q``. Both sides are evaluated independently and compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import DomainError, inv_or_zero
from .coefficients import CoefficientStream
from .report import SumReport
from .spectral import V_BUMP, SmoothWindow

WEIGHT = 12
MAX_ORDER = 50
# dual terms past this many phase-scaled units are below 1e-14 of the head
TRUNCATION_CONSTANT = 6800
EFFECTIVE_SUPPORT_CONSTANT = 100


def _series(nu: int, x: np.ndarray) -> np.ndarray:
    h = x / 2
    term = h**nu / math.factorial(nu)
    total = term.copy()
    for k in range(1, 400):
        term = term * (-h * h) / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _hankel(nu: int, x: np.ndarray) -> np.ndarray:
    # asymptotic series, each point stopped at its smallest term
    mu = 4.0 * nu * nu
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    a = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 200):
        a_new = a * (mu - (2 * k - 1) ** 2) / (k * 8 * x)
        if k > nu:
            done |= np.abs(a_new) > np.abs(a)
        a = np.where(done, a, a_new)
        inc = np.where(done, 0.0, a)
        sign = (-1) ** ((k - 1) // 2) if k % 2 else (-1) ** (k // 2)
        if k % 2:
            Q += sign * inc
        else:
            P += sign * inc
        if np.all(done | (np.abs(a) < 1e-18)):
            break
    w = x - nu * np.pi / 2 - np.pi / 4
    return np.sqrt(2 / (np.pi * x)) * (P * np.cos(w) - Q * np.sin(w))


def _bessel_integral(nu: int, x: np.ndarray) -> np.ndarray:
    # (1/pi) int_0^pi cos(nu t - x sin t) dt; the midpoint rule is spectrally
    # accurate for this periodic integrand once M exceeds x + nu
    M = int(np.max(x)) + nu + 64
    t = (np.arange(M) + 0.5) * np.pi / M
    out = np.empty_like(x)
    chunk = max(1, 4_000_000 // M)
    for lo in range(0, x.size, chunk):
        xs = x[lo : lo + chunk, None]
        out[lo : lo + chunk] = np.mean(np.cos(nu * t[None, :] - xs * np.sin(t[None, :])), axis=1)
    return out


def bessel_j(order: int, x) -> np.ndarray | float:
    """``J_order(x)`` for integer ``0 <= order <= 50`` and ``x >= 0``.

    Power series near the origin, Hankel's asymptotic expansion far out and
    Bessel's integral by the midpoint rule in between.
    """
    if not 0 <= order <= MAX_ORDER or int(order) != order:
        raise DomainError(f"order must be an integer in [0, {MAX_ORDER}], got {order}")
    order = int(order)
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise DomainError("bessel_j needs x >= 0")
    out = np.empty_like(xa)
    small = xa <= 8 + order / 2
    large = xa >= max(15.0, order * order / 20 + 10)
    mid = ~(small | large)
    if small.any():
        out[small] = _series(order, xa[small])
    if large.any():
        out[large] = _hankel(order, xa[large])
    if mid.any():
        out[mid] = _bessel_integral(order, xa[mid])
    return float(out[0]) if scalar else out.reshape(np.shape(x))


@dataclass
class VoronoiTestCase:
    """One instance of the identity: twist ``a/q`` and weight ``h(x) = window(x / Y)``."""

    a: int
    q: int
    Y: float
    window: SmoothWindow = field(default_factory=lambda: V_BUMP)
    truncation: int | None = None

    def __post_init__(self):
        if self.q < 1:
            raise DomainError(f"q must be positive, got {self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise DomainError(f"a={self.a} is not coprime to q={self.q}")
        if self.Y <= 0:
            raise DomainError("Y must be positive")
        if self.truncation is None:
            self.truncation = default_truncation(self.q, self.Y)

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.window.support
        return lo * self.Y, hi * self.Y

    @property
    def effective_support(self) -> float:
        return EFFECTIVE_SUPPORT_CONSTANT * self.q**2 / self.Y

    def h(self, x) -> np.ndarray:
        return self.window(np.asarray(x, dtype=float) / self.Y)


def default_truncation(q: int, Y: float) -> int:
    return math.ceil(TRUNCATION_CONSTANT * q * q / Y) + 20


@dataclass
class DualSum:
    value: complex
    truncation: int
    effective_support: float
    warn: bool
    terms: np.ndarray  # |individual dual terms|, index n - 1


def _check_stream(stream: CoefficientStream, top: float):
    if len(stream) < top:
        raise DomainError(f"stream of length {len(stream)} does not cover {top}")


def voronoi_lhs(tc: VoronoiTestCase, stream: CoefficientStream) -> complex:
    lo, hi = tc.support
    n = np.arange(max(1, math.floor(lo)), math.ceil(hi) + 1)
    weights = tc.h(n)
    live = weights != 0
    n, weights = n[live], weights[live]
    if n.size == 0:
        return 0j
    _check_stream(stream, n[-1])
    lam = stream.padded()[n]
    phase = np.exp(2j * np.pi * ((tc.a * n) % tc.q) / tc.q)
    return complex(np.sum(lam * phase * weights))


def _nodes(tc: VoronoiTestCase, n_max: int, minimum: int = 2048):
    lo, hi = tc.support
    periods = 2 * math.sqrt(n_max) * (math.sqrt(hi) - math.sqrt(lo)) / tc.q
    M = max(minimum, 8 * math.ceil(periods))
    x = np.linspace(lo, hi, M + 1)
    return x, (hi - lo) / M


def hankel_transform(tc: VoronoiTestCase, n) -> np.ndarray:
    """``int h(x) J_{k-1}(4 pi sqrt(n x) / q) dx`` for each dual index ``n``.

    The window vanishes to all orders at both ends, so the trapezoid rule on a
    uniform grid converges faster than any power of the node count.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    x, dx = _nodes(tc, int(n.max()))
    hx = tc.h(x)
    live = hx != 0
    x, hx = x[live], hx[live]
    out = np.empty(n.size)
    chunk = max(1, 2_000_000 // x.size)
    for lo in range(0, n.size, chunk):
        arg = 4 * np.pi * np.sqrt(np.outer(n[lo : lo + chunk], x)) / tc.q
        out[lo : lo + chunk] = bessel_j(WEIGHT - 1, arg) @ hx * dx
    return out


def voronoi_rhs(tc: VoronoiTestCase, stream: CoefficientStream, transform: np.ndarray | None = None) -> DualSum:
    """Dual side truncated at ``tc.truncation`` terms.

    ``transform`` may carry precomputed Hankel transforms; they depend only on
    ``(q, Y, window)`` so every ``a`` can share them.
    """
    N = int(tc.truncation)
    _check_stream(stream, N)
    n = np.arange(1, N + 1)
    H = hankel_transform(tc, n) if transform is None else transform[:N]
    abar = inv_or_zero(tc.a, tc.q)
    lam = stream.padded()[1 : N + 1]
    terms = lam * np.exp(-2j * np.pi * ((abar * n) % tc.q) / tc.q) * H
    const = 2 * np.pi * (1j**WEIGHT).real / tc.q
    return DualSum(
        value=complex(const * np.sum(terms)),
        truncation=N,
        effective_support=tc.effective_support,
        warn=N < tc.effective_support,
        terms=np.abs(const * terms),
    )


def voronoi_check(tc: VoronoiTestCase, stream: CoefficientStream, transform: np.ndarray | None = None) -> dict:
    lhs = voronoi_lhs(tc, stream)
    rhs = voronoi_rhs(tc, stream, transform)
    rel = abs(lhs - rhs.value) / max(abs(lhs), 1e-300)
    return {
        "a": tc.a,
        "q": tc.q,
        "Y": tc.Y,
        "lhs": lhs,
        "rhs": rhs.value,
        "rel_err": rel,
        "truncation": rhs.truncation,
        "warn": rhs.warn,
    }


def voronoi_sweep(stream: CoefficientStream, q_max: int = 10, Ys=(500, 1000), tol: float = 1e-4,
                  window: SmoothWindow = V_BUMP) -> SumReport:
    """All ``q <= q_max`` and all reduced residues ``a``; passes when every relative error is below ``tol``."""
    rows = []
    for Y in Ys:
        for q in range(1, q_max + 1):
            base = VoronoiTestCase(1, q, Y, window)
            H = hankel_transform(base, np.arange(1, base.truncation + 1))
            for a in range(1, q + 1):
                if math.gcd(a, q) == 1:
                    rows.append(voronoi_check(VoronoiTestCase(a % q, q, Y, window), stream, H))
    worst = max(r["rel_err"] for r in rows)
    return SumReport(
        name="voronoi_gl2",
        value=worst,
        bound=tol,
        ratio=worst / tol,
        passed=bool(worst <= tol and not any(r["warn"] for r in rows)),
        params={"q_max": q_max, "Ys": list(Ys), "weight": WEIGHT},
        details={"cases": len(rows), "rows": rows},
    )


def transform_decay_check(Y: float, y_grid=None, window: SmoothWindow = V_BUMP, fit_from: float = 10.0,
                          noise_floor: float = 1e-12, min_decay: float = 3.0) -> SumReport:
    """``H(y) = int h(x) J_{k-1}(4 pi sqrt(x y)) dx`` on a grid, with a fitted decay exponent.

    ``A`` is the negated slope of ``log|H|`` against ``log(1 + yY)`` over the
    points with ``yY >= fit_from`` that stay above ``noise_floor * Y``.
    """
    if y_grid is None:
        y_grid = np.logspace(-2, 3.5, 45) / Y
    y = np.asarray(y_grid, dtype=float)
    tc = VoronoiTestCase(1, 1, Y, window, truncation=1)
    H = np.array([hankel_transform(tc, [yy * tc.q**2])[0] if yy > 0 else 0.0 for yy in y])
    scaled = np.abs(H) / Y
    yY = y * Y
    use = (yY >= fit_from) & (scaled > noise_floor)
    if np.count_nonzero(use) >= 2:
        slope = np.polyfit(np.log1p(yY[use]), np.log(scaled[use]), 1)[0]
        A = -float(slope)
    else:
        A = float("nan")
    flat = scaled[yY <= 0.01]
    return SumReport(
        name="transform_decay",
        value=A,
        bound=min_decay,
        passed=bool(A >= min_decay),
        params={"Y": Y, "fit_from": fit_from, "noise_floor": noise_floor},
        details={
            "yY": yY,
            "H_over_Y": scaled,
            "flat_constant": float(flat.max()) if flat.size else None,
            "fit_points": int(np.count_nonzero(use)),
        },
    )
