"""The acceptance battery: ten checks, each returning a :class:`CriterionResult`.

Every check has a full configuration and a lighter ``quick`` one used for
smoke runs. Randomized parts draw from counter-based generators keyed on
``seed`` so reruns select identical samples.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import circle, expsums, optimizer, spectral, voronoi
from .arith import divisor_count, is_prime, primes_up_to, squarefree_up_to
from .coefficients import GL2, SYM2, build_stream
from .parallel import parallel_map


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:>2} {self.name}: {self.summary} ({self.elapsed:.1f}s)"


@dataclass
class Context:
    quick: bool = False
    seed: int = 0
    workers: int = 1
    cache_dir: str | None = None
    _streams: dict = field(default_factory=dict)

    def stream(self, kind: str, N: int):
        have = self._streams.get(kind)
        if have is None or len(have) < N:
            self._streams[kind] = build_stream(kind, int(N), self.cache_dir)
        return self._streams[kind]


# -- 1: identities -------------------------------------------------------------


def _identity_item(item):
    which, x, y, exhaustive, seed = item
    sweep = expsums.s_factorization_sweep if which == "S" else expsums.t_multiplicativity_sweep
    r = sweep(x, y, exhaustive, samples=100, seed=seed)
    return which, x, y, exhaustive, r.value


def identity_suite(ctx: Context) -> CriterionResult:
    full_cap, rand_cap = (30, 120) if ctx.quick else (60, 300)
    items = []
    for x, y in expsums.coprime_splittings(rand_cap):
        exhaustive = x * y <= full_cap
        items.append(("S", x, y, exhaustive, ctx.seed))
        items.append(("T", x, y, exhaustive, ctx.seed))
    rows = parallel_map(_identity_item, items, ctx.workers)
    worst_s = max(r[4] for r in rows if r[0] == "S")
    worst_t = max(r[4] for r in rows if r[0] == "T")
    passed = worst_s <= expsums.IDENTITY_RTOL and worst_t <= expsums.IDENTITY_RTOL
    return CriterionResult(
        1, "identity suite", passed,
        f"{len(rows)} sweeps up to modulus {rand_cap} (exhaustive <= {full_cap}); "
        f"max rel err S {worst_s:.1e}, T {worst_t:.1e} (tol 1e-6)",
        details={"worst_s": worst_s, "worst_t": worst_t, "sweeps": len(rows)},
    )


# -- 2: Weil bound -------------------------------------------------------------


def _weil_prime(p: int) -> tuple[int, float]:
    K = expsums.kloosterman_table(int(p))
    core = np.abs(K[1:, 1:])  # p does not divide m n
    bound = 2 * math.sqrt(p)
    return int(np.count_nonzero(core > bound * (1 + 1e-12))), float(core.max() / math.sqrt(p))


def weil_deligne(ctx: Context) -> CriterionResult:
    p_cap, q_count = (200, 50) if ctx.quick else (1000, 200)
    primes = [int(p) for p in primes_up_to(p_cap - 1)]
    rows = parallel_map(_weil_prime, primes, ctx.workers)
    prime_violations = sum(v for v, _ in rows)
    worst_prime = max(c for _, c in rows)
    rng = expsums._rng(ctx.seed, 2)
    sf = np.flatnonzero(squarefree_up_to(10_000))
    sf = sf[sf >= 2]
    qs = rng.choice(sf, size=q_count, replace=False)
    comp_violations = 0
    worst_comp = 0.0
    for q in qs:
        q = int(q)
        n = int(rng.integers(1, q))
        kl = abs(expsums.kloosterman_normalized(n, q))
        worst_comp = max(worst_comp, kl / divisor_count(q))
        comp_violations += kl > divisor_count(q) * (1 + 1e-12)
    violations = prime_violations + comp_violations
    return CriterionResult(
        2, "Weil/Deligne bound", violations == 0,
        f"{len(primes)} primes < {p_cap}: max |S|/sqrt(p) = {worst_prime:.4f} (<= 2); "
        f"{q_count} squarefree q: max |Kl|/tau(q) = {worst_comp:.4f}; violations {violations}",
        details={"prime_violations": prime_violations, "composite_violations": int(comp_violations)},
    )


# -- 3: Fourier transform mod p --------------------------------------------------


def fourier_modp(ctx: Context) -> CriterionResult:
    worst_inv = worst_planch = worst_direct = 0.0
    primes = [int(p) for p in primes_up_to(97)]
    for p in primes:
        rng = expsums._rng(ctx.seed, 3, p)
        for _ in range(10):
            f = rng.standard_normal(p) + 1j * rng.standard_normal(p)
            F = expsums.fourier_transform_modp(f, p)
            FF = expsums.fourier_transform_modp(F, p)
            reflected = f[(-np.arange(p)) % p]
            scale = np.linalg.norm(f)
            worst_inv = max(worst_inv, float(np.max(np.abs(FF - reflected)) / scale))
            worst_planch = max(worst_planch, abs(np.linalg.norm(F) ** 2 - scale**2) / scale**2)
            worst_direct = max(worst_direct, float(np.max(np.abs(F - expsums.fourier_transform_direct(f, p))) / scale))
    worst = max(worst_inv, worst_planch, worst_direct)
    return CriterionResult(
        3, "FT involution and Plancherel", worst <= 1e-9,
        f"{len(primes)} primes <= 97 x 10 functions: involution {worst_inv:.1e}, "
        f"Plancherel {worst_planch:.1e}, vs direct {worst_direct:.1e} (tol 1e-9)",
        details={"involution": worst_inv, "plancherel": worst_planch, "direct": worst_direct},
    )


# -- 4: correlation dichotomy ----------------------------------------------------


def correlation_dichotomy(ctx: Context) -> CriterionResult:
    top = 200 if ctx.quick else 500
    primes = [p for p in range(51, top) if is_prime(p) and p % 3 == 2]
    r = expsums.correlation_sweep(primes, 20, ctx.seed)
    d = r.details
    return CriterionResult(
        4, "correlation dichotomy", bool(r.passed),
        f"{len(primes)} primes in (50, {top}), p = 2 mod 3: max |rho| sqrt(p) = {r.value:.3f} (<= 10); "
        f"diagonal rho in [{d['diagonal_min']:.4f}, {d['diagonal_max']:.4f}] (need [0.3, 3])",
        details={"max_off": r.value, **{k: v for k, v in d.items() if k != "per_prime"}},
    )


# -- 5: Jutila kernel ----------------------------------------------------------


def jutila_exactness(ctx: Context) -> CriterionResult:
    configs = [
        (Q, mode, scale)
        for Q in ((60, 200) if ctx.quick else (60, 200, 1000))
        for mode in (circle.ALL_SQUAREFREE, circle.PAPER)
        for scale in (1.5, 1.25)
    ]
    configs = configs[:10]
    worst_int = 0.0
    for Q, mode, power in configs:
        ms = circle.build_moduli_set(Q, 1.0 if mode == circle.PAPER else 0.5, mode, delta=Q**-power)
        worst_int = max(worst_int, abs(circle.eval_I(ms).integral() - 1.0))
    ratios = {}
    for Q in ((200,) if ctx.quick else (200, 1000)):
        for mode in (circle.ALL_SQUAREFREE, circle.PAPER):
            ratios[(Q, mode)] = circle.variance(circle.build_moduli_set(Q, 0.5, mode)).ratio
    sf_ok = all(r <= 100 for (Q, mode), r in ratios.items() if mode == circle.ALL_SQUAREFREE)
    passed = worst_int <= 1e-12 and sf_ok
    shown = ", ".join(f"Q={Q} {mode}: {r:.3g}" for (Q, mode), r in ratios.items())
    return CriterionResult(
        5, "Jutila kernel exactness", passed,
        f"{len(configs)} configs: max |int I - 1| = {worst_int:.1e} (tol 1e-12); variance ratios {shown}",
        details={"max_integral_error": worst_int, "ratios": {f"{Q}-{m}": r for (Q, m), r in ratios.items()}},
    )


# -- 6: Parseval and FFT agreement ---------------------------------------------


def parseval_fft(ctx: Context) -> CriterionResult:
    scales = (2**10, 2**11) if ctx.quick else (2**12, 2**13)
    X_direct = 2**12 if ctx.quick else 2**14
    gl3 = ctx.stream(SYM2, 3 * X_direct)
    gl2 = ctx.stream(GL2, 3 * X_direct)
    worst_parseval = 0.0
    for X in scales:
        r = spectral.parseval_check(X, gl3, gl2)
        worst_parseval = max(worst_parseval, r.details["relative_difference"])
    spec = spectral.shifted_conv_all(X_direct, gl3, gl2)
    rng = expsums._rng(ctx.seed, 6)
    # shifts from the range 1 <= |h| <= X where the convolution is not negligible
    hs = rng.integers(1, X_direct + 1, size=50) * rng.choice([-1, 1], size=50)
    worst_fft = 0.0
    for h in hs:
        direct = spectral.shifted_conv_direct(int(h), X_direct, gl3, gl2)
        worst_fft = max(worst_fft, abs(spec.at(int(h)) - direct) / abs(direct))
    passed = worst_parseval <= 1e-6 and worst_fft <= 1e-9
    return CriterionResult(
        6, "Parseval and FFT shifts", passed,
        f"X in {list(scales)}: Parseval rel diff {worst_parseval:.1e} (tol 1e-6); "
        f"FFT vs direct on 50 shifts at X={X_direct}: {worst_fft:.1e} (tol 1e-9)",
        details={"parseval": worst_parseval, "fft_vs_direct": worst_fft},
    )


# -- 7: resonance sup bounds ---------------------------------------------------


def resonance_bounds(ctx: Context) -> CriterionResult:
    ladder = (10**3, 10**4) if ctx.quick else (10**3, 10**4, 10**5)
    gl3 = ctx.stream(SYM2, 3 * max(ladder))
    gl2 = ctx.stream(GL2, 3 * max(ladder))
    c1, c2 = [], []
    for X in ladder:
        r = spectral.wilton_miller(X, gl3, gl2)
        c1.append(r.value["gl3"])
        c2.append(r.value["gl2"])
    # growth: largest increase from a smaller scale to a larger one
    growth = max(c[j] / c[i] for c in (c1, c2) for i in range(len(c)) for j in range(i + 1, len(c)))
    passed = max(c1 + c2) <= 20 and growth <= 3
    return CriterionResult(
        7, "resonance sup bounds", passed,
        f"X in {list(ladder)}: |S1|/X^(3/4) = {', '.join(f'{c:.3f}' for c in c1)}; "
        f"|S2|/X^(1/2) = {', '.join(f'{c:.3f}' for c in c2)} (<= 20, growth {growth:.2f} <= 3)",
        details={"gl3": c1, "gl2": c2, "growth": growth},
    )


# -- 8: Voronoi ----------------------------------------------------------------


def voronoi_gl2(ctx: Context) -> CriterionResult:
    q_max, Ys = (5, (500,)) if ctx.quick else (10, (500, 1000))
    N = max(voronoi.default_truncation(q_max, min(Ys)), 2 * max(Ys) + 1)
    gl2 = ctx.stream(GL2, N)
    sweep = voronoi.voronoi_sweep(gl2, q_max, Ys)
    decay = voronoi.transform_decay_check(1000.0)
    yY = decay.details["yY"]
    at_1e3 = float(np.interp(3.0, np.log10(yY), decay.details["H_over_Y"]))
    passed = bool(sweep.passed and decay.passed)
    return CriterionResult(
        8, "Voronoi GL(2) holomorphic", passed,
        f"{sweep.details['cases']} cases q <= {q_max}, Y in {list(Ys)}: max rel err {sweep.value:.1e} (tol 1e-4); "
        f"transform decay A = {decay.value:.2f} (>= 3), |H|/Y near yY=1e3 ~ {at_1e3:.1e}",
        details={"max_rel_err": sweep.value, "decay_A": decay.value},
    )


# -- 9: exponent pipeline ------------------------------------------------------


def exponent_pipeline(ctx: Context) -> CriterionResult:
    r = optimizer.paper_pipeline()
    alt = optimizer.paper_pipeline(order="Delta-first")
    checks = {
        "D = Q^(2/3)": r.D == {"Q": Fraction(2, 3)},
        "Q = X^(6/11)": r.Q == {"X": Fraction(6, 11)},
        "exponent 21/22": r.exponent == Fraction(21, 22),
        "Q >> sqrt(X)": r.constraint_ok,
        "order independent": (alt.D, alt.Q, alt.exponent) == (r.D, r.Q, r.exponent),
    }
    bad = [k for k, ok in checks.items() if not ok]
    return CriterionResult(
        9, "exponent pipeline", not bad,
        f"D = Q^({r.D.get('Q')}), Q = X^({r.Q.get('X')}), exponent {r.exponent}, "
        f"Q >> sqrt(X): {r.constraint_ok}" + (f"; failed {bad}" if bad else ""),
        details={"pipeline": r.to_dict()},
    )


# -- 10: average cancellation ----------------------------------------------------


def average_cancellation(ctx: Context) -> CriterionResult:
    scales = (2**10, 2**11, 2**12) if ctx.quick else (2**12, 2**13, 2**14)
    gl3 = ctx.stream(SYM2, 3 * max(scales))
    gl2 = ctx.stream(GL2, 3 * max(scales))
    energy, smooth = [], []
    for X in scales:
        spec = spectral.shifted_conv_all(X, gl3, gl2)
        energy.append(spec.energy() / X**2)
        smooth.append(spectral.smoothed_average(X**0.6, X, spectral.V_BUMP, spec).ratio)
    bounded = max(energy) <= 10 * energy[0]
    passed = bounded and max(smooth) <= 0.1
    return CriterionResult(
        10, "average cancellation", passed,
        f"X in {list(scales)}: sum|D_h|^2/X^2 = {', '.join(f'{e:.4f}' for e in energy)} (<= 10x first); "
        f"smoothed/trivial at H = X^0.6: {', '.join(f'{s:.1e}' for s in smooth)} (<= 0.1)",
        details={"energy_over_X2": energy, "smoothed_ratio": smooth},
    )


CRITERIA: tuple[Callable[[Context], CriterionResult], ...] = (
    identity_suite,
    weil_deligne,
    fourier_modp,
    correlation_dichotomy,
    jutila_exactness,
    parseval_fft,
    resonance_bounds,
    voronoi_gl2,
    exponent_pipeline,
    average_cancellation,
)


def run_criterion(number: int, ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    result = CRITERIA[number - 1](ctx)
    result.elapsed = time.perf_counter() - t0
    return result


def run_all(ctx: Context, only=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for number in only or range(1, len(CRITERIA) + 1):
        r = run_criterion(number, ctx)
        if echo:
            echo(r.line)
        results.append(r)
    return results
