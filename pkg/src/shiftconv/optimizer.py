"""Exponent bookkeeping for monomial bounds, in exact rational arithmetic.

A bound ``sum_i prod_v v^{e_iv}`` is stored as its list of exponent vectors.
Substituting ``v -> prod_w w^{c_w}`` is linear in the exponents, and the
min-max over one exponent is solved at pairwise crossings of the affine
functions it produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping

Form = dict[str, Fraction]


class UnknownVariableError(KeyError):
    pass


class UnboundedError(ValueError):
    pass


def as_form(mapping: Mapping[str, object]) -> Form:
    """Normalize a mapping to ``{name: Fraction}`` with zero entries dropped."""
    out: Form = {}
    for k, v in mapping.items():
        f = Fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator()
        if f:
            out[k] = f
    return out


def show_form(form: Mapping[str, Fraction], order: tuple[str, ...] = ()) -> str:
    if not form:
        return "1"
    keys = [k for k in order if k in form] + sorted(k for k in form if k not in order)
    return " ".join(k if form[k] == 1 else f"{k}^({form[k]})" for k in keys)


@dataclass(frozen=True)
class MonomialBound:
    terms: tuple[tuple[tuple[str, Fraction], ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a bound needs at least one term")

    @classmethod
    def of(cls, *terms: Mapping[str, object], labels=None, power=1) -> MonomialBound:
        """Build from exponent mappings; ``power`` raises the whole sum to that power."""
        p = Fraction(power)
        forms = [as_form({k: Fraction(v) * p for k, v in as_form(t).items()}) for t in terms]
        labels = tuple(labels) if labels else tuple(f"t{i}" for i in range(len(forms)))
        return cls(tuple(tuple(sorted(f.items())) for f in forms), labels)

    @property
    def forms(self) -> list[Form]:
        return [dict(t) for t in self.terms]

    @property
    def variables(self) -> set[str]:
        return {k for t in self.terms for k, _ in t}

    def extend(self, other: MonomialBound) -> MonomialBound:
        return MonomialBound(self.terms + other.terms, self.labels + other.labels)

    def exponent(self, i: int, var: str) -> Fraction:
        return dict(self.terms[i]).get(var, Fraction(0))

    def __str__(self):
        return " + ".join(show_form(f, ("D", "Q", "X")) for f in self.forms)


def substitute(b: MonomialBound, var: str, expr: Mapping[str, object]) -> MonomialBound:
    """Replace ``var`` by the monomial ``expr`` in every term."""
    if var not in b.variables:
        raise UnknownVariableError(var)
    expr = as_form(expr)
    new = []
    for form in b.forms:
        c = form.pop(var, Fraction(0))
        for w, e in expr.items():
            form[w] = form.get(w, Fraction(0)) + c * e
        new.append(as_form(form))
    return MonomialBound(tuple(tuple(sorted(f.items())) for f in new), b.labels)


def balance(b: MonomialBound, var: str, i: int, j: int) -> Form:
    """The monomial for ``var`` that makes terms ``i`` and ``j`` equal."""
    if var not in b.variables:
        raise UnknownVariableError(var)
    fi, fj = b.forms[i], b.forms[j]
    ci, cj = fi.pop(var, Fraction(0)), fj.pop(var, Fraction(0))
    if ci == cj:
        raise ValueError(f"terms {i} and {j} have the same {var}-exponent; no balance point")
    keys = set(fi) | set(fj)
    return as_form({k: (fj.get(k, 0) - fi.get(k, 0)) / (ci - cj) for k in keys})


@dataclass
class Optimum:
    var: str
    objective: str
    argmin: Fraction
    value: Fraction
    active: tuple[int, ...]
    lines: list[tuple[Fraction, Fraction]]
    crossings: list[tuple[int, int, Fraction, Fraction]] = field(default_factory=list)

    def trace(self, labels=()) -> list[str]:
        name = lambda i: labels[i] if i < len(labels) else f"t{i}"  # noqa: E731
        v = self.var.lower()
        rows = [f"minimize over {v} = log_{self.objective} {self.var}:"]
        for i, (s, c) in enumerate(self.lines):
            rows.append(f"  {name(i):<18} {_affine(s, c, v)}")
        for i, j, at, val in self.crossings:
            rows.append(f"  cross {name(i)} / {name(j)} at {v} = {at}, max = {val}")
        rows.append(f"  optimum {v} = {self.argmin}, exponent {self.value}")
        return rows


def _affine(slope: Fraction, const: Fraction, v: str) -> str:
    if slope == 0:
        return str(const)
    head = f"{slope}{v}" if slope not in (1, -1) else ("" if slope == 1 else "-") + v
    if const == 0:
        return head
    return f"{head} {'+' if const > 0 else '-'} {abs(const)}"


def optimize_single(b: MonomialBound, var: str, objective_var: str,
                    lower: object | None = None, upper: object | None = None) -> Optimum:
    """Choose ``var = objective_var^v`` minimizing the largest term exponent.

    Every term must involve only ``var`` and ``objective_var``. The minimizer
    of a max of affine functions lies at a crossing or at a bound of the
    admissible interval, so those candidates are scanned exactly.
    """
    extra = b.variables - {var, objective_var}
    if extra:
        raise ValueError(f"terms still involve {sorted(extra)}; substitute them first")
    if var not in b.variables:
        raise UnknownVariableError(var)
    lines = [(b.exponent(i, var), b.exponent(i, objective_var)) for i in range(len(b.terms))]
    lo = None if lower is None else Fraction(lower)
    hi = None if upper is None else Fraction(upper)
    slopes = [s for s, _ in lines]
    if (lo is None and min(slopes) >= 0 and max(slopes) > 0) or (hi is None and max(slopes) <= 0 and min(slopes) < 0):
        raise UnboundedError(f"max of term exponents has no minimum over {var}")

    def top(v: Fraction) -> Fraction:
        return max(s * v + c for s, c in lines)

    candidates: list[Fraction] = [x for x in (lo, hi) if x is not None]
    crossings = []
    for i, j in combinations(range(len(lines)), 2):
        (si, ci), (sj, cj) = lines[i], lines[j]
        if si == sj:
            continue
        v = (cj - ci) / (si - sj)
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            continue
        candidates.append(v)
        crossings.append((i, j, v, top(v)))
    if not candidates:
        # every slope is equal (and zero): any point is optimal
        candidates.append(lo if lo is not None else Fraction(0))
    best = min(candidates, key=lambda v: (top(v), v))
    value = top(best)
    active = tuple(i for i, (s, c) in enumerate(lines) if s * best + c == value)
    return Optimum(var, objective_var, best, value, active, lines, crossings)


# Case bounds entering the final estimate, already under the outer square root:
# (D Q X + D^{-1/2} Q^2 X + D^{1/2} Q^3)^{1/2}.
DSTAR_TERMS = MonomialBound.of(
    {"D": 1, "Q": 1, "X": 1},
    {"D": Fraction(-1, 2), "Q": 2, "X": 1},
    {"D": Fraction(1, 2), "Q": 3},
    labels=("DQX", "D^-1/2Q^2X", "D^1/2Q^3"),
    power=Fraction(1, 2),
)
# circle-method approximation error X / (sqrt(Delta) Q)
APPROX_TERM = MonomialBound.of({"X": 1, "Delta": Fraction(-1, 2), "Q": -1}, labels=("X/(sqrt(Delta)Q)",))


@dataclass
class PipelineResult:
    D: Form
    Q: Form
    exponent: Fraction
    q_lower: Fraction
    constraint_ok: bool
    trace: list[str]
    after_D: MonomialBound
    final_terms: MonomialBound

    def to_dict(self) -> dict:
        return {
            "D": {k: str(v) for k, v in self.D.items()},
            "Q": {k: str(v) for k, v in self.Q.items()},
            "exponent": str(self.exponent),
            "q_lower": str(self.q_lower),
            "constraint_ok": self.constraint_ok,
            "trace": self.trace,
        }


def paper_pipeline(delta: Mapping[str, object] | None = None, q_lower=Fraction(1, 2),
                   order: str = "D-first") -> PipelineResult:
    """Two-step optimization: balance the first two terms in ``D``, then optimize ``Q`` against ``X``.

    ``delta`` is the monomial chosen for ``Delta`` (default ``X^{-1}``);
    ``q_lower`` is the requirement ``Q >> X^{q_lower}``. ``order`` controls
    whether ``Delta`` is substituted before or after ``D``; both must agree.
    """
    delta = as_form(delta or {"X": -1})
    trace = [f"terms: {DSTAR_TERMS}  (under outer square root already)"]
    D = balance(DSTAR_TERMS, "D", 0, 1)
    trace.append(f"balance {DSTAR_TERMS.labels[0]} = {DSTAR_TERMS.labels[1]}: D = {show_form(D)}")
    after_D = substitute(DSTAR_TERMS, "D", D)
    trace.append(f"after D: {after_D}")
    approx = APPROX_TERM
    if order == "D-first":
        full = substitute(after_D.extend(approx), "Delta", delta)
    elif order == "Delta-first":
        approx = substitute(approx, "Delta", delta)
        full = after_D.extend(approx)
    else:
        raise ValueError(f"unknown order {order!r}")
    trace.append(f"with Delta = {show_form(delta)}: {full}")
    opt = optimize_single(full, "Q", "X")
    trace.extend(opt.trace(full.labels))
    Q = {"X": opt.argmin}
    ok = opt.argmin >= Fraction(q_lower)
    trace.append(f"check Q >> X^{q_lower}: {'yes' if ok else 'no'} ({opt.argmin} vs {q_lower})")
    return PipelineResult(D, Q, opt.value, Fraction(q_lower), ok, trace, after_D, full)
