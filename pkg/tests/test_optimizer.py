from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shiftconv import optimizer as op

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=12)


def test_balance_gives_two_thirds():
    assert op.balance(op.DSTAR_TERMS, "D", 0, 1) == {"Q": F(2, 3)}


def test_substitute_D_balances_first_two_terms():
    b = op.substitute(op.DSTAR_TERMS, "D", {"Q": F(2, 3)})
    f = b.forms
    assert f[0] == f[1] == {"Q": F(5, 6), "X": F(1, 2)}
    assert f[2] == {"Q": F(5, 3)}
    # before the outer square root the balanced pair is Q^{5/3} X
    squared = [{k: 2 * v for k, v in t.items()} for t in f]
    assert squared[0] == {"Q": F(5, 3), "X": 1}


def test_substitute_Q_gives_21_22():
    b = op.substitute(op.DSTAR_TERMS, "D", {"Q": F(2, 3)})
    full = op.substitute(b.extend(op.APPROX_TERM), "Delta", {"X": -1})
    at = op.substitute(full, "Q", {"X": F(6, 11)})
    exps = [t.get("X", 0) for t in at.forms]
    assert max(exps) == F(21, 22)
    assert exps.count(F(21, 22)) == 3


def test_identity_substitution():
    b = op.DSTAR_TERMS
    assert op.substitute(b, "Q", {"Q": 1}) == b


def test_unknown_variable():
    with pytest.raises(op.UnknownVariableError):
        op.substitute(op.DSTAR_TERMS, "Z", {"X": 1})
    with pytest.raises(op.UnknownVariableError):
        op.balance(op.DSTAR_TERMS, "Z", 0, 1)


def test_max_e_one_minus_e():
    b = op.MonomialBound.of({"E": 1}, {"E": -1, "X": 1})
    o = op.optimize_single(b, "E", "X")
    assert (o.argmin, o.value) == (F(1, 2), F(1, 2))
    assert isinstance(o.value, F)


def test_paper_lines():
    b = op.MonomialBound.of({"Q": F(5, 6), "X": F(1, 2)}, {"Q": F(5, 3)}, {"Q": -1, "X": F(3, 2)})
    o = op.optimize_single(b, "Q", "X")
    assert (o.argmin, o.value) == (F(6, 11), F(21, 22))
    assert o.active == (0, 2)


def test_unbounded():
    with pytest.raises(op.UnboundedError):
        op.optimize_single(op.MonomialBound.of({"Q": 1}, {"Q": 2, "X": 1}), "Q", "X")
    o = op.optimize_single(op.MonomialBound.of({"Q": 1}, {"Q": 2, "X": 1}), "Q", "X", lower=0)
    assert (o.argmin, o.value) == (0, 1)


def test_needs_two_variables_only():
    with pytest.raises(ValueError):
        op.optimize_single(op.DSTAR_TERMS, "Q", "X")


def test_paper_pipeline():
    r = op.paper_pipeline()
    assert r.D == {"Q": F(2, 3)}
    assert r.Q == {"X": F(6, 11)}
    assert r.exponent == F(21, 22)
    assert r.constraint_ok and F(6, 11) > F(1, 2)
    assert any("6/11" in line for line in r.trace)
    assert r.to_dict()["exponent"] == "21/22"


def test_pipeline_confluence():
    a, b = op.paper_pipeline(order="D-first"), op.paper_pipeline(order="Delta-first")
    assert (a.D, a.Q, a.exponent) == (b.D, b.Q, b.exponent)
    assert a.final_terms == b.final_terms


def test_pipeline_other_delta():
    # a wider interval shrinks the approximation term, pushing Q below sqrt(X)
    r = op.paper_pipeline(delta={"X": F(-1, 2)})
    assert (r.Q, r.exponent) == ({"X": F(9, 22)}, F(37, 44))
    assert not r.constraint_ok


@given(st.lists(st.tuples(fractions, fractions), min_size=2, max_size=6))
def test_optimum_is_global_on_grid(lines):
    slopes = [s for s, _ in lines]
    if not any(slopes):
        return
    b = op.MonomialBound.of(*[{"E": s, "X": c} for s, c in lines])
    try:
        o = op.optimize_single(b, "E", "X", lower=-10, upper=10)
    except op.UnboundedError:
        return
    top = lambda v: max(s * v + c for s, c in lines)  # noqa: E731
    assert o.value == top(o.argmin)
    grid = [F(k, 7) for k in range(-70, 71)]
    assert all(o.value <= top(v) for v in grid)
    assert -10 <= o.argmin <= 10 or len(set(slopes)) == 1


nonzero = fractions.filter(bool)


@given(nonzero, nonzero, fractions)
def test_substitution_composes(a, b, c):
    t = op.MonomialBound.of({"A": 1, "B": a}, {"B": b})
    once = op.substitute(op.substitute(t, "A", {"B": c}), "B", {"X": 1})
    twice = op.substitute(op.substitute(t, "B", {"X": 1}), "A", {"X": c})
    assert once.forms == twice.forms
