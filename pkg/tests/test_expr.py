import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiabatica import expr as ex
from adiabatica.errors import ExprArityError, ExprEvalError, ExprNameError, ExprSyntaxError


def ev(src, x=0.0, R=(), t=0.0, m=2):
    return ex.evaluate(ex.parse(src, m), x, R, t)


def test_preset_potential_parses_and_evaluates():
    e = ex.parse("0.5*(x-R1)^2", 1)
    assert ex.identifiers(e) == {"x", "R1"}
    assert ex.evaluate(e, 2.0, [1.0]) == 0.5


def test_trailing_operator_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        ex.parse("x +")
    assert info.value.position == 3


def test_power_is_right_associative():
    assert ev("2^3^2") == 512.0


def test_unary_minus_binds_looser_than_power():
    assert ev("-x^2", x=3.0) == -9.0
    assert ev("(-x)^2", x=3.0) == 9.0
    assert ev("2^-1") == 0.5


def test_unicode_minus_is_accepted():
    assert ev("0.5*(x−R1)^2", x=2.0, R=[1.0, 0.0]) == 0.5


def test_precedence_and_functions():
    assert ev("1+2*3") == 7.0
    assert ev("(1+2)*3") == 9.0
    assert ev("exp(-x^2)", x=0.0) == 1.0
    assert ev("sqrt(4)+abs(-2)+tanh(0)+sin(0)+cos(0)") == 5.0
    assert ev("1e-3*t", t=2.0) == pytest.approx(2e-3)


def test_sqrt_of_negative_is_an_error():
    with pytest.raises(ExprEvalError):
        ev("sqrt(x)", x=-1.0)


def test_division_by_zero_is_an_error():
    with pytest.raises(ExprEvalError):
        ev("1/x", x=np.array([1.0, 0.0]))


def test_unknown_identifier():
    with pytest.raises(ExprNameError):
        ex.parse("x + R3", 2)
    with pytest.raises(ExprNameError):
        ex.parse("y")


def test_unknown_function_and_arity():
    with pytest.raises(ExprError_types()):
        ex.parse("log(x)")
    with pytest.raises(ExprArityError):
        ex.parse("sin(x, 2)")
    with pytest.raises(ExprArityError):
        ex.parse("sin()")


def ExprError_types():
    return (ExprNameError, ExprSyntaxError)


@pytest.mark.parametrize("src", ["", "   ", "(x", "x)", "2**3", "x y", "3..1", "*x"])
def test_malformed_sources(src):
    with pytest.raises(ExprSyntaxError):
        ex.parse(src)


def test_metric_variables_exclude_x():
    with pytest.raises(ExprNameError):
        ex.parse("1 + x", 1, variables=ex.variables_for(1, x=False))


def test_vectorised_evaluation_broadcasts_constants():
    x = np.linspace(-1, 1, 7)
    assert np.array_equal(ex.evaluate(ex.parse("3"), x), np.full(7, 3.0))
    assert np.allclose(ex.evaluate(ex.parse("x*R1", 1), x, [2.0]), 2 * x)


# --- property tests ----------------------------------------------------------

NAMES = ["x", "t", "R1", "R2"]
numbers = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False).map(ex.Num)
leaves = st.one_of(numbers, st.sampled_from(NAMES).map(ex.Var))


def _extend(children):
    return st.one_of(
        children.map(ex.Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: ex.BinOp(*a)),
        st.tuples(st.sampled_from(sorted(ex.FUNCTIONS)), children).map(lambda a: ex.Call(*a)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    assert ex.parse(ex.to_source(tree), 2) == tree


@settings(max_examples=200, deadline=None)
@given(trees)
def test_parse_print_parse_idempotent(tree):
    once = ex.parse(ex.to_source(tree), 2)
    assert ex.parse(ex.to_source(once), 2) == once


@settings(max_examples=100, deadline=None)
@given(trees, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 5))
def test_evaluation_is_deterministic(tree, x, r, t):
    try:
        a = ex.evaluate(tree, x, [r, -r], t)
    except ExprEvalError:
        with pytest.raises(ExprEvalError):
            ex.evaluate(tree, x, [r, -r], t)
        return
    assert math.isfinite(a)
    assert a == ex.evaluate(tree, x, [r, -r], t)
