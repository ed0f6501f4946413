import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.errors import NumericalFailure, UsageError
from fracheat.expr import (BinOp, Call, ExprSyntaxError, Neg, Num, Var, evaluate, free_names,
                           parse, to_source)


@pytest.mark.parametrize("text, env, expect", [
    ("1+t^2", {"t": 2.0}, 5.0),
    ("2^3^2", {}, 512.0),
    ("-x^2", {"x": 3.0}, -9.0),
    ("(-x)^2", {"x": 3.0}, 9.0),
    ("8/2/2", {}, 2.0),
    ("10-4-3", {}, 3.0),
    ("exp(-lambda1*t)", {"t": 1.0, "lambda1": 2.0}, math.exp(-2.0)),
    ("sqrt(abs(-16))+cos(0)+sin(pi/2)", {}, 6.0),
    ("2^-1", {}, 0.5),
    ("1.5e2 * .5", {}, 75.0),
    ("x − 1", {"x": 3.0}, 2.0),
])
def test_evaluate(text, env, expect):
    assert evaluate(parse(text), env) == pytest.approx(expect, rel=1e-15)


def test_array_broadcast():
    x = np.linspace(0, 1, 5)
    t = np.array([0.0, 1.0])
    v = evaluate(parse("x*t"), {"x": x[None, :], "t": t[:, None]})
    assert v.shape == (2, 5)
    np.testing.assert_allclose(v[1], x)


def test_tree_shapes():
    assert parse("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert free_names(parse("sin(x)*t+pi")) == {"x", "t", "pi"}


@pytest.mark.parametrize("text, offset", [
    ("2*(x", 4),
    ("1 + ", 4),
    ("x $ 2", 2),
    ("foo(x)", 0),
    ("y+1", 0),
    ("sin x", 4),
    ("2 3", 2),
    (")", 0),
])
def test_syntax_errors_carry_offset(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert isinstance(info.value, UsageError)
    assert f"offset {offset}" in str(info.value)


@pytest.mark.parametrize("text, env", [
    ("1/x", {"x": 0.0}),
    ("1/x", {"x": np.array([1.0, 0.0])}),
    ("sqrt(x)", {"x": -1.0}),
    ("x^0.5", {"x": -2.0}),
    ("0^-1", {}),
    ("exp(x)", {"x": 1000.0}),
    ("10^400", {}),
])
def test_numerical_failures(text, env):
    with pytest.raises(NumericalFailure):
        evaluate(parse(text), env)


def test_unbound_variable():
    with pytest.raises(UsageError):
        evaluate(parse("x+1"), {})


def test_negative_integer_power_ok():
    assert evaluate(parse("x^3"), {"x": -2.0}) == -8.0


@pytest.mark.parametrize("text", ["1+t^2", "-2.5*x", "-0", "1e300*x", "3.0e-5", "2^-3",
                                  "(a)".replace("a", "x-1")*1, "-(x*t)", "x-(t-1)", "(x^2)^3"])
def test_print_parse_fixed_point(text):
    e = parse(text)
    assert parse(to_source(e)) == e


def test_minimal_parentheses():
    assert to_source(parse("((x))+((t))")) == "x+t"
    assert to_source(parse("(x^2)^3")) == "(x^2)^3"
    assert to_source(parse("x^(2^3)")) == "x^2^3"
    assert to_source(parse("2.0*x")) == "2*x"


numbers = st.floats(min_value=0.0, max_value=1e300, allow_nan=False, allow_infinity=False).map(Num)
leaves = numbers | st.sampled_from(["x", "t", "pi", "lambda1"]).map(Var)


def _grow(children):
    return (
        children.map(Neg)
        | st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a))
        | st.tuples(st.sampled_from(["sin", "cos", "exp", "sqrt", "abs"]), children).map(lambda a: Call(*a))
    )


trees = st.recursive(leaves, _grow, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_roundtrip_property(tree):
    assert parse(to_source(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_literals_exact(v):
    e = Num(abs(v))
    assert parse(to_source(e)).value == abs(v)
