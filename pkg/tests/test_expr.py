"""Expression language: parsing, printing round-trips, evaluation agreement."""

import math

import numpy as np
import pytest

from bitension import expr, jets
from bitension.expr import (
    Binary, Const, ExprEvalError, ExprSyntaxError, Param, Pi, Power, Unary,
    Var, eval_jet, eval_real, parse, to_string,
)


def test_parse_basic_component():
    t = parse("cos(u1)/sqrt(2)")
    assert t == Binary("/", Unary("cos", Var(0)), Unary("sqrt", Const(2.0)))


def test_unbalanced_paren_column():
    with pytest.raises(ExprSyntaxError) as err:
        parse("sin(u1")
    assert err.value.column == 7
    assert err.value.line == 1


def test_unknown_function():
    with pytest.raises(ExprSyntaxError) as err:
        parse("foo(u1)")
    assert "unknown function 'foo'" in str(err.value)


def test_unknown_parameter_at_eval():
    t = parse("a * u1")
    with pytest.raises(ExprEvalError):
        eval_real(t, [1.0], {})
    with pytest.raises(ExprEvalError):
        eval_jet(t, jets.variables([1.0]), {})


def test_unexpected_character():
    with pytest.raises(ExprSyntaxError):
        parse("u1 % 2")


def test_trailing_tokens():
    with pytest.raises(ExprSyntaxError):
        parse("u1 + 1 )")


def test_integer_exponent_required():
    with pytest.raises(ExprSyntaxError):
        parse("u1^u2")
    with pytest.raises(ExprSyntaxError):
        parse("u1^1.5")


def test_precedence():
    assert parse("-u1^2") == Unary("neg", Power(Var(0), 2))
    assert parse("2*u1+1") == Binary("+", Binary("*", Const(2.0), Var(0)), Const(1.0))
    assert parse("u1^-2") == Power(Var(0), -2)
    assert parse("-u1*u2") == Binary("*", Unary("neg", Var(0)), Var(1))


@pytest.mark.parametrize("source", [
    "cos(u1)/sqrt(2)",
    "-u1^2 + 3.5*pi - (u2 - 1)/2",
    "a * sin(2*u1 + phase) - b/(1 + u2^2)",
    "sqrt(1 + sin(u1)^2)",
    "--u1",
    "1e-3 * u1 + 2.5e2",
])
def test_round_trip_parsed(source):
    t = parse(source)
    assert parse(to_string(t)) == t


def test_round_trip_right_nested_trees():
    # manually built trees that a naive printer would re-associate
    t = Binary("+", Var(0), Binary("+", Var(1), Const(1.0)))
    assert parse(to_string(t)) == t
    t = Binary("-", Var(0), Binary("-", Var(1), Const(1.0)))
    assert parse(to_string(t)) == t
    t = Binary("/", Const(1.0), Binary("*", Var(0), Var(1)))
    assert parse(to_string(t)) == t
    t = Unary("neg", Binary("*", Var(0), Var(1)))
    assert parse(to_string(t)) == t
    t = Power(Unary("neg", Var(0)), 3)
    assert parse(to_string(t)) == t


def _random_tree(rng, depth, num_vars):
    if depth == 0:
        k = int(rng.integers(0, 4))
        if k == 0:
            return Const(float(np.round(rng.uniform(-3, 3), 4)))
        if k == 1:
            return Pi()
        if k == 2:
            return Param("alpha")
        return Var(int(rng.integers(0, num_vars)))
    k = int(rng.integers(0, 8))
    child = _random_tree(rng, depth - 1, num_vars)
    if k < 4:
        other = _random_tree(rng, depth - 1, num_vars)
        return Binary("+-*/"[k], child, other)
    if k == 4:
        return Unary("neg", child)
    if k == 5:
        return Power(child, int(rng.integers(-3, 4)))
    return Unary(("sin", "cos")[k - 6], child)


@pytest.mark.parametrize("seed", range(30))
def test_round_trip_random_trees(seed):
    rng = np.random.default_rng(seed)
    t = _random_tree(rng, int(rng.integers(1, 5)), 3)
    assert parse(to_string(t)) == t


@pytest.mark.parametrize("seed", range(10))
def test_jet_real_agreement(seed):
    rng = np.random.default_rng(1000 + seed)
    # safe compositions only: trig, polynomials, guarded sqrt
    source = "sin(2*u1 + 0.3) * cos(u2)^2 + sqrt(2.5 + sin(u1*u2)) - u1/(2.5 + cos(u2))"
    t = parse(source)
    point = rng.uniform(-1.2, 1.2, 2)
    j = eval_jet(t, jets.variables(point), {})
    r = eval_real(t, list(point), {})
    assert abs(j.value - r) <= 1e-13 * max(1.0, abs(r))


def test_eval_real_mpmath():
    import mpmath
    t = parse("sqrt(2 + sin(u1)) / (1 + u1^2)")
    x = mpmath.mpf("0.3125")
    with mpmath.workdps(40):
        v = eval_real(t, [x], {}, lib=mpmath)
    assert abs(float(v) - eval_real(t, [0.3125], {})) < 1e-15


def test_sqrt_negative_real_eval():
    t = parse("sqrt(u1 - 10)")
    with pytest.raises(ExprEvalError):
        eval_real(t, [0.5], {})


def test_division_by_zero():
    t = parse("1/(u1 - u1)")
    with pytest.raises(ExprEvalError):
        eval_real(t, [0.5], {})


def test_pi_value():
    assert eval_real(parse("pi"), [], {}) == math.pi


def test_free_params_and_vars():
    t = parse("a * sin(u3) + b - pi")
    assert expr.free_params(t) == {"a", "b"}
    assert expr.max_var_index(t) == 2
