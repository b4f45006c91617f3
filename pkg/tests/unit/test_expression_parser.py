import math

import pytest
from hypothesis import given, settings, strategies as st

from app.exceptions.expression_exceptions import ExpressionDomainError, ParseError
from app.utils.expression_parser import (
    FUNCTIONS,
    Binary,
    Number,
    Unary,
    Variable,
    eval_jet,
    evaluate,
    parse,
    to_text,
    variables,
)


def test_parse_function_call():
    assert parse("exp(2*x)") == Unary("exp", Binary("*", Number(2.0), Variable("x")))


def test_parse_respects_precedence():
    assert parse("x^2 + t") == Binary("+", Binary("^", Variable("x"), Number(2.0)), Variable("t"))


@pytest.mark.parametrize("text, expected", [
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("2^-1", 0.5),
    ("8 / 4 / 2", 1.0),
    ("1 - 2 - 3", -4.0),
    ("-(1 + 2) * 3", -9.0),
])
def test_operator_semantics(text, expected):
    assert evaluate(parse(text), (0.0, 0.0, 0.0)) == pytest.approx(expected)


def test_parse_error_points_at_offending_operator():
    with pytest.raises(ParseError) as exc:
        parse("x + * 2")
    assert exc.value.position == 4
    assert exc.value.error_code == "PARSE_ERROR"


@pytest.mark.parametrize("text, fragment", [
    ("", "empty expression"),
    ("z + 1", "unknown identifier"),
    ("exp(x", "unbalanced parentheses"),
    ("x)", "unbalanced parentheses"),
    ("x +", "empty operand"),
    ("x^t", "exponent must be constant"),
    ("x $ 2", "unexpected character"),
])
def test_malformed_input(text, fragment):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert fragment in exc.value.message


def test_variables_scan():
    assert variables(parse("exp(t) * x + 3")) == frozenset({"t", "x"})
    assert variables(parse("2^0.5")) == frozenset()


def test_eval_jet_polynomial():
    jet = eval_jet(parse("x^2"), (0.0, 1.0, 0.0), 2)
    assert jet.value == pytest.approx(1.0)
    assert jet.partial((0, 1, 0)) == pytest.approx(2.0)
    assert jet.partial((0, 2, 0)) == pytest.approx(2.0)
    assert jet.partial((1, 0, 0)) == 0.0
    assert jet.partial((0, 0, 2)) == 0.0


def test_eval_jet_exponential_at_zero():
    jet = eval_jet(parse("exp(x)"), (0.0, 0.0, 0.0), 4)
    for k in range(5):
        assert jet.partial((0, k, 0)) == pytest.approx(1.0)


def test_eval_jet_sum_of_exponentials():
    jet = eval_jet(parse("exp(x) + exp(2*x)"), (0.0, 0.0, 0.0), 6)
    for k in range(7):
        assert jet.partial((0, k, 0)) == pytest.approx(1 + 2 ** k, rel=1e-12)


def test_eval_jet_mixed_partials():
    # d^2/dt dy of t*y*exp(x) at (1, 0, 2) is exp(0) = 1
    jet = eval_jet(parse("t*y*exp(x)"), (1.0, 0.0, 2.0), 3)
    assert jet.partial((1, 0, 1)) == pytest.approx(1.0)
    assert jet.partial((1, 1, 1)) == pytest.approx(1.0)
    assert jet.partial((0, 1, 0)) == pytest.approx(2.0)


@pytest.mark.parametrize("text, subexpression", [
    ("log(x)", "log(x)"),
    ("sqrt(x - 1)", "sqrt(x - 1.0)"),
    ("1 / x", "1.0 / x"),
    ("abs(x)", "abs(x)"),
    ("x^0.5", "x^0.5"),
])
def test_domain_errors_name_subexpression(text, subexpression):
    with pytest.raises(ExpressionDomainError) as exc:
        eval_jet(parse("3 + " + text), (0.0, 0.0, 0.0), 2)
    assert exc.value.subexpression == subexpression
    assert exc.value.error_code == "DOMAIN_ERROR"


@pytest.mark.parametrize("text", [
    "sin(x) * exp(t) + x^3 * y",
    "log(1 + x^2) / (2 + cos(y))",
    "sqrt(2 + t) * x^2.5",
])
def test_jet_matches_central_differences(text):
    expr = parse(text)
    p = (0.3, 0.7, 0.2)
    h = 1e-4
    jet = eval_jet(expr, p, 3)
    for axis in range(3):
        plus = list(p)
        minus = list(p)
        plus[axis] += h
        minus[axis] -= h
        first = (evaluate(expr, plus) - evaluate(expr, minus)) / (2 * h)
        second = (evaluate(expr, plus) - 2 * evaluate(expr, p) + evaluate(expr, minus)) / h ** 2
        alpha1 = tuple(1 if i == axis else 0 for i in range(3))
        alpha2 = tuple(2 if i == axis else 0 for i in range(3))
        assert jet.partial(alpha1) == pytest.approx(first, rel=1e-5, abs=1e-6)
        assert jet.partial(alpha2) == pytest.approx(second, rel=1e-4, abs=1e-4)


numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Number)
leaves = st.one_of(numbers, st.sampled_from([Variable("t"), Variable("x"), Variable("y")]))


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(("neg",) + FUNCTIONS), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(Binary, st.just("^"), children, numbers),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


@given(expressions)
@settings(max_examples=300, deadline=None)
def test_pretty_print_round_trip(expr):
    assert parse(to_text(expr)) == expr


@given(st.lists(st.floats(min_value=-3, max_value=3), min_size=5, max_size=5))
@settings(max_examples=50, deadline=None)
def test_polynomial_jets_match_hand_derivatives(c):
    # p(x) = c0 + c1 x + c2 x^2 + c3 x^3 + c4 x^4
    text = " + ".join(f"({coef!r})*x^{k}" for k, coef in enumerate(c))
    x0 = 0.37
    jet = eval_jet(parse(text), (0.0, x0, 0.0), 4)
    for order in range(5):
        expected = sum(
            c[k] * math.factorial(k) / math.factorial(k - order) * x0 ** (k - order)
            for k in range(order, 5)
        )
        assert jet.partial((0, order, 0)) == pytest.approx(expected, rel=1e-12, abs=1e-11)


def test_parse_restricted_coordinates():
    assert parse("x^2", coordinates=("x",)) == Binary("^", Variable("x"), Number(2.0))
    with pytest.raises(ParseError) as exc:
        parse("t + x", coordinates=("x",))
    assert "unknown identifier" in exc.value.message
