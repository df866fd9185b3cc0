import numpy as np
import pytest
from hypothesis import given, strategies as st

from switchbox.expressions import (DomainError, ParseError, eval_expr,
                                   max_state_index, parse_expr,
                                   references_time, to_source)


def ev(src, t=0.0, x=(0.0,)):
    return eval_expr(parse_expr(src), t, np.asarray(x, dtype=float))


def test_precedence_and_power():
    assert ev("1 + 2 * 3") == 7.0
    assert ev("(1 + 2) * 3") == 9.0
    assert ev("2 ^ 3 * 2") == 16.0
    assert ev("8 / 2 / 2") == 2.0
    assert ev("-2 ^ 2") == 4.0  # unary minus binds the atom


def test_variables_and_functions():
    assert ev("t + x1", t=0.5, x=(2.0,)) == 2.5
    assert ev("x2 - x1", x=(1.0, 4.0)) == 3.0
    assert ev("exp(0)") == 1.0
    assert ev("sqrt(4)") == 2.0
    assert ev("abs(0 - 3)") == 3.0
    assert ev("max(1, 2, 3)") == 3.0
    assert ev("min(1, 2 - 5)") == -3.0
    assert ev("log(exp(2))") == pytest.approx(2.0)


def test_vectorized_eval():
    e = parse_expr("0.1 + 0.05 * abs(x1)")
    x = np.array([[-2.0, 0.0, 2.0]])
    np.testing.assert_allclose(eval_expr(e, 0.0, x), [0.2, 0.1, 0.2])


def test_parse_error_location():
    with pytest.raises(ParseError) as err:
        parse_expr("1 + * 2")
    assert err.value.line == 1
    assert err.value.col == 5


def test_unknown_identifier_rejected():
    with pytest.raises(ParseError):
        parse_expr("y + 1")
    with pytest.raises(ParseError):
        parse_expr("foo(1)")


def test_max_needs_two_args():
    with pytest.raises(ParseError):
        parse_expr("max(1)")


def test_domain_errors_carry_subexpression():
    with pytest.raises(DomainError) as err:
        ev("log(0 - 1)")
    assert "log" in str(err.value)
    with pytest.raises(DomainError):
        ev("sqrt(0 - x1)", x=(4.0,))
    with pytest.raises(DomainError):
        ev("1 / x1", x=(0.0,))


def test_metadata_helpers():
    assert references_time(parse_expr("t * x1"))
    assert not references_time(parse_expr("x1 + 1"))
    assert max_state_index(parse_expr("x3 - x1")) == 3
    assert max_state_index(parse_expr("2.5")) == 0


def test_round_trip_fixed_cases():
    for src in ["1 + 2 * 3", "-(x1 + t)", "max(x1, 0 - x1, 1)",
                "exp(x1 ^ 2) / (1 + abs(t))", "0.1 + 0.05 * abs(x1)"]:
        e = parse_expr(src)
        assert parse_expr(to_source(e)) == e


@st.composite
def expr_strings(draw, depth=0):
    if depth >= 3 or draw(st.booleans()):
        return draw(st.sampled_from(
            ["t", "x1", "x2", "0", "1", "2.5", "0.125"]))
    kind = draw(st.sampled_from(["bin", "neg", "call"]))
    a = draw(expr_strings(depth=depth + 1))
    if kind == "neg":
        return f"-({a})"
    b = draw(expr_strings(depth=depth + 1))
    if kind == "bin":
        op = draw(st.sampled_from(["+", "-", "*"]))
        return f"({a}) {op} ({b})"
    fn = draw(st.sampled_from(["max", "min"]))
    return f"{fn}({a}, {b})"


@given(expr_strings())
def test_round_trip_property(src):
    e = parse_expr(src)
    assert parse_expr(to_source(e)) == e


def test_eval_is_pure():
    e = parse_expr("exp(x1) + t * x1")
    x = np.array([[0.25, -1.5]])
    a = eval_expr(e, 0.3, x)
    b = eval_expr(e, 0.3, x)
    np.testing.assert_array_equal(a, b)
