import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoaudit import expr as ex
from geoaudit.expr import ExprError, ParseError, parse_expr, substitute, to_text

from conftest import random_expr


def test_parse_sphere_levelset():
    e = parse_expr("x^2+y^2+z^2-1", 3)
    x, y, z = ex.variables(3)
    ref = x**2 + y**2 + z**2 - 1.0
    assert to_text(e) == to_text(ref)
    assert ex.evaluate(e, np.array([0.0, 0.6, 0.8])) == pytest.approx(0.0, abs=1e-15)


def test_parse_cylinder_distance():
    e = parse_expr("sqrt(x^2+y^2)-2", 3)
    assert isinstance(e, ex.Binary) and e.op == "-"
    assert isinstance(e.left, ex.Unary) and e.left.op == "sqrt"
    assert ex.evaluate(e, np.array([3.0, 4.0, 7.0])) == pytest.approx(3.0)


def test_syntax_error_offset():
    with pytest.raises(ParseError) as info:
        parse_expr("x+*y", 3)
    assert info.value.pos == 2
    assert "offset 2" in str(info.value)


@pytest.mark.parametrize(
    "text, message",
    [("q+1", "unknown"), ("z", "dimension"), ("x3", "dimension"), ("(x", None), ("x^1.5", None), ("", None)],
)
def test_parse_errors(text, message):
    with pytest.raises(ExprError, match=message):
        parse_expr(text, 2)


def test_precedence():
    point = np.array([2.0, 3.0])
    assert ex.evaluate(parse_expr("-x^2", 2), point) == -4.0
    assert ex.evaluate(parse_expr("x-y-1", 2), point) == -2.0
    assert ex.evaluate(parse_expr("x/y*3", 2), point) == pytest.approx(2.0)
    assert ex.evaluate(parse_expr("2*x^-1", 2), point) == 1.0
    assert ex.evaluate(parse_expr("1+x*y^2", 2), point) == 19.0
    assert ex.evaluate(parse_expr("x1 + x2", 2), point) == 5.0
    assert ex.evaluate(parse_expr("pi", 1), np.zeros(1)) == math.pi
    assert ex.evaluate(parse_expr("1.5e-1*x", 1), np.ones(1)) == 0.15


def test_substitute_examples():
    x, y = ex.variables(2)
    assert to_text(substitute(x**2, [y], 2)) == to_text(y**2)
    (u,) = ex.variables(1)
    s = substitute(x + y, [ex.cos(u), ex.sin(u)], 1)
    assert to_text(s) == to_text(ex.cos(u) + ex.sin(u))
    assert ex.evaluate(s, np.zeros(1)) == ex.evaluate(x + y, np.array([1.0, 0.0]))


def test_substitute_arity():
    x, y = ex.variables(2)
    with pytest.raises(ExprError, match="arity"):
        substitute(x + y, [x], 2)
    with pytest.raises(ExprError):
        substitute(x, [ex.Var(3)], 2)


def test_evaluate_domain_errors():
    x = ex.Var(0)
    for e in (ex.sqrt(x - 2), ex.log(x), 1.0 / x, x**-1):
        with pytest.raises(ExprError):
            ex.evaluate(e, np.array([0.0]))


def test_complex_expr_carries_parts():
    c = ex.ComplexExpr(ex.cos(ex.Var(0)), ex.sin(ex.Var(0)))
    assert isinstance(c.re, ex.Expr) and isinstance(c.im, ex.Expr)
    r = ex.ComplexExpr.real(ex.Var(0))
    assert ex.evaluate(r.im, np.array([1.0])) == 0.0


def test_round_trip_random_points():
    rng = np.random.default_rng(11)
    for _ in range(20):
        e = random_expr(rng, 3, 3)
        back = parse_expr(to_text(e), 3)
        pts = rng.uniform(-1, 1, size=(100, 3))
        a, b = ex.evaluate(e, pts), ex.evaluate(back, pts)
        assert np.all(np.abs(a - b) <= 1e-14 * np.maximum(1.0, np.abs(a)))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), u=st.floats(-1, 1), v=st.floats(-1, 1))
def test_substitution_commutes_with_evaluation(seed, u, v):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, 3, 2)
    p, q = ex.variables(2)
    subs = [ex.cos(p), p * q, ex.sin(q) + 0.5]
    composite = substitute(e, subs, 2)
    inner = np.array([math.cos(u), u * v, math.sin(v) + 0.5])
    assert ex.evaluate(composite, np.array([u, v])) == pytest.approx(ex.evaluate(e, inner), rel=1e-14, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, 2, 3)
    pts = rng.uniform(-1, 1, size=(10, 2))
    assert np.allclose(ex.evaluate(parse_expr(to_text(e), 2), pts), ex.evaluate(e, pts), rtol=1e-14, atol=1e-14)
