import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equilib import expr as ex
from equilib.errors import DuplicateName, IndexOutOfRange, ParseError, UnknownSymbol
from equilib.model import (Kind, fix_variable, format_model, normalize, parse_expression,
                           parse_model)

SMALL = """
set I = 1..3;
param c(I) = { [1] 2, [3] 4 };
param t = 2*sum(i in I, c(i));
var x(I) >= 1 init 2;
var y in [0, t];
x.up(2) = 5;
equ e(i in I) : x(i)*c(i) =G= y - 1;
equ f : y^2 =E= 3;
"""


def test_expansion_and_bounds():
    m = parse_model(SMALL)
    assert m.var_names == ("x(1)", "x(2)", "x(3)", "y")
    assert m.eq_names == ("e(1)", "e(2)", "e(3)", "f")
    np.testing.assert_array_equal(m.lower, [1, 1, 1, 0])
    np.testing.assert_array_equal(m.upper, [np.inf, 5, np.inf, 12])
    np.testing.assert_array_equal(m.level, [2, 2, 2, 0])


def test_missing_parameter_entries_are_zero():
    m = parse_model(SMALL)
    body, kind = normalize(m.instance(m.eq_id("e", (2,))))
    assert kind is Kind.LE0
    assert body.free_variables() == {m.var_id("y", ())}


def test_greater_equal_rows_are_flipped():
    m = parse_model(SMALL)
    body, kind = normalize(m.instance(m.eq_id("e", (1,))))
    point = [3.0, 0, 0, 10.0]
    # y - 1 - 2*x(1): positive when the original row is violated
    assert ex.evaluate(body, point) == pytest.approx(10 - 1 - 6)


@pytest.mark.parametrize("text,value", [
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("2**-1", 0.5),
    ("1 - 2 - 3", -4.0),
    ("12/2/3", 2.0),
    ("sqr(3) + sqrt(16) + exp(0) + log(1)", 14.0),
])
def test_operator_precedence(text, value):
    assert ex.evaluate(parse_expression(text), ()) == pytest.approx(value)


def test_sum_over_domain():
    m = parse_model(SMALL)
    e = parse_expression("sum(i in I, c(i)*x(i))", m)
    assert ex.evaluate(e, [1, 1, 1, 0]) == pytest.approx(6.0)


def test_two_binder_sum():
    m = parse_model("set I = 1..2; set K = 1..3; var q(I, K); equ s : sum(i in I, k in K, q(i,k)) =E= 1;")
    body, _ = normalize(m.instance(0))
    assert len(body.free_variables()) == 6


def test_fix_variable_returns_new_model():
    m = parse_model(SMALL)
    f = fix_variable(m, "y", (), 3.0)
    assert f.lower[3] == f.upper[3] == 3.0
    assert m.lower[3] == 0.0


@pytest.mark.parametrize("src,err", [
    ("var x; var x;", DuplicateName),
    ("set I = 1..2; var x(I); equ e : x(3) =E= 0;", IndexOutOfRange),
    ("var x; equ e : z =E= 0;", UnknownSymbol),
    ("set I = 1..2; var x(I); equ e(i in I) : sum(i in I, x(i)) =E= 0;", DuplicateName),
    ("var x; equ e : x =E= ;", ParseError),
    ("var x; param p = x;", ParseError),
])
def test_parse_errors(src, err):
    with pytest.raises(err) as info:
        parse_model(src)
    assert info.value.line == 1


def test_error_positions_are_reported():
    with pytest.raises(UnknownSymbol) as info:
        parse_model("var x;\n\nequ e : x + zz =E= 0;")
    assert (info.value.line, info.value.column) == (3, 13)


def _same(a, b):
    assert a.var_names == b.var_names and a.eq_names == b.eq_names
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)
    np.testing.assert_array_equal(a.level, b.level)
    rng = np.random.default_rng(0)
    pt = rng.uniform(0.5, 2, size=a.num_variables)
    for k in range(a.num_equations):
        ba, ka = normalize(a.instance(k))
        bb, kb = normalize(b.instance(k))
        assert ka == kb
        assert ex.evaluate(ba, pt) == pytest.approx(ex.evaluate(bb, pt))


def test_format_round_trip_small():
    m = parse_model(SMALL)
    _same(m, parse_model(format_model(m)))


def test_format_round_trip_corpus():
    from equilib import corpus
    for name in ("nep_oligopoly", "mopec_mathiesen", "river_basin_visol", "qvi_outrata"):
        m = parse_model(corpus.build(name).model)
        _same(m, parse_model(format_model(m)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6),
       st.floats(-3, 3, allow_nan=False))
def test_indexed_bounds_round_trip(n, los, shift):
    lines = [f"set I = 1..{n};", "var x(I) free;"]
    lines += [f"x.lo({i}) = {los[i - 1]!r};" for i in range(1, n + 1)]
    lines += [f"x.up({i}) = {los[i - 1] + abs(shift) + 1!r};" for i in range(1, n + 1)]
    lines.append("equ e(i in I) : x(i) =L= 1;")
    m = parse_model("\n".join(lines))
    np.testing.assert_array_equal(m.lower, los[:n])
    _same(m, parse_model(format_model(m)))


def test_comments_and_layout_are_ignored():
    a = parse_model("var x >= 0; # bound\nequ e :\n   x\n   =L= 1;")
    b = parse_model("var x >= 0; equ e : x =L= 1;")
    _same(a, b)
