import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equilib import expr as ex
from equilib.errors import DomainError
from oracles import central_difference, python_value, random_expression

NVARS = 3
seeds = st.integers(0, 2**32 - 1)
points = st.lists(st.floats(-2, 2, allow_nan=False), min_size=NVARS, max_size=NVARS)


@settings(max_examples=150, deadline=None)
@given(seeds, points)
def test_program_matches_plain_recursion(seed, x):
    e = random_expression(np.random.default_rng(seed), NVARS)
    got = ex.evaluate(e, x)
    want = python_value(e, x)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(seeds, points)
def test_derivatives_match_central_differences(seed, x):
    e = random_expression(np.random.default_rng(seed), NVARS)
    fd = central_difference(lambda p: python_value(e, p), x)
    for k in range(NVARS):
        d = ex.evaluate(ex.differentiate(e, k), x)
        assert d == pytest.approx(fd[k], rel=1e-5, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_derivative_support_is_within_support(seed):
    e = random_expression(np.random.default_rng(seed), NVARS)
    for k in range(NVARS):
        d = ex.differentiate(e, k)
        assert d.free_variables() <= e.free_variables()
        if k not in e.free_variables():
            assert d == ex.ZERO


@settings(max_examples=100, deadline=None)
@given(seeds, points)
def test_substitute_is_evaluation_composition(seed, x):
    rng = np.random.default_rng(seed)
    e = random_expression(rng, NVARS)
    g = random_expression(rng, NVARS, depth=2)
    s = ex.substitute(e, {0: g})
    y = list(x)
    y[0] = python_value(g, x)
    assert ex.evaluate(s, x) == pytest.approx(python_value(e, y), rel=1e-10, abs=1e-10)


def test_smart_constructors_fold_identities():
    x = ex.Var(0, "x")
    assert ex.add(x, ex.ZERO) is x
    assert ex.mul(ex.ONE, x) is x
    assert ex.mul(x, ex.ZERO) == ex.ZERO
    assert ex.power(x, ex.ONE) is x
    assert ex.neg(ex.neg(x)) is x
    assert ex.add(ex.Const(2.0), ex.Const(3.0)) == ex.Const(5.0)


def test_folding_never_hides_domain_errors():
    e = ex.log(ex.Const(-1.0))
    assert isinstance(e, ex.Log)
    with pytest.raises(DomainError):
        ex.evaluate(e, ())


@pytest.mark.parametrize("e,point", [
    (ex.sqrt(ex.Var(0)), [-1.0]),
    (ex.div(ex.ONE, ex.Var(0)), [0.0]),
    (ex.log(ex.Var(0)), [0.0]),
    (ex.power(ex.Var(0), ex.Const(0.5)), [-4.0]),
])
def test_domain_errors(e, point):
    with pytest.raises(DomainError):
        ex.evaluate(e, point)


def test_program_shares_subtrees():
    x = ex.Var(0)
    common = ex.exp(ex.sqr(x))
    p = ex.Program([ex.add(common, ex.ONE), ex.mul(common, ex.Const(2.0))])
    v = p([0.5])
    assert v[0] == pytest.approx(math.exp(0.25) + 1)
    assert v[1] == pytest.approx(2 * math.exp(0.25))


def test_sum_derivative_and_string():
    xs = [ex.Var(k, f"x{k}") for k in range(4)]
    s = ex.make_sum(ex.mul(ex.Const(k + 1.0), xs[k]) for k in range(4))
    assert ex.evaluate(ex.differentiate(s, 2), [0] * 4) == 3.0
    assert "x3" in str(s)
