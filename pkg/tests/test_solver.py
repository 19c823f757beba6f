import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equilib import corpus, expr as ex
from equilib.cli import solve_texts
from equilib.reformulate import Column, MCPInstance
from equilib.solver import (SolverOptions, Status, fb_residual, fischer_burmeister, jacobian,
                            natural_residual, solve_mcp)
from oracles import central_difference, lcp_enumerate, python_value, random_expression


def linear_mcp(M, q, lower=None, upper=None, init=None):
    n = len(q)
    xs = [ex.Var(j, f"z{j}") for j in range(n)]
    rows = tuple(
        ex.make_sum([ex.Const(float(q[i]))] + [ex.mul(ex.Const(float(M[i, j])), xs[j])
                                                for j in range(n) if M[i, j] != 0])
        for i in range(n))
    lo = np.zeros(n) if lower is None else np.asarray(lower, float)
    up = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    z0 = np.zeros(n) if init is None else np.asarray(init, float)
    cols = tuple(Column(f"z{j}", None, f"z{j}", "x") for j in range(n))
    return MCPInstance(rows, lo, up, z0, cols)


def random_pd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.5 * np.eye(n) + rng.normal(scale=0.3, size=(n, n)) * 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_lcp_matches_enumeration(n, seed):
    rng = np.random.default_rng(seed)
    M = random_pd(rng, n)
    q = rng.normal(scale=2.0, size=n)
    sol = solve_mcp(linear_mcp(M, q))
    assert sol.solved
    np.testing.assert_allclose(sol.z, lcp_enumerate(M, q), atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_boxed_linear_mcp_solution_is_complementary(n, seed):
    rng = np.random.default_rng(seed)
    M = random_pd(rng, n)
    q = rng.normal(scale=3.0, size=n)
    lo = -rng.uniform(0, 1, n)
    up = rng.uniform(0, 1, n)
    lo[0] = -np.inf  # one column bounded only above
    mcp = linear_mcp(M, q, lo, up)
    sol = solve_mcp(mcp)
    assert sol.solved
    F = M @ sol.z + q
    for z, f, l, u in zip(sol.z, F, lo, up):
        if z > l + 1e-7 and z < u - 1e-7:
            assert abs(f) < 1e-7
        elif z <= l + 1e-7:
            assert f > -1e-7
        else:
            assert f < 1e-7


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False))
def test_fischer_burmeister_bounds_minimum(a, b):
    phi = abs(float(fischer_burmeister(a, b)))
    m = abs(min(a, b))
    assert (2 - math.sqrt(2)) * m - 1e-12 <= phi <= (2 + math.sqrt(2)) * m + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_fb_and_natural_residual_vanish_together(n, seed):
    rng = np.random.default_rng(seed)
    M = random_pd(rng, n)
    q = rng.normal(size=n)
    lo, up = -rng.uniform(0, 2, n), rng.uniform(0, 2, n)
    mcp = linear_mcp(M, q, lo, up)
    z = solve_mcp(mcp).z
    assert np.max(abs(natural_residual(mcp, z))) < 1e-8
    assert np.max(abs(fb_residual(mcp, z))) < 1e-7
    # a random interior point solves nothing: both residuals are nonzero somewhere
    w = rng.uniform(lo, up)
    nr, fb = natural_residual(mcp, w), fb_residual(mcp, w)
    assert np.all((abs(nr) < 1e-12) == (abs(fb) < 1e-12)) or np.max(abs(nr)) > 1e-6


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symbolic_jacobian_matches_central_differences(seed):
    rng = np.random.default_rng(seed)
    n = 3
    rows = tuple(random_expression(rng, n, depth=3) for _ in range(n))
    cols = tuple(Column(f"v{j}", None, f"v{j}", "x") for j in range(n))
    mcp = MCPInstance(rows, np.full(n, -np.inf), np.full(n, np.inf), np.zeros(n), cols)
    x = rng.uniform(-1.5, 1.5, n)
    J = jacobian(mcp, x).toarray()
    for i in range(n):
        fd = central_difference(lambda p: python_value(rows[i], p), x)
        np.testing.assert_allclose(J[i], fd, rtol=1e-5, atol=1e-5)


def test_fb_jacobian_matches_differences_away_from_kinks():
    rng = np.random.default_rng(7)
    M = random_pd(rng, 3)
    q = rng.normal(size=3)
    mcp = linear_mcp(M, q, [-1, 0, -np.inf], [1, np.inf, 2])
    z = np.array([0.3, 0.7, 0.4])
    H = jacobian(mcp, z, fb=True).toarray()
    for i in range(3):
        fd = central_difference(lambda p: fb_residual(mcp, p)[i], z)
        np.testing.assert_allclose(H[i], fd, atol=1e-6)


def test_iteration_limit_is_reported():
    inst = corpus.nep_oligopoly()
    r = solve_texts(inst.model, inst.empinfo, "max_iterations 1")
    assert r.solution.status is Status.ITERATION_LIMIT
    assert not r.solution.solved


def test_domain_failure_at_start():
    r = solve_texts("var o free; var x free init -1; equ d : o =E= x*log(x) - x;",
                    "equilibrium\nmin o x d")
    assert r.solution.status is Status.DOMAIN_FAILURE


def test_trial_point_domain_errors_are_backtracked():
    # log barrier: a full Newton step from x = 0.1 overshoots into x < 0
    r = solve_texts("var o free; var x free init 0.1; equ d : o =E= 10*x - log(x);",
                    "equilibrium\nmin o x d")
    assert r.solution.solved
    assert r.values.variables["x"] == pytest.approx(0.1)


def test_fixed_columns_stay_fixed():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    mcp = linear_mcp(M, np.array([-1.0, -1.0]), [0, 0.5], [np.inf, 0.5])
    sol = solve_mcp(mcp)
    assert sol.solved and sol.z[1] == 0.5


def test_sparse_path_for_large_instances():
    inst = corpus.tragedy_commons(520, visol=True)
    r = solve_texts(inst.model, inst.empinfo, inst.options)
    assert r.mcp.size > 500
    assert r.solution.solved
    assert r.values.variables["x(1)"] == pytest.approx(1 / 521, abs=1e-8)


@pytest.mark.parametrize("kw", [{"tolerance": 0}, {"max_iterations": 0}, {"contraction": 1.5}])
def test_options_are_validated(kw):
    with pytest.raises(ValueError):
        SolverOptions(**kw)


def test_starting_point_is_clamped():
    mcp = linear_mcp(np.eye(2), np.array([-1.0, 1.0]), init=[-5.0, -5.0])
    sol = solve_mcp(mcp)
    np.testing.assert_allclose(sol.z, [1.0, 0.0], atol=1e-10)
