import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equilib import corpus
from equilib.cli import load_problem
from equilib.errors import AmbiguousReplication
from equilib.reformulate import agent_kkt, assemble_mcp, block_density, extract_solution, model_stats
from equilib.solver import jacobian, solve_mcp
from oracles import switching_oligopoly_nnz


def problem(inst):
    return load_problem(inst.model, inst.empinfo, inst.options)


def solve(inst, strategy=None):
    p = problem(inst)
    mcp = assemble_mcp(p.report, p.model, strategy)
    sol = solve_mcp(mcp)
    assert sol.solved, sol.message
    return mcp, extract_solution(mcp, sol.z)


shapes = st.tuples(st.lists(st.integers(1, 4), min_size=2, max_size=4), st.integers(1, 3),
                   st.integers(0, 10**6))


@settings(max_examples=40, deadline=None)
@given(shapes)
def test_strategy_sizes(shape):
    sizes, m, seed = shape
    n, N = sum(sizes), len(sizes)
    for explicit in (True, False):
        p = problem(corpus.example3(tuple(sizes), m, explicit, seed))
        got = {s: assemble_mcp(p.report, p.model, s).size
               for s in ("Replication", "Switching", "Substitution")}
        assert got["Replication"] == n + 2 * m * N
        assert got["Switching"] == n + m * N + m
        assert got["Substitution"] == (n + m if explicit else n + n * m + m)


@settings(max_examples=10, deadline=None)
@given(shapes)
def test_strategies_agree_on_primal(shape):
    sizes, m, seed = shape
    n = sum(sizes)
    ref = None
    for explicit in (True, False):
        for s in ("Replication", "Switching", "Substitution"):
            _, v = solve(corpus.example3(tuple(sizes), m, explicit, seed), s)
            x = np.array([v.variables[f"x({j})"] for j in range(1, n + 1)])
            if ref is None:
                ref = x
            np.testing.assert_allclose(x, ref, atol=1e-6)


def test_kkt_sign_convention():
    # min x^2 - 2x  s.t.  x <= 0.5  ->  x = 0.5, mu = -(2x - 2) = -1
    inst = corpus.Instance("t", "var o free; var x free; equ d : o =E= sqr(x) - 2*x;"
                                "equ c : x =L= 0.5;",
                           "equilibrium\nmin o x d c", "", "")
    mcp, v = solve(inst)
    assert v.variables["x"] == pytest.approx(0.5)
    assert v.multipliers["mu[c@1]"] == pytest.approx(-1.0)
    assert mcp.upper[mcp.index("mu[c@1]")] == 0.0


def test_max_agent_is_negated():
    inst = corpus.Instance("t", "var o free; var x free; equ d : o =E= 4*x - sqr(x);",
                           "equilibrium\nmax o x d", "", "")
    _, v = solve(inst)
    assert v.variables["x"] == pytest.approx(2.0)
    assert v.variables["o"] == pytest.approx(4.0)


def test_objective_variable_is_not_a_column():
    p = problem(corpus.nep_oligopoly())
    mcp = assemble_mcp(p.report, p.model)
    assert mcp.size == 5
    assert all(c.label.startswith("q(") for c in mcp.columns)


def test_visol_uses_one_multiplier_column():
    g = problem(corpus.river_basin(False))
    gnep = assemble_mcp(g.report, g.model)
    p = problem(corpus.river_basin(True))
    vis = assemble_mcp(p.report, p.model)
    assert gnep.size == 3 + 3 * 2
    assert vis.size == 3 + 2
    assert [c.label for c in vis.columns[3:]] == ["mu[cons(1)]", "mu[cons(2)]"]
    assert all(c.agent is None for c in vis.columns[3:])


def test_visol_multiplier_reported_per_owner():
    _, v = solve(corpus.river_basin(True))
    for k in (1, 2, 3):
        assert v.multipliers[f"mu[cons(1)@{k}]"] == v.multipliers["mu[cons(1)]"]


def test_tragedy_modes_agree():
    _, a = solve(corpus.tragedy_commons(4, False))
    _, b = solve(corpus.tragedy_commons(4, True))
    for i in range(1, 5):
        assert a.variables[f"x({i})"] == pytest.approx(b.variables[f"x({i})"], abs=1e-8)


def test_ambiguous_replication():
    inst = corpus.err_ambiguous_replication()
    with pytest.raises(AmbiguousReplication):
        p = problem(inst)
        assemble_mcp(p.report, p.model)


def test_single_owner_replication_keeps_one_column():
    p = problem(corpus.mixed_behavior(1))
    mcp = assemble_mcp(p.report, p.model, "Replication")
    assert sum(c.symbol == "z" or c.label.startswith("z") for c in mcp.columns) == 1


def test_agent_kkt_rows_cover_agent_columns():
    p = problem(corpus.gnep_outrata())
    rows = agent_kkt(p.report, p.model, 0)
    labels = [c.label for c, _ in rows]
    assert labels == ["x(1)", "mu[cons1@1]"]


def test_vi_rows_use_left_minus_right():
    mcp, v = solve(corpus.mopec_mathiesen())
    # market clearing: b + A y - x >= 0, complementary to p >= 0
    assert v.variables["p(1)"] == pytest.approx(6.0, abs=1e-6)
    assert mcp.lower[mcp.index("p(1)")] == 0.0


@pytest.mark.parametrize("n", [10, 25, 50])
def test_switching_nnz_matches_hand_count(n):
    p = problem(corpus.luna_oligopoly(n))
    mcp = assemble_mcp(p.report, p.model, "Switching")
    assert mcp.size == n + 8
    st_ = model_stats(mcp)
    assert st_.nnz == switching_oligopoly_nnz(n)
    assert jacobian(mcp, mcp.init).nnz == st_.nnz


@pytest.mark.parametrize("n", [10, 25])
def test_luna_sizes(n):
    orig = problem(corpus.luna_oligopoly(n, shared=False))
    mcp = assemble_mcp(orig.report, orig.model)
    assert mcp.size == n + 2
    q = [k for k, c in enumerate(mcp.columns) if c.label.startswith("q(")]
    assert block_density(mcp, q) == 1.0
    sub = problem(corpus.luna_oligopoly(n))
    assert assemble_mcp(sub.report, sub.model, "Substitution").size == n + 3


@pytest.mark.parametrize("n", [100, 500, 2500])
def test_switching_density_scaling(n):
    # reference density is 0.20% at n = 2500; the hand count 5n + 19 over
    # (n + 8)^2 gives density ~ 500/n percent
    p = problem(corpus.luna_oligopoly(n))
    st_ = model_stats(assemble_mcp(p.report, p.model, "Switching"))
    assert st_.nnz == 5 * n + 19
    assert st_.percent <= 500 / n
    if n == 2500:
        assert round(st_.percent, 2) == 0.20
