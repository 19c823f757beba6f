import pytest

from equilib import corpus
from equilib.empinfo import AgentKind, parse_empinfo, validate_ownership
from equilib.errors import (ImplicitNotSquare, InvalidRelation, MissingOwnership, MixedTopLevel,
                            MultipleOwnership, NoObjectiveDefiningEquation, NonFreeImplicit,
                            NonImplicitSharedVariable, PairSizeMismatch, ParseError,
                            SharedEquNotEnabled, UnknownSymbol)
from equilib.model import parse_model

BASE = """
set I = 1..2;
var obj(I) free;
var x(I) >= 0;
equ d(i in I) : obj(i) =E= sqr(x(i)) - x(i)*(3 - x(1) - x(2));
"""


def report(model, empinfo, shared=False):
    m = parse_model(model)
    spec = parse_empinfo(empinfo, m).with_options(shared, "Switching")
    return validate_ownership(spec, m)


def test_nep_agents():
    r = report(BASE, "equilibrium\nmin obj(1) x(1) d(1)\nmax obj(2) x(2) d(2)")
    kinds = [a.kind for a in r.spec.agents]
    assert kinds == [AgentKind.MIN, AgentKind.MAX]
    assert r.spec.strategy == "Switching"


def test_wildcard_and_vector_forms():
    m = parse_model("set I = 1..2; set K = 1..3; var o(I) free; var q(I, K) >= 0;"
                    "equ d(i in I) : o(i) =E= sum(k in K, sqr(q(i,k)));"
                    "equ c(i in I) : sum(k in K, q(i,k)) =L= 1;")
    spec = parse_empinfo("equilibrium\nmin o(1) q(1,*) d(1) c(1)\nmin o(2) q(2,*) d(2) c(2)", m)
    r = validate_ownership(spec, m)
    assert len(r.spec.agents[0].variables) == 3


def test_vi_pairs_and_preceding():
    m = parse_model("set I = 1..2; var p(I) >= 0; var t free; equ F(i in I) : p(i) - 1 =N= 0;"
                    "equ g : t =E= 2;")
    spec = parse_empinfo("equilibrium\nvi t F p g", m)
    agent = spec.agents[0]
    assert agent.kind is AgentKind.VI
    assert len(agent.pairs) == 2
    assert len(agent.preceding) == 1
    assert len(agent.constraints) == 1


def test_unowned_implicit_block_gets_a_synthetic_agent():
    model = BASE + "var y free;\nequ H : y =E= x(1) + x(2);\n"
    r = report(model, "equilibrium\nimplicit y H\nmin obj(1) x(1) d(1)\nmin obj(2) x(2) d(2)")
    assert r.spec.agents[-1].synthetic
    assert r.spec.agents[-1].kind is AgentKind.VI


def test_qvi_clause():
    inst = corpus.qvi_outrata()
    m = parse_model(inst.model)
    spec = parse_empinfo(inst.empinfo, m)
    assert spec.qvi is not None and len(spec.qvi.entries) == 2


@pytest.mark.parametrize("model,empinfo,shared,err", [
    (BASE, "equilibrium\nmin obj(1) x(1) d(1)\nmin obj(1) x(2) d(2)", False, MultipleOwnership),
    (BASE, "equilibrium\nmin obj(1) x(1) d(1)", False, MissingOwnership),
    (BASE, "equilibrium\nmin obj(1) x(1) x(2) d(1)\nmin obj(2) x(2) d(2)", False, NonImplicitSharedVariable),
    (BASE + "equ cap : x(1) + x(2) =L= 1;",
     "equilibrium\nmin obj(1) x(1) d(1) cap\nmin obj(2) x(2) d(2) cap", False, SharedEquNotEnabled),
    (BASE + "equ bad : obj(1) + x(1) =E= 0;",
     "equilibrium\nmin obj(1) x(1) bad\nmin obj(2) x(2) d(2) d(1)", False, NoObjectiveDefiningEquation),
    (BASE + "var y free; var w free; equ H : y + w =E= x(1);",
     "equilibrium\nimplicit y w H\nmin obj(1) x(1) y w d(1)\nmin obj(2) x(2) d(2)", False, ImplicitNotSquare),
    (BASE + "var y >= 0; equ H : y =E= x(1);",
     "equilibrium\nimplicit y H\nmin obj(1) x(1) y d(1)\nmin obj(2) x(2) d(2)", False, NonFreeImplicit),
    (BASE + "equ F : x(1) =N= 0;",
     "equilibrium\nmin obj(1) x(1) d(1) F\nmin obj(2) x(2) d(2)", False, InvalidRelation),
])
def test_validation_errors(model, empinfo, shared, err):
    with pytest.raises(err):
        report(model, empinfo, shared)


@pytest.mark.parametrize("empinfo,err", [
    ("equilibrium\nmin obj(1) zz d(1)", UnknownSymbol),
    ("equilibrium\nmin obj(1) x(1) d(1)\nimplicit x(2) d(2)", ParseError),
    ("equilibrium\nvi d x(1)", PairSizeMismatch),
    ("qvi d x\nequilibrium", MixedTopLevel),
])
def test_parse_errors(empinfo, err):
    with pytest.raises(err):
        parse_empinfo(empinfo, parse_model(BASE))


def test_shared_constraint_accepted_with_option():
    r = report(BASE + "equ cap : x(1) + x(2) =L= 1;",
               "equilibrium\nmin obj(1) x(1) d(1) cap\nmin obj(2) x(2) d(2) cap", shared=True)
    assert len(r.equation_owners[parse_model(BASE + "equ cap : x(1) + x(2) =L= 1;").eq_id("cap", ())]) == 2


@pytest.mark.parametrize("name", corpus.ERROR_NAMES)
def test_error_corpus_raises_named_error(name):
    inst = corpus.build(name)
    from equilib.cli import load_problem, solve_problem
    with pytest.raises(Exception) as info:
        solve_problem(load_problem(inst.model, inst.empinfo, inst.options))
    assert type(info.value).__name__ == inst.expected_error
