"""Agent annotations: parsing the empinfo language and checking ownership.

An empinfo text names the agents of an equilibrium problem and what each
of them owns::

    equilibrium
    implicit z defz
    visol demand
    min iso_obj q0 iso_defobj demand
    max obj(1) q(1) z defobj(1)
    vi mkt p

or, for a quasi-variational inequality, ``qvi F y x g``.
Keywords (``equilibrium qvi min max vi implicit visol``) open clauses;
line breaks carry no meaning.  A token is ``name``, ``name(1,2)`` or
``name(1,*)``; a bare indexed name stands for all of its instances.
"""

import enum
import re
from dataclasses import dataclass, field, replace

from . import expr as ex
from .errors import (
    InvalidRelation, MissingOwnership, MixedTopLevel, MultipleOwnership,
    NoObjectiveDefiningEquation, NonFreeImplicit, NonImplicitSharedVariable,
    ImplicitNotSquare, IndexOutOfRange, PairSizeMismatch, ParseError, SharedEquNotEnabled,
    UnknownSymbol, ValidationError,
)
from .model import Kind, Relation, normalize

__all__ = [
    "AgentKind", "AgentSpec", "ImplicitDecl", "QviEntry", "QviSpec",
    "EquilibriumSpec", "OwnershipReport", "parse_empinfo", "validate_ownership",
    "STRATEGIES",
]

STRATEGIES = ("Replication", "Switching", "Substitution")
KEYWORDS = ("equilibrium", "qvi", "min", "max", "vi", "implicit", "visol")


class AgentKind(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    VI = "vi"


@dataclass(frozen=True)
class AgentSpec:
    kind: AgentKind
    objective: int | None = None     # objective variable id (MIN/MAX)
    variables: tuple = ()            # owned decision variables (MIN/MAX)
    equations: tuple = ()            # owned equations (MIN/MAX)
    preceding: tuple = ()            # VI variables matched to the zero function
    pairs: tuple = ()                # VI (function equation, variable) pairs
    constraints: tuple = ()          # VI constraint equations
    synthetic: bool = False          # created for an unowned implicit block
    line: int | None = None

    @property
    def is_optimization(self):
        return self.kind is not AgentKind.VI

    @property
    def owned_variables(self):
        if self.is_optimization:
            return self.variables
        return self.preceding + tuple(v for _, v in self.pairs)

    @property
    def owned_equations(self):
        if self.is_optimization:
            return self.equations
        return tuple(f for f, _ in self.pairs) + self.constraints


@dataclass(frozen=True)
class ImplicitDecl:
    variables: tuple
    equations: tuple


@dataclass(frozen=True)
class QviEntry:
    function: int | None   # None for a preceding variable (zero function)
    variable: int
    parameter: int | None


@dataclass(frozen=True)
class QviSpec:
    entries: tuple
    constraints: tuple


@dataclass(frozen=True)
class EquilibriumSpec:
    agents: tuple = ()
    implicits: tuple = ()
    visol: frozenset = frozenset()
    qvi: QviSpec | None = None
    shared_equ: bool = False
    strategy: str = "Switching"

    def with_options(self, shared_equ=None, strategy=None):
        changes = {}
        if shared_equ is not None:
            changes["shared_equ"] = bool(shared_equ)
        if strategy is not None:
            if strategy not in STRATEGIES:
                raise ValueError(f"unknown strategy {strategy!r}")
            changes["strategy"] = strategy
        return replace(self, **changes)


# ------------------------------------------------------------------ parsing

_TOKEN_RE = re.compile(r"\s*(?:(?P<ref>[A-Za-z_][A-Za-z0-9_]*(?:\([^)]*\))?)|(?P<dash>-)|(?P<bad>\S))")


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


def _tokens(text):
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m.end() == pos:
                break
            if m.group("bad"):
                raise ParseError(f"unexpected character {m.group('bad')!r}", lineno, m.start("bad") + 1)
            kind = "ref" if m.group("ref") else "dash"
            start = m.start(kind)
            out.append(_Tok(m.group(kind).replace(" ", ""), lineno, start + 1))
            pos = m.end()
    return out


@dataclass(frozen=True)
class _Sym:
    kind: str       # "var", "equ" or "dash"
    name: str
    ids: tuple
    tok: _Tok


def _resolve(tok, m):
    if tok.text == "-":
        return _Sym("dash", "-", (), tok)
    name, _, rest = tok.text.partition("(")
    kind = m.kind_of(name)
    if kind not in ("var", "equ"):
        raise UnknownSymbol(f"unknown variable or equation {name!r}", tok.line, tok.col)
    decl = m.variable(name) if kind == "var" else m.equation(name)
    if not rest:
        return _Sym(kind, name, tuple(decl.ids), tok)
    parts = [p.strip().strip("'\"") for p in rest.rstrip(")").split(",")]
    if len(parts) != len(decl.domain):
        raise ParseError(f"{name!r} expects {len(decl.domain)} indices", tok.line, tok.col)
    pattern = []
    for p in parts:
        if p == "*":
            pattern.append(None)
        else:
            try:
                pattern.append(int(p))
            except ValueError:
                raise ParseError(f"bad index {p!r} in {tok.text!r}", tok.line, tok.col) from None
    ids = tuple(decl.offset + k for k, idx in enumerate(decl.index_tuples)
                if all(q is None or q == i for q, i in zip(pattern, idx)))
    if not ids:
        raise IndexOutOfRange(f"{tok.text!r} selects no instance", tok.line, tok.col)
    return _Sym(kind, name, ids, tok)


def _clauses(tokens):
    clauses = []
    for tok in tokens:
        if tok.text in KEYWORDS:
            clauses.append((tok, []))
        elif not clauses:
            raise ParseError(f"expected 'equilibrium' or 'qvi', found {tok.text!r}", tok.line, tok.col)
        else:
            clauses[-1][1].append(tok)
    return clauses


def parse_empinfo(text, m):
    """Parse empinfo text against model ``m`` into an unvalidated spec."""
    clauses = _clauses(_tokens(text))
    if not clauses:
        raise ParseError("empty empinfo: expected 'equilibrium' or 'qvi'")
    head, body = clauses[0]
    if head.text not in ("equilibrium", "qvi"):
        raise ParseError(f"expected 'equilibrium' or 'qvi', found {head.text!r}", head.line, head.col)
    if head.text == "qvi":
        if len(clauses) > 1:
            tok = clauses[1][0]
            raise MixedTopLevel(f"'{tok.text}' cannot follow 'qvi'", tok.line, tok.col)
        return EquilibriumSpec(qvi=_parse_qvi([_resolve(t, m) for t in body], head))
    if body:
        raise ParseError(f"unexpected {body[0].text!r} after 'equilibrium'", body[0].line, body[0].col)

    agents, implicits, visol = [], [], set()
    for kw, toks in clauses[1:]:
        syms = [_resolve(t, m) for t in toks]
        if kw.text in ("equilibrium", "qvi"):
            raise MixedTopLevel(f"'{kw.text}' may only start the empinfo", kw.line, kw.col)
        if any(s.kind == "dash" for s in syms):
            s = next(s for s in syms if s.kind == "dash")
            raise ParseError("'-' is only allowed in qvi entries", s.tok.line, s.tok.col)
        if kw.text in ("min", "max"):
            agents.append(_parse_opt(kw, syms))
        elif kw.text == "vi":
            agents.append(_parse_vi(kw, syms))
        elif kw.text == "implicit":
            if agents:
                raise ParseError("'implicit' must come before agent definitions", kw.line, kw.col)
            implicits.append(ImplicitDecl(
                tuple(i for s in syms if s.kind == "var" for i in s.ids),
                tuple(i for s in syms if s.kind == "equ" for i in s.ids)))
        elif kw.text == "visol":
            for s in syms:
                if s.kind != "equ":
                    raise ParseError(f"'visol' expects equations, found variable {s.name!r}",
                                     s.tok.line, s.tok.col)
                visol.update(s.ids)
    return EquilibriumSpec(tuple(agents), tuple(implicits), frozenset(visol))


def _parse_opt(kw, syms):
    if not syms or syms[0].kind != "var":
        raise ParseError(f"'{kw.text}' must be followed by an objective variable", kw.line, kw.col)
    obj = syms[0]
    if len(obj.ids) != 1:
        raise ParseError(f"objective variable {obj.tok.text!r} must be a single scalar",
                         obj.tok.line, obj.tok.col)
    variables = tuple(i for s in syms[1:] if s.kind == "var" for i in s.ids)
    equations = tuple(i for s in syms[1:] if s.kind == "equ" for i in s.ids)
    return AgentSpec(AgentKind(kw.text), objective=obj.ids[0], variables=variables,
                     equations=equations, line=kw.line)


def _parse_vi(kw, syms):
    preceding, pairs, constraints = [], [], []
    k = 0
    while k < len(syms) and syms[k].kind == "var":
        preceding.extend(syms[k].ids)
        k += 1
    while k < len(syms):
        s = syms[k]
        if s.kind == "var":
            raise ParseError(f"variable {s.name!r} does not follow a function", s.tok.line, s.tok.col)
        nxt = syms[k + 1] if k + 1 < len(syms) else None
        if nxt is not None and nxt.kind == "var":
            if constraints:
                raise ParseError(f"function-variable pair after constraints at {s.name!r}",
                                 s.tok.line, s.tok.col)
            _check_sizes(s, nxt)
            pairs.extend(zip(s.ids, nxt.ids))
            k += 2
        else:
            constraints.extend(s.ids)
            k += 1
    return AgentSpec(AgentKind.VI, preceding=tuple(preceding), pairs=tuple(pairs),
                     constraints=tuple(constraints), line=kw.line)


def _check_sizes(a, b):
    if len(a.ids) != len(b.ids):
        raise PairSizeMismatch(
            f"{a.tok.text!r} has {len(a.ids)} instances but {b.tok.text!r} has {len(b.ids)}",
            b.tok.line, b.tok.col)


def _parse_qvi(syms, head):
    entries, constraints = [], []
    k = 0

    def take_parameter(y):
        nonlocal k
        if k < len(syms) and syms[k].kind in ("var", "dash"):
            p = syms[k]
            k += 1
            if p.kind == "dash":
                return [None] * len(y.ids)
            _check_sizes(y, p)
            return list(p.ids)
        return [None] * len(y.ids)

    while k < len(syms):
        s = syms[k]
        if constraints and s.kind != "equ":
            raise ParseError(f"unexpected {s.tok.text!r} after qvi constraints", s.tok.line, s.tok.col)
        if s.kind == "dash":
            raise ParseError("'-' must follow an interest variable", s.tok.line, s.tok.col)
        if s.kind == "var":
            k += 1
            params = take_parameter(s)
            entries.extend(QviEntry(None, y, x) for y, x in zip(s.ids, params))
            continue
        nxt = syms[k + 1] if k + 1 < len(syms) else None
        if nxt is not None and nxt.kind == "var" and not constraints:
            _check_sizes(s, nxt)
            k += 2
            params = take_parameter(nxt)
            entries.extend(QviEntry(f, y, x) for f, y, x in zip(s.ids, nxt.ids, params))
        else:
            constraints.extend(s.ids)
            k += 1
    if not entries:
        raise ParseError("'qvi' needs at least one variable", head.line, head.col)
    return QviSpec(tuple(entries), tuple(constraints))


# --------------------------------------------------------------- validation

@dataclass(frozen=True)
class OwnershipReport:
    """Validated spec plus the classification of every scalar symbol.

    ``equation_class`` values: objective, constraint, shared, vi_function,
    defining, qvi_function, qvi_constraint.  ``variable_class`` values:
    objective, owned, shared_implicit, owned_implicit, unowned_implicit,
    interest, parameter.
    """

    spec: EquilibriumSpec
    equation_class: dict
    variable_class: dict
    objectives: tuple = ()          # per agent: objective Expression or None
    objective_equations: tuple = ()  # per agent: consumed equation id or None
    equation_owners: dict = field(default_factory=dict)
    variable_owners: dict = field(default_factory=dict)

    @property
    def implicit_of(self):
        """Map implicit variable id -> index of its ImplicitDecl."""
        return {v: k for k, d in enumerate(self.spec.implicits) for v in d.variables}

    @property
    def defining_of(self):
        return {e: k for k, d in enumerate(self.spec.implicits) for e in d.equations}


def validate_ownership(spec, m):
    """Check ownership rules and return an :class:`OwnershipReport`.

    Unowned implicit blocks get a synthetic VI agent appended after the
    declared agents.
    """
    if spec.qvi is not None:
        return _validate_qvi(spec, m)

    implicit_vars, defining = {}, {}
    for k, decl in enumerate(spec.implicits):
        if len(decl.variables) != len(decl.equations):
            raise ImplicitNotSquare(
                f"implicit block has {len(decl.variables)} variables and {len(decl.equations)} equations")
        for v in decl.variables:
            if v in implicit_vars:
                raise MultipleOwnership(f"{m.var_names[v]} declared implicit twice")
            if m.lower[v] != float("-inf") or m.upper[v] != float("inf"):
                raise NonFreeImplicit(f"implicit variable {m.var_names[v]} must be free")
            implicit_vars[v] = k
        for e in decl.equations:
            if e in defining:
                raise MultipleOwnership(f"{m.eq_names[e]} defines two implicit blocks")
            if m.instance(e).rel != Relation.EQ:
                raise InvalidRelation(f"defining equation {m.eq_names[e]} must be =E=")
            defining[e] = k

    var_owners, eq_owners, obj_owners, fn_owners = {}, {}, {}, {}
    for a, agent in enumerate(spec.agents):
        if agent.is_optimization:
            obj_owners.setdefault(agent.objective, []).append(a)
        for v in agent.owned_variables:
            owners = var_owners.setdefault(v, [])
            if a not in owners:
                owners.append(a)
        if agent.is_optimization:
            for e in agent.equations:
                owners = eq_owners.setdefault(e, [])
                if a not in owners:
                    owners.append(a)
        else:
            for f, _ in agent.pairs:
                fn_owners.setdefault(f, []).append(a)
            for e in agent.constraints:
                owners = eq_owners.setdefault(e, [])
                if a not in owners:
                    owners.append(a)
            for v in agent.owned_variables:
                if v in implicit_vars:
                    raise ValidationError(f"implicit variable {m.var_names[v]} cannot belong to a vi agent")

    for v, owners in obj_owners.items():
        if len(owners) > 1 and v not in implicit_vars:
            raise MultipleOwnership(
                f"objective variable {m.var_names[v]} used by {len(owners)} agents but not implicit")
        if v in var_owners:
            raise MultipleOwnership(f"objective variable {m.var_names[v]} also listed as a decision variable")
    for f, owners in fn_owners.items():
        if len(owners) > 1 or f in eq_owners:
            raise MultipleOwnership(f"vi function {m.eq_names[f]} owned more than once")
    for v, owners in var_owners.items():
        if len(owners) > 1 and v not in implicit_vars:
            raise NonImplicitSharedVariable(
                f"variable {m.var_names[v]} owned by {len(owners)} agents but not declared implicit")
    for e in list(eq_owners) + list(fn_owners):
        if e in defining:
            raise MultipleOwnership(f"defining equation {m.eq_names[e]} is owned by the implicit variable")

    # objective functions
    objectives, obj_eqs = [], []
    consumed = {}
    for a, agent in enumerate(spec.agents):
        if not agent.is_optimization:
            objectives.append(None)
            obj_eqs.append(None)
            continue
        o = agent.objective
        if m.lower[o] != float("-inf") or m.upper[o] != float("inf"):
            raise ValidationError(f"objective variable {m.var_names[o]} must be free")
        if o in implicit_vars:
            objectives.append(ex.Var(o, m.var_names[o]))
            obj_eqs.append(None)
            continue
        cands = []
        for e in agent.equations:
            f = _objective_body(m.instance(e), o)
            if f is not None:
                cands.append((e, f))
        if len(cands) != 1:
            what = "no" if not cands else "more than one"
            raise NoObjectiveDefiningEquation(
                f"agent {a + 1}: {what} equation defines objective {m.var_names[o]}")
        e, f = cands[0]
        if e in consumed or len(eq_owners[e]) > 1:
            raise MultipleOwnership(f"objective equation {m.eq_names[e]} owned by several agents")
        consumed[e] = a
        objectives.append(f)
        obj_eqs.append(e)

    # synthetic agent for unowned implicit blocks
    agents = list(spec.agents)
    pairs = []
    for decl in spec.implicits:
        owned = [v for v in decl.variables if v in var_owners or v in obj_owners]
        if not owned:
            pairs.extend(zip(decl.equations, decl.variables))
        elif len(owned) != len(decl.variables):
            raise ValidationError("an implicit block must be owned as a whole")
    if pairs:
        agents.append(AgentSpec(AgentKind.VI, pairs=tuple(pairs), synthetic=True))
        objectives.append(None)
        obj_eqs.append(None)

    # classification and completeness
    eq_class, var_class = {}, {}
    for e in range(m.num_equations):
        if e in consumed:
            eq_class[e] = "objective"
        elif e in defining:
            eq_class[e] = "defining"
        elif e in fn_owners:
            eq_class[e] = "vi_function"
        elif e in eq_owners:
            owners = eq_owners[e]
            if len(owners) > 1:
                if not spec.shared_equ:
                    raise SharedEquNotEnabled(
                        f"equation {m.eq_names[e]} is shared by {len(owners)} agents; enable SharedEqu")
                eq_class[e] = "shared"
            else:
                eq_class[e] = "constraint"
            rel = m.instance(e).rel
            if rel == Relation.NONE:
                raise InvalidRelation(f"constraint {m.eq_names[e]} has relation =N=")
        else:
            raise MissingOwnership(f"equation {m.eq_names[e]} is not owned by any agent")
    for e in spec.visol:
        if eq_class.get(e) not in ("shared", "constraint"):
            raise ValidationError(f"visol equation {m.eq_names[e]} is not a constraint")
    for v in range(m.num_variables):
        if v in obj_owners:
            var_class[v] = "objective"
        elif v in implicit_vars:
            owners = var_owners.get(v, [])
            var_class[v] = ("unowned_implicit" if not owners
                            else "shared_implicit" if len(owners) > 1 else "owned_implicit")
        elif v in var_owners:
            var_class[v] = "owned"
        else:
            raise MissingOwnership(f"variable {m.var_names[v]} is not owned by any agent")

    eq_owners = {e: tuple(o) for e, o in eq_owners.items()}
    for f, o in fn_owners.items():
        eq_owners[f] = tuple(o)
    return OwnershipReport(
        replace(spec, agents=tuple(agents)), eq_class, var_class,
        tuple(objectives), tuple(obj_eqs), eq_owners,
        {v: tuple(o) for v, o in var_owners.items()})


def _objective_body(inst, o):
    if inst.rel != Relation.EQ:
        return None
    for mine, other in ((inst.lhs, inst.rhs), (inst.rhs, inst.lhs)):
        if isinstance(mine, ex.Var) and mine.index == o and o not in ex.free_variables(other):
            return other
    return None


def _validate_qvi(spec, m):
    q = spec.qvi
    eq_class, var_class = {}, {}
    interest = {}
    for entry in q.entries:
        if entry.variable in interest or entry.variable in var_class:
            raise MultipleOwnership(f"variable {m.var_names[entry.variable]} listed twice")
        interest[entry.variable] = entry
        var_class[entry.variable] = "interest"
        if entry.function is not None:
            if entry.function in eq_class:
                raise MultipleOwnership(f"function {m.eq_names[entry.function]} listed twice")
            eq_class[entry.function] = "qvi_function"
    for entry in q.entries:
        x = entry.parameter
        if x is None:
            continue
        if x == entry.variable or x in interest:
            raise ValidationError(f"parameter variable {m.var_names[x]} is also an interest variable")
        if x in var_class:
            raise MultipleOwnership(f"parameter variable {m.var_names[x]} matched twice")
        var_class[x] = "parameter"
    for e in q.constraints:
        if e in eq_class:
            raise MultipleOwnership(f"equation {m.eq_names[e]} listed twice")
        if m.instance(e).rel == Relation.NONE:
            raise InvalidRelation(f"constraint {m.eq_names[e]} has relation =N=")
        eq_class[e] = "qvi_constraint"
    for e in range(m.num_equations):
        if e not in eq_class:
            raise MissingOwnership(f"equation {m.eq_names[e]} is not listed in the qvi")
    for v in range(m.num_variables):
        if v not in var_class:
            raise MissingOwnership(f"variable {m.var_names[v]} is not listed in the qvi")
    return OwnershipReport(spec, eq_class, var_class)
