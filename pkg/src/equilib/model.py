"""Model files: sets, parameters, indexed variables and equations.

A model file is a small algebraic language::

    set I = 1..5;
    param c(I) = { [1] 10, [2] 8, [3] 6, [4] 4, [5] 2 };
    var obj(I) free;
    var q(I) >= 0 init 10;
    equ objdef(i in I) : obj(i) =E= q(i)*sum(j in I, q(j))^(-1/1.1) - c(i)*q(i);

Besides the declarations, attribute statements adjust single instances
(``p.fx(2) = 1;``, ``x.up(i in I) = 11;``).  Everything is expanded eagerly
into scalar variables and scalar equation instances; scalar ids follow
declaration order.
"""

import enum
import math
import re
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from . import expr as ex
from .errors import DuplicateName, IndexOutOfRange, ParseError, UnknownSymbol

__all__ = [
    "Relation", "Kind", "SetDecl", "ParamDecl", "VariableDecl", "EquationDecl",
    "EquationInstance", "Model", "parse_model", "normalize", "fix_variable",
    "format_model", "parse_expression", "tokenize",
]


class Relation(str, enum.Enum):
    EQ = "=E="
    LE = "=L="
    GE = "=G="
    NONE = "=N="


class Kind(str, enum.Enum):
    """Canonical form of a normalized row: ``body = 0``, ``body <= 0`` or unmatched."""

    EQ0 = "EQ0"
    LE0 = "LE0"
    NONE = "NONE"


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<rel>=[EeLlGgNn]=)
  | (?P<attr>\.(?:lo|up|l|fx)\b)
  | (?P<num>(?:\d+(?:\.(?!\.)\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|\*\*|>=|<=|[-+*/^(),;:=\[\]{}])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ------------------------------------------------------------- syntax tree
# Unexpanded expressions, kept so a model can be printed back in source form.

@dataclass(frozen=True)
class SNum:
    value: float
    pos: tuple = (0, 0)


@dataclass(frozen=True)
class SRef:
    name: str
    indices: tuple  # of int | str
    pos: tuple = (0, 0)


@dataclass(frozen=True)
class SUnary:
    op: str
    arg: object
    pos: tuple = (0, 0)


@dataclass(frozen=True)
class SBin:
    op: str
    left: object
    right: object
    pos: tuple = (0, 0)


@dataclass(frozen=True)
class SCall:
    fname: str
    arg: object
    pos: tuple = (0, 0)


@dataclass(frozen=True)
class SSum:
    binders: tuple  # of (name, set)
    body: object
    pos: tuple = (0, 0)


_FUNCTIONS = {"sqr": ex.sqr, "sqrt": ex.sqrt, "log": ex.log, "exp": ex.exp}
_BINOPS = {"+": ex.add, "-": ex.sub, "*": ex.mul, "/": ex.div, "^": ex.power}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def format_syntax(node):
    """Print a syntax tree in the model-file expression grammar."""
    return _fmt(node)[0]


def _fmt(node):
    if isinstance(node, SNum):
        v = node.value
        if math.isinf(v):
            return ("inf" if v > 0 else "-inf"), (5 if v > 0 else 3)
        if v == int(v) and abs(v) < 1e15:
            return str(int(v)), 5
        return repr(v), 5
    if isinstance(node, SRef):
        if node.indices:
            return f"{node.name}({','.join(str(i) for i in node.indices)})", 5
        return node.name, 5
    if isinstance(node, SCall):
        return f"{node.fname}({_fmt(node.arg)[0]})", 5
    if isinstance(node, SSum):
        b = ", ".join(f"{n} in {s}" for n, s in node.binders)
        return f"sum({b}, {_fmt(node.body)[0]})", 5
    if isinstance(node, SUnary):
        s, p = _fmt(node.arg)
        return "-" + (s if p >= 3 else f"({s})"), 3
    if isinstance(node, SBin):
        p = _PREC[node.op]
        ls, lp = _fmt(node.left)
        rs, rp = _fmt(node.right)
        if node.op == "^":
            ls = ls if lp > 4 else f"({ls})"
            rs = rs if rp >= 3 else f"({rs})"
            return f"{ls}^{rs}", 4
        ls = ls if lp >= p else f"({ls})"
        rs = rs if rp > p else f"({rs})"
        sep = f" {node.op} " if p == 1 else node.op
        return f"{ls}{sep}{rs}", p
    raise TypeError(node)


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=ParseError):
        tok = tok or self.peek()
        return cls(message, tok.line, tok.col)

    def at(self, text, k=0):
        tok = self.peek(k)
        return tok.kind in ("op", "name") and tok.text == text

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        tok = self.peek()
        if not self.at(text):
            shown = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.next()

    def expect_kind(self, kind, what=None):
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise self.error(f"expected {what or kind}, found {shown!r}")
        return self.next()

    def expect_int(self):
        negative = self.accept("-") is not None
        tok = self.expect_kind("num", "integer")
        try:
            value = int(tok.text)
        except ValueError:
            raise self.error(f"expected integer, found {tok.text!r}", tok) from None
        return -value if negative else value

    # statements

    def program(self):
        stmts = []
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "name":
                raise self.error(f"unexpected {tok.text!r} at start of statement")
            if tok.text == "set":
                stmts.append(self.set_stmt())
            elif tok.text == "param":
                stmts.append(self.param_stmt())
            elif tok.text == "var":
                stmts.append(self.var_stmt())
            elif tok.text == "equ":
                stmts.append(self.equ_stmt())
            elif self.peek(1).kind == "attr":
                stmts.append(self.attr_stmt())
            else:
                raise self.error(f"unknown statement {tok.text!r}")
        return stmts

    def set_stmt(self):
        start = self.next()
        name = self.expect_kind("name", "set name")
        self.expect("=")
        lo = self.expect_int()
        self.expect("..")
        hi = self.expect_int()
        self.expect(";")
        return ("set", name, lo, hi, start)

    def param_stmt(self):
        start = self.next()
        name = self.expect_kind("name", "parameter name")
        domain = []
        if self.accept("("):
            domain.append(self.expect_kind("name", "set name"))
            while self.accept(","):
                domain.append(self.expect_kind("name", "set name"))
            self.expect(")")
        self.expect("=")
        entries = None
        value = None
        if self.accept("{"):
            entries = []
            if not self.at("}"):
                entries.append(self.param_entry())
                while self.accept(","):
                    entries.append(self.param_entry())
            self.expect("}")
        else:
            value = self.expr()
        self.expect(";")
        return ("param", name, domain, entries, value, start)

    def param_entry(self):
        tok = self.peek()
        idx = ()
        if self.accept("["):
            idx = [self.expect_int()]
            while self.accept(","):
                idx.append(self.expect_int())
            self.expect("]")
            idx = tuple(idx)
        return (idx, self.expr(), tok)

    def domain_item(self):
        first = self.expect_kind("name", "set or binder")
        if self.accept("in"):
            return (first.text, self.expect_kind("name", "set name"))
        return (None, first)

    def var_stmt(self):
        start = self.next()
        name = self.expect_kind("name", "variable name")
        domain = []
        if self.accept("("):
            domain.append(self.domain_item())
            while self.accept(","):
                domain.append(self.domain_item())
            self.expect(")")
        lower = upper = fix = init = None
        bound = "free"
        if self.accept("free"):
            bound = "free"
        elif self.accept(">="):
            bound, lower = "lo", self.expr()
        elif self.accept("<="):
            bound, upper = "up", self.expr()
        elif self.accept("in"):
            bound = "box"
            self.expect("[")
            lower = self.expr()
            self.expect(",")
            upper = self.expr()
            self.expect("]")
        elif self.accept("fix"):
            bound, fix = "fix", self.expr()
        if self.accept("init"):
            init = self.expr()
        self.expect(";")
        return ("var", name, domain, bound, lower, upper, fix, init, start)

    def binder(self):
        name = self.expect_kind("name", "binder name")
        self.expect("in")
        return (name.text, self.expect_kind("name", "set name"))

    def equ_stmt(self):
        start = self.next()
        name = self.expect_kind("name", "equation name")
        binders = []
        if self.accept("("):
            binders.append(self.binder())
            while self.accept(","):
                binders.append(self.binder())
            self.expect(")")
        self.expect(":")
        lhs = self.expr()
        rel = self.expect_kind("rel", "relation (=E=, =L=, =G=, =N=)")
        rhs = self.expr()
        self.expect(";")
        return ("equ", name, binders, lhs, Relation(rel.text.upper()), rhs, start)

    def attr_stmt(self):
        name = self.next()
        attr = self.next().text[1:]
        idx = []
        if self.accept("("):
            idx.append(self.attr_index())
            while self.accept(","):
                idx.append(self.attr_index())
            self.expect(")")
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return ("attr", name, attr, idx, value, name)

    def attr_index(self):
        if self.peek().kind == "name" and self.at("in", 1):
            return self.binder()
        return self.expect_int()

    # expressions

    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            tok = self.next()
            node = SBin(tok.text, node, self.term(), (tok.line, tok.col))
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            tok = self.next()
            node = SBin(tok.text, node, self.unary(), (tok.line, tok.col))
        return node

    def unary(self):
        tok = self.peek()
        if self.accept("-"):
            return SUnary("-", self.unary(), (tok.line, tok.col))
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.at("^") or self.at("**"):
            tok = self.next()
            return SBin("^", base, self.unary(), (tok.line, tok.col))
        return base

    def primary(self):
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.kind == "num":
            self.next()
            return SNum(float(tok.text), pos)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind != "name":
            shown = tok.text or "end of input"
            raise self.error(f"expected expression, found {shown!r}")
        self.next()
        if tok.text == "inf":
            return SNum(math.inf, pos)
        if tok.text == "sum" and self.at("("):
            return self.sum_expr(pos)
        if tok.text in _FUNCTIONS and self.at("("):
            self.next()
            arg = self.expr()
            self.expect(")")
            return SCall(tok.text, arg, pos)
        indices = ()
        if self.accept("("):
            indices = [self.index()]
            while self.accept(","):
                indices.append(self.index())
            self.expect(")")
            indices = tuple(indices)
        return SRef(tok.text, indices, pos)

    def index(self):
        tok = self.peek()
        if tok.kind == "name":
            self.next()
            return tok.text
        return self.expect_int()

    def sum_expr(self, pos):
        self.expect("(")
        binders = []
        if self.at("(") and self.peek(1).kind == "name" and self.at("in", 2):
            self.next()
            binders.append(self.binder())
            while self.accept(","):
                binders.append(self.binder())
            self.expect(")")
            self.expect(",")
        else:
            binders.append(self.binder())
            self.expect(",")
            while self.peek().kind == "name" and self.at("in", 1):
                binders.append(self.binder())
                self.expect(",")
        body = self.expr()
        self.expect(")")
        return SSum(tuple((n, s.text) for n, s in binders), body, pos)


# ------------------------------------------------------------ model types

@dataclass(frozen=True)
class SetDecl:
    name: str
    lo: int
    hi: int

    @property
    def members(self):
        return range(self.lo, self.hi + 1)

    def __len__(self):
        return max(0, self.hi - self.lo + 1)


@dataclass(frozen=True, eq=False)
class ParamDecl:
    name: str
    domain: tuple
    values: dict  # index tuple -> float; missing entries read as 0

    def __call__(self, *idx):
        return self.values.get(tuple(idx), 0.0)


def _scalar_name(name, idx):
    return f"{name}({','.join(str(i) for i in idx)})" if idx else name


@dataclass(frozen=True, eq=False)
class VariableDecl:
    name: str
    domain: tuple      # set names
    index_tuples: tuple  # one tuple per scalar instance, row-major
    offset: int
    lower: tuple
    upper: tuple
    level: tuple

    @property
    def size(self):
        return len(self.index_tuples)

    @property
    def ids(self):
        return range(self.offset, self.offset + self.size)

    @property
    def fixed(self):
        return tuple(lo == up for lo, up in zip(self.lower, self.upper))

    def scalar_name(self, k):
        return _scalar_name(self.name, self.index_tuples[k])


@dataclass(frozen=True, eq=False)
class EquationInstance:
    lhs: ex.Expression
    rel: Relation
    rhs: ex.Expression


@dataclass(frozen=True, eq=False)
class EquationDecl:
    name: str
    binders: tuple      # (binder name, set name) pairs
    index_tuples: tuple
    offset: int
    instances: tuple    # EquationInstance per index tuple
    source: tuple       # (lhs syntax, relation, rhs syntax)

    @property
    def size(self):
        return len(self.index_tuples)

    @property
    def ids(self):
        return range(self.offset, self.offset + self.size)

    @property
    def domain(self):
        return tuple(s for _, s in self.binders)

    def scalar_name(self, k):
        return _scalar_name(self.name, self.index_tuples[k])


class Model:
    """Fully expanded model; treat as immutable (see :func:`fix_variable`)."""

    def __init__(self, sets, params, variables, equations, attr_log=()):
        self.sets = dict(sets)
        self.params = dict(params)
        self.variables = tuple(variables)
        self.equations = tuple(equations)
        self._attr_log = tuple(attr_log)
        self._var_by_name = {v.name: v for v in self.variables}
        self._eq_by_name = {e.name: e for e in self.equations}
        self.var_names = tuple(v.scalar_name(k) for v in self.variables for k in range(v.size))
        self.eq_names = tuple(e.scalar_name(k) for e in self.equations for k in range(e.size))
        self._var_owner = np.repeat(np.arange(len(self.variables)),
                                    [v.size for v in self.variables]).astype(int)
        self._eq_owner = np.repeat(np.arange(len(self.equations)),
                                   [e.size for e in self.equations]).astype(int)
        self._var_ids = {n: i for i, n in enumerate(self.var_names)}
        self._eq_ids = {n: i for i, n in enumerate(self.eq_names)}

    @property
    def num_variables(self):
        return len(self.var_names)

    @property
    def num_equations(self):
        return len(self.eq_names)

    def kind_of(self, name):
        if name in self._var_by_name:
            return "var"
        if name in self._eq_by_name:
            return "equ"
        if name in self.params:
            return "param"
        if name in self.sets:
            return "set"
        return None

    def variable(self, name):
        try:
            return self._var_by_name[name]
        except KeyError:
            raise UnknownSymbol(f"unknown variable {name!r}") from None

    def equation(self, name):
        try:
            return self._eq_by_name[name]
        except KeyError:
            raise UnknownSymbol(f"unknown equation {name!r}") from None

    def var_decl(self, vid):
        return self.variables[self._var_owner[vid]]

    def eq_decl(self, eid):
        return self.equations[self._eq_owner[eid]]

    def var_id(self, name, index=()):
        decl = self.variable(name)
        return decl.offset + _flat_index(decl, tuple(index), name)

    def eq_id(self, name, index=()):
        decl = self.equation(name)
        return decl.offset + _flat_index(decl, tuple(index), name)

    def var_id_by_scalar_name(self, scalar):
        try:
            return self._var_ids[scalar.replace(" ", "")]
        except KeyError:
            raise UnknownSymbol(f"unknown scalar variable {scalar!r}") from None

    def eq_id_by_scalar_name(self, scalar):
        try:
            return self._eq_ids[scalar.replace(" ", "")]
        except KeyError:
            raise UnknownSymbol(f"unknown scalar equation {scalar!r}") from None

    def instance(self, eid):
        decl = self.eq_decl(eid)
        return decl.instances[eid - decl.offset]

    def var_expr(self, vid):
        return ex.Var(vid, self.var_names[vid])

    @property
    def lower(self):
        return np.array([b for v in self.variables for b in v.lower], dtype=float)

    @property
    def upper(self):
        return np.array([b for v in self.variables for b in v.upper], dtype=float)

    @property
    def level(self):
        return np.array([b for v in self.variables for b in v.level], dtype=float)


def _flat_index(decl, index, name):
    positions = decl.__dict__.get("_positions")
    if positions is None:
        positions = {t: k for k, t in enumerate(decl.index_tuples)}
        object.__setattr__(decl, "_positions", positions)
    try:
        return positions[index]
    except KeyError:
        raise IndexOutOfRange(f"index {index} out of range for {name!r}") from None


# -------------------------------------------------------------- elaboration

class _Elaborator:
    def __init__(self):
        self.sets = {}
        self.params = {}
        self.variables = []
        self.equations = []
        self.names = {}
        self.nvars = 0
        self.neqs = 0
        self.attr_log = []

    def declare(self, tok, kind):
        if tok.text in self.names or tok.text in ("sum", "inf", "in") or tok.text in _FUNCTIONS:
            raise DuplicateName(f"{tok.text!r} already declared", tok.line, tok.col)
        self.names[tok.text] = kind

    def set_of(self, tok):
        s = self.sets.get(tok.text)
        if s is None:
            raise UnknownSymbol(f"unknown set {tok.text!r}", tok.line, tok.col)
        return s

    def run(self, stmts):
        for st in stmts:
            getattr(self, "do_" + st[0])(*st[1:])
        return Model(self.sets, self.params, self.variables, self.equations, self.attr_log)

    def do_set(self, name, lo, hi, start):
        self.declare(name, "set")
        if hi < lo:
            raise ParseError(f"empty set {name.text!r}", name.line, name.col)
        self.sets[name.text] = SetDecl(name.text, lo, hi)

    def do_param(self, name, domain, entries, value, start):
        self.declare(name, "param")
        sets = [self.set_of(t) for t in domain]
        values = {}
        if entries is None:
            if sets:
                raise ParseError("indexed parameter needs an entry list", name.line, name.col)
            values[()] = self.constant(value, {})
        else:
            for idx, val, tok in entries:
                if len(idx) != len(sets):
                    raise ParseError(f"parameter {name.text!r} expects {len(sets)} indices",
                                     tok.line, tok.col)
                for k, s in zip(idx, sets):
                    if k not in s.members:
                        raise IndexOutOfRange(f"index {k} not in set {s.name!r}", tok.line, tok.col)
                values[tuple(idx)] = self.constant(val, {})
        self.params[name.text] = ParamDecl(name.text, tuple(s.name for s in sets), values)

    def constant(self, node, env):
        e = self.build(node, env)
        if isinstance(e, ex.Const):
            return e.value
        line, col = getattr(node, "pos", (None, None))
        if e.free_variables():
            raise ParseError("expected a constant expression", line, col)
        try:
            return ex.evaluate(e, ())
        except ArithmeticError as err:
            raise ParseError(f"cannot evaluate constant: {err}", line, col) from None

    def domain_tuples(self, sets):
        return tuple(product(*(s.members for s in sets))) if sets else ((),)

    def do_var(self, name, domain, bound, lower, upper, fix, init, start):
        self.declare(name, "var")
        binders = [b for b, _ in domain]
        sets = [self.set_of(t) for _, t in domain]
        tuples = self.domain_tuples(sets)
        los, ups, lvls = [], [], []
        for idx in tuples:
            env = {b: k for b, k in zip(binders, idx) if b is not None}
            lo, up = -math.inf, math.inf
            if bound == "lo":
                lo = self.constant(lower, env)
            elif bound == "up":
                up = self.constant(upper, env)
            elif bound == "box":
                lo, up = self.constant(lower, env), self.constant(upper, env)
            elif bound == "fix":
                lo = up = self.constant(fix, env)
            if lo > up:
                raise ParseError(f"empty bounds [{lo}, {up}] for {name.text!r}", name.line, name.col)
            lvl = self.constant(init, env) if init is not None else 0.0
            los.append(lo)
            ups.append(up)
            lvls.append(min(max(lvl, lo), up))
        decl = VariableDecl(name.text, tuple(s.name for s in sets), tuples, self.nvars,
                            tuple(los), tuple(ups), tuple(lvls))
        self.nvars += decl.size
        self.variables.append(decl)

    def do_attr(self, name, attr, idx, value, start):
        if self.names.get(name.text) != "var":
            raise UnknownSymbol(f"unknown variable {name.text!r}", name.line, name.col)
        k = next(i for i, v in enumerate(self.variables) if v.name == name.text)
        decl = self.variables[k]
        if len(idx) != len(decl.domain):
            raise ParseError(f"{name.text!r} expects {len(decl.domain)} indices", name.line, name.col)
        choices = []
        binders = []
        for pos, item in enumerate(idx):
            s = self.sets[decl.domain[pos]]
            if isinstance(item, tuple):
                binder, set_tok = item
                bs = self.set_of(set_tok)
                choices.append(list(bs.members))
                binders.append(binder)
            else:
                if item not in s.members:
                    raise IndexOutOfRange(f"index {item} out of range for {name.text!r}",
                                          name.line, name.col)
                choices.append([item])
                binders.append(None)
        lower, upper, level = list(decl.lower), list(decl.upper), list(decl.level)
        for combo in product(*choices) if choices else [()]:
            env = {b: v for b, v in zip(binders, combo) if b is not None}
            flat = _flat_index(decl, tuple(combo), name.text)
            val = self.constant(value, env)
            if attr == "lo":
                lower[flat] = val
            elif attr == "up":
                upper[flat] = val
            elif attr == "fx":
                lower[flat] = upper[flat] = level[flat] = val
            else:
                level[flat] = val
            if lower[flat] > upper[flat]:
                raise ParseError(f"empty bounds for {decl.scalar_name(flat)}", name.line, name.col)
            level[flat] = min(max(level[flat], lower[flat]), upper[flat])
        self.variables[k] = replace(decl, lower=tuple(lower), upper=tuple(upper), level=tuple(level))

    def do_equ(self, name, binders, lhs, rel, rhs, start):
        self.declare(name, "equ")
        names = [b for b, _ in binders]
        sets = [self.set_of(t) for _, t in binders]
        tuples = self.domain_tuples(sets)
        instances = []
        for idx in tuples:
            env = dict(zip(names, idx))
            instances.append(EquationInstance(self.build(lhs, env), rel, self.build(rhs, env)))
        decl = EquationDecl(name.text, tuple((b, s.name) for b, s in zip(names, sets)), tuples,
                            self.neqs, tuple(instances), (lhs, rel, rhs))
        self.neqs += decl.size
        self.equations.append(decl)

    def build(self, node, env):
        if isinstance(node, SNum):
            return ex.Const(node.value)
        if isinstance(node, SBin):
            return _BINOPS[node.op](self.build(node.left, env), self.build(node.right, env))
        if isinstance(node, SUnary):
            return ex.neg(self.build(node.arg, env))
        if isinstance(node, SCall):
            return _FUNCTIONS[node.fname](self.build(node.arg, env))
        if isinstance(node, SSum):
            ranges = []
            for b, s in node.binders:
                if b in env or self.names.get(b) is not None:
                    raise DuplicateName(f"binder {b!r} shadows another name", *node.pos)
                st = self.sets.get(s)
                if st is None:
                    raise UnknownSymbol(f"unknown set {s!r}", *node.pos)
                ranges.append(st.members)
            terms = []
            for combo in product(*ranges):
                inner = dict(env)
                inner.update(zip((b for b, _ in node.binders), combo))
                terms.append(self.build(node.body, inner))
            return _flatten_sum(terms)
        if isinstance(node, SRef):
            return self.reference(node, env)
        raise TypeError(node)

    def reference(self, node, env):
        line, col = node.pos
        if node.name in env and not node.indices:
            return ex.Const(env[node.name])
        kind = self.names.get(node.name)
        if kind is None:
            raise UnknownSymbol(f"unknown symbol {node.name!r}", line, col)
        idx = []
        for item in node.indices:
            if isinstance(item, str):
                if item not in env:
                    raise UnknownSymbol(f"unbound index {item!r}", line, col)
                idx.append(env[item])
            else:
                idx.append(item)
        idx = tuple(idx)
        if kind == "param":
            p = self.params[node.name]
            self.check_index(node.name, p.domain, idx, line, col)
            return ex.Const(p(*idx))
        if kind == "var":
            decl = next(v for v in self.variables if v.name == node.name)
            self.check_index(node.name, decl.domain, idx, line, col)
            vid = decl.offset + _flat_index(decl, idx, node.name)
            return ex.Var(vid, _scalar_name(node.name, idx))
        raise ParseError(f"{kind} {node.name!r} cannot be used in an expression", line, col)

    def check_index(self, name, domain, idx, line, col):
        if len(idx) != len(domain):
            raise ParseError(f"{name!r} expects {len(domain)} indices, got {len(idx)}", line, col)
        for k, s in zip(idx, domain):
            if k not in self.sets[s].members:
                raise IndexOutOfRange(f"index {k} out of range for {name!r}", line, col)


def _flatten_sum(terms):
    flat = []
    for t in terms:
        if isinstance(t, ex.Sum):
            flat.extend(t.args)
        else:
            flat.append(t)
    return ex.make_sum(flat)


def parse_model(text):
    """Parse model-file text into a fully expanded :class:`Model`."""
    return _Elaborator().run(_Parser(text).program())


def parse_expression(text, model=None, env=None):
    """Parse a standalone expression against an optional model's symbols."""
    p = _Parser(text)
    node = p.expr()
    if p.peek().kind != "eof":
        raise p.error(f"unexpected {p.peek().text!r}")
    el = _Elaborator()
    if model is not None:
        el.sets = dict(model.sets)
        el.params = dict(model.params)
        el.variables = list(model.variables)
        el.names = {n: model.kind_of(n) for n in
                    list(model.sets) + list(model.params)
                    + [v.name for v in model.variables] + [e.name for e in model.equations]}
    return el.build(node, dict(env or {}))


# -------------------------------------------------------- model operations

def normalize(instance):
    """Canonical ``(body, kind)`` form of a scalar equation instance.

    ``=E=`` and ``=L=`` give ``lhs - rhs``; ``=G=`` is flipped to
    ``rhs - lhs <= 0``; ``=N=`` keeps ``lhs - rhs``.
    """
    lhs, rel, rhs = instance.lhs, instance.rel, instance.rhs
    if rel == Relation.EQ:
        return ex.sub(lhs, rhs), Kind.EQ0
    if rel == Relation.LE:
        return ex.sub(lhs, rhs), Kind.LE0
    if rel == Relation.GE:
        return ex.sub(rhs, lhs), Kind.LE0
    return ex.sub(lhs, rhs), Kind.NONE


def fix_variable(m, name, index, value):
    """Return a copy of ``m`` with one scalar instance pinned at ``value``."""
    decl = m.variable(name)
    if not isinstance(index, tuple):
        index = (index,) if index is not None else ()
    flat = _flat_index(decl, index, name)
    value = float(value)
    lower, upper, level = list(decl.lower), list(decl.upper), list(decl.level)
    lower[flat] = upper[flat] = level[flat] = value
    new = replace(decl, lower=tuple(lower), upper=tuple(upper), level=tuple(level))
    variables = [new if v is decl else v for v in m.variables]
    return Model(m.sets, m.params, variables, m.equations)


def _num(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def format_model(m):
    """Print ``m`` in model-file syntax; reparsing gives the same expansion."""
    out = []
    for s in m.sets.values():
        out.append(f"set {s.name} = {s.lo}..{s.hi};")
    for p in m.params.values():
        dom = f"({', '.join(p.domain)})" if p.domain else ""
        if p.domain:
            entries = ", ".join(f"[{','.join(map(str, k))}] {_num(v)}"
                                for k, v in sorted(p.values.items()))
            out.append(f"param {p.name}{dom} = {{ {entries} }};")
        else:
            out.append(f"param {p.name} = {{ {_num(p.values.get((), 0.0))} }};")
    for v in m.variables:
        dom = f"({', '.join(v.domain)})" if v.domain else ""
        out.append(f"var {v.name}{dom} free;")
        for k, idx in enumerate(v.index_tuples):
            sub = f"({','.join(map(str, idx))})" if idx else ""
            lo, up, lvl = v.lower[k], v.upper[k], v.level[k]
            if lo == up:
                out.append(f"{v.name}.fx{sub} = {_num(lo)};")
                continue
            if lo != -math.inf:
                out.append(f"{v.name}.lo{sub} = {_num(lo)};")
            if up != math.inf:
                out.append(f"{v.name}.up{sub} = {_num(up)};")
            if lvl != 0.0:
                out.append(f"{v.name}.l{sub} = {_num(lvl)};")
    for e in m.equations:
        lhs, rel, rhs = e.source
        b = f"({', '.join(f'{n} in {s}' for n, s in e.binders)})" if e.binders else ""
        out.append(f"equ {e.name}{b} : {format_syntax(lhs)} {rel.value} {format_syntax(rhs)};")
    return "\n".join(out) + "\n"
