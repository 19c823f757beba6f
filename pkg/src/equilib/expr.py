"""Immutable scalar expression trees.

Every function the reformulation touches (objectives, constraints, VI
functions, assembled MCP rows) is an :class:`Expression`.  Nodes are
immutable and may be shared freely between trees, so an expression is really
a DAG; :func:`differentiate`, :func:`substitute` and :class:`Program` all
memoise on node identity to stay linear in the DAG size.

Construction goes through the smart constructors (:func:`add`, :func:`mul`,
...) or the overloaded Python operators, which fold literal zeros and ones
and constant-only subtrees.  No other simplification is attempted.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "Expression", "Const", "Var", "Sum", "Add", "Sub", "Mul", "Div", "Pow",
    "Neg", "Sqr", "Sqrt", "Log", "Exp",
    "const", "var", "add", "sub", "mul", "div", "power", "neg", "sqr",
    "sqrt", "log", "exp", "make_sum", "as_expr",
    "ZERO", "ONE", "evaluate", "differentiate", "free_variables",
    "substitute", "Program",
]


class Expression:
    """Base class of all expression nodes."""

    __slots__ = ("_free",)
    op = "?"
    args = ()
    precedence = 5

    def free_variables(self):
        """Syntactic variable support as a frozenset of scalar ids."""
        try:
            return self._free
        except AttributeError:
            pass
        if not self.args:
            free = frozenset()
        elif len(self.args) == 1:
            free = self.args[0].free_variables()
        else:
            free = frozenset().union(*(a.free_variables() for a in self.args))
        self._free = free
        return free

    def rebuild(self, args):
        raise NotImplementedError

    def _derivative(self, d, v):
        raise NotImplementedError

    # structural equality; hashing is by structure too, so prefer id()-keyed
    # dicts for memo tables on large DAGs
    def _key(self):
        return (self.op,) + tuple(self.args)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expression):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"


class Const(Expression):
    __slots__ = ("value",)
    op = "const"

    def __init__(self, value):
        self.value = float(value)

    @property
    def precedence(self):
        return 3 if self.value < 0 else 5

    def free_variables(self):
        return frozenset()

    def _key(self):
        return ("const", self.value)

    def _derivative(self, d, v):
        return ZERO

    def __str__(self):
        v = self.value
        if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return repr(v)


class Var(Expression):
    """Reference to a scalar variable by id; ``name`` is for display only."""

    __slots__ = ("index", "name")
    op = "var"

    def __init__(self, index, name=None):
        self.index = int(index)
        self.name = name if name is not None else f"v{index}"

    def free_variables(self):
        try:
            return self._free
        except AttributeError:
            self._free = frozenset((self.index,))
            return self._free

    def _key(self):
        return ("var", self.index)

    def _derivative(self, d, v):
        return ONE if self.index == v else ZERO

    def __str__(self):
        return self.name


class Sum(Expression):
    """N-ary sum."""

    __slots__ = ("args", "_by_var")
    op = "sum"
    precedence = 1

    def __init__(self, terms):
        self.args = tuple(terms)

    def rebuild(self, args):
        return make_sum(args)

    def _derivative(self, d, v):
        # index terms by variable once, so a dense Jacobian of a long sum
        # costs O(nnz) rather than O(n) per entry
        try:
            by_var = self._by_var
        except AttributeError:
            by_var = {}
            for t in self.args:
                for j in t.free_variables():
                    by_var.setdefault(j, []).append(t)
            self._by_var = by_var
        return make_sum(d(t) for t in by_var.get(v, ()))

    def __str__(self):
        parts = [_wrap(self.args[0], 1)]
        for t in self.args[1:]:
            parts.append(" + " + _wrap(t, 2))
        return "".join(parts)


class _Binary(Expression):
    __slots__ = ("args",)

    def __init__(self, a, b):
        self.args = (a, b)


class Add(_Binary):
    __slots__ = ()
    op = "add"
    precedence = 1

    def rebuild(self, args):
        return add(*args)

    def _derivative(self, d, v):
        return add(d(self.args[0]), d(self.args[1]))

    def __str__(self):
        a, b = self.args
        return f"{_wrap(a, 1)} + {_wrap(b, 2)}"


class Sub(_Binary):
    __slots__ = ()
    op = "sub"
    precedence = 1

    def rebuild(self, args):
        return sub(*args)

    def _derivative(self, d, v):
        return sub(d(self.args[0]), d(self.args[1]))

    def __str__(self):
        a, b = self.args
        return f"{_wrap(a, 1)} - {_wrap(b, 2)}"


class Mul(_Binary):
    __slots__ = ()
    op = "mul"
    precedence = 2

    def rebuild(self, args):
        return mul(*args)

    def _derivative(self, d, v):
        a, b = self.args
        return add(mul(d(a), b), mul(a, d(b)))

    def __str__(self):
        a, b = self.args
        return f"{_wrap(a, 2)}*{_wrap(b, 3)}"


class Div(_Binary):
    __slots__ = ()
    op = "div"
    precedence = 2

    def rebuild(self, args):
        return div(*args)

    def _derivative(self, d, v):
        a, b = self.args
        da, db = d(a), d(b)
        return sub(div(da, b), div(mul(a, db), sqr(b)))

    def __str__(self):
        a, b = self.args
        return f"{_wrap(a, 2)}/{_wrap(b, 3)}"


class Pow(_Binary):
    __slots__ = ()
    op = "pow"
    precedence = 4

    def rebuild(self, args):
        return power(*args)

    def _derivative(self, d, v):
        a, b = self.args
        if v not in b.free_variables():
            if isinstance(b, Const):
                lowered = Const(b.value - 1.0)
            else:
                lowered = sub(b, ONE)
            return mul(mul(b, power(a, lowered)), d(a))
        # a^b = exp(b*log(a))
        return mul(self, add(mul(d(b), log(a)), div(mul(b, d(a)), a)))

    def __str__(self):
        a, b = self.args
        return f"{_wrap(a, 5)}^{_wrap(b, 4)}"


class _Unary(Expression):
    __slots__ = ("args",)
    fname = ""

    def __init__(self, a):
        self.args = (a,)

    def __str__(self):
        return f"{self.fname}({self.args[0]})"


class Neg(_Unary):
    __slots__ = ()
    op = "neg"
    precedence = 3

    def rebuild(self, args):
        return neg(args[0])

    def _derivative(self, d, v):
        return neg(d(self.args[0]))

    def __str__(self):
        return "-" + _wrap(self.args[0], 3)


class Sqr(_Unary):
    __slots__ = ()
    op = "sqr"
    fname = "sqr"

    def rebuild(self, args):
        return sqr(args[0])

    def _derivative(self, d, v):
        a = self.args[0]
        return mul(mul(Const(2.0), a), d(a))


class Sqrt(_Unary):
    __slots__ = ()
    op = "sqrt"
    fname = "sqrt"

    def rebuild(self, args):
        return sqrt(args[0])

    def _derivative(self, d, v):
        return div(d(self.args[0]), mul(Const(2.0), self))


class Log(_Unary):
    __slots__ = ()
    op = "log"
    fname = "log"

    def rebuild(self, args):
        return log(args[0])

    def _derivative(self, d, v):
        a = self.args[0]
        return div(d(a), a)


class Exp(_Unary):
    __slots__ = ()
    op = "exp"
    fname = "exp"

    def rebuild(self, args):
        return exp(args[0])

    def _derivative(self, d, v):
        return mul(self, d(self.args[0]))


def _wrap(e, level):
    s = str(e)
    return f"({s})" if e.precedence < level else s


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value):
    if isinstance(value, Expression):
        return value
    return Const(value)


def const(value):
    return Const(value)


def var(index, name=None):
    return Var(index, name)


def _is(e, value):
    return isinstance(e, Const) and e.value == value


def _fold(fn, *values):
    # constant folding must never hide a domain error; leave the node in place
    try:
        r = fn(*values)
    except (ValueError, OverflowError, ZeroDivisionError):
        return None
    return Const(r) if math.isfinite(r) else None


def add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda x, y: x + y, a.value, b.value) or Add(a, b)
    return Add(a, b)


def sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda x, y: x - y, a.value, b.value) or Sub(a, b)
    return Sub(a, b)


def mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda x, y: x * y, a.value, b.value) or Mul(a, b)
    return Mul(a, b)


def div(a, b):
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda x, y: x / y, a.value, b.value) or Div(a, b)
    return Div(a, b)


def power(a, b):
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return ONE
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(math.pow, a.value, b.value) or Pow(a, b)
    return Pow(a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value) if a.value != 0 else ZERO
    if isinstance(a, Neg):
        return a.args[0]
    return Neg(a)


def sqr(a):
    if isinstance(a, Const):
        return _fold(lambda x: x * x, a.value) or Sqr(a)
    return Sqr(a)


def sqrt(a):
    if isinstance(a, Const):
        return _fold(math.sqrt, a.value) or Sqrt(a)
    return Sqrt(a)


def log(a):
    if isinstance(a, Const):
        return _fold(math.log, a.value) or Log(a)
    return Log(a)


def exp(a):
    if isinstance(a, Const):
        return _fold(math.exp, a.value) or Exp(a)
    return Exp(a)


def make_sum(terms):
    terms = [t for t in terms if not _is(t, 0.0)]
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Sum(terms)


def free_variables(e):
    return e.free_variables()


def differentiate(e, v):
    """Return an expression for the partial derivative of ``e`` w.r.t. ``v``."""
    memo = {}

    def d(node):
        if v not in node.free_variables():
            return ZERO
        r = memo.get(id(node))
        if r is None:
            r = node._derivative(d, v)
            memo[id(node)] = r
        return r

    return d(e)


def substitute(e, mapping):
    """Replace variable references according to ``mapping`` (id -> Expression)."""
    if not mapping:
        return e
    keys = frozenset(mapping)
    memo = {}

    def s(node):
        if keys.isdisjoint(node.free_variables()):
            return node
        r = memo.get(id(node))
        if r is None:
            if isinstance(node, Var):
                r = mapping[node.index]
            else:
                r = node.rebuild([s(a) for a in node.args])
            memo[id(node)] = r
        return r

    return s(e)


# opcodes of the evaluation tape
_CONST, _VAR, _SUM, _ADD, _SUB, _MUL, _DIV, _POW, _NEG, _SQR, _SQRT, _LOG, _EXP = range(13)
_OPCODES = {
    "sum": _SUM, "add": _ADD, "sub": _SUB, "mul": _MUL, "div": _DIV,
    "pow": _POW, "neg": _NEG, "sqr": _SQR, "sqrt": _SQRT, "log": _LOG,
    "exp": _EXP,
}


class Program:
    """A batch of expressions flattened into one topologically ordered tape.

    Shared subtrees are evaluated once per call.  Calling the program on a
    point returns a float array with one entry per input expression.
    """

    def __init__(self, exprs):
        exprs = list(exprs)
        slots = {}
        nodes = []
        code = []
        for root in exprs:
            if id(root) in slots:
                continue
            stack = [(root, False)]
            while stack:
                node, expanded = stack.pop()
                if id(node) in slots:
                    continue
                if not expanded and node.args:
                    stack.append((node, True))
                    for a in reversed(node.args):
                        if id(a) not in slots:
                            stack.append((a, False))
                    continue
                slots[id(node)] = len(nodes)
                nodes.append(node)
                if isinstance(node, Const):
                    code.append((_CONST, node.value))
                elif isinstance(node, Var):
                    code.append((_VAR, node.index))
                elif node.op == "sum":
                    code.append((_SUM, tuple(slots[id(a)] for a in node.args)))
                else:
                    code.append((_OPCODES[node.op],) + tuple(slots[id(a)] for a in node.args))
        self._nodes = nodes
        self._code = code
        self.outputs = [slots[id(e)] for e in exprs]
        self.size = len(exprs)

    def __len__(self):
        return self.size

    def __call__(self, point):
        v = self._run(point)
        out = np.fromiter((v[k] for k in self.outputs), dtype=float, count=len(self.outputs))
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise DomainError(f"non-finite value in {_short(self._nodes[self.outputs[bad]])}",
                              self._nodes[self.outputs[bad]])
        return out

    def _run(self, point):
        x = point.tolist() if isinstance(point, np.ndarray) else list(point)
        v = [0.0] * len(self._code)
        for k, ins in enumerate(self._code):
            op = ins[0]
            if op == _CONST:
                v[k] = ins[1]
            elif op == _VAR:
                v[k] = x[ins[1]]
            elif op == _MUL:
                v[k] = v[ins[1]] * v[ins[2]]
            elif op == _SUM:
                v[k] = sum([v[i] for i in ins[1]])
            elif op == _ADD:
                v[k] = v[ins[1]] + v[ins[2]]
            elif op == _SUB:
                v[k] = v[ins[1]] - v[ins[2]]
            elif op == _NEG:
                v[k] = -v[ins[1]]
            elif op == _SQR:
                a = v[ins[1]]
                v[k] = a * a
            elif op == _DIV:
                b = v[ins[2]]
                if b == 0.0:
                    raise DomainError(f"division by zero in {_short(self._nodes[k])}", self._nodes[k])
                v[k] = v[ins[1]] / b
            elif op == _POW:
                try:
                    v[k] = math.pow(v[ins[1]], v[ins[2]])
                except (ValueError, OverflowError):
                    raise DomainError(f"power {v[ins[1]]!r}^{v[ins[2]]!r} undefined in "
                                      f"{_short(self._nodes[k])}", self._nodes[k]) from None
            elif op == _LOG:
                a = v[ins[1]]
                if not a > 0.0:
                    raise DomainError(f"log of non-positive value {a!r} in {_short(self._nodes[k])}",
                                      self._nodes[k])
                v[k] = math.log(a)
            elif op == _EXP:
                try:
                    v[k] = math.exp(v[ins[1]])
                except OverflowError:
                    raise DomainError(f"exp overflow in {_short(self._nodes[k])}", self._nodes[k]) from None
            elif op == _SQRT:
                a = v[ins[1]]
                if a < 0.0:
                    raise DomainError(f"sqrt of negative value {a!r} in {_short(self._nodes[k])}",
                                      self._nodes[k])
                v[k] = math.sqrt(a)
        return v


def _short(node, limit=120):
    s = str(node)
    return s if len(s) <= limit else s[: limit - 3] + "..."


def evaluate(e, point):
    """Value of ``e`` at ``point`` (indexable by scalar variable id)."""
    return float(Program([e])(point)[0])
