"""From a validated equilibrium spec to a mixed complementarity problem.

Every optimization agent contributes its KKT system with the convention

    grad f - sum_j grad h_j * lambda_j - sum_j grad g_j * mu_j  ⊥  x in [l, u]
    h_j(x) = 0   ⊥  lambda_j free
    g_j(x) <= 0  ⊥  mu_j <= 0

where ``max`` objectives are negated first and ``=G=`` rows flipped.  VI
agents contribute their function rows; a QVI is assembled on its own.

Columns are laid out agent by agent (primal columns, replicated implicit
copies, constraint multipliers, multipliers of defining rows, then
substitution columns), followed by a trailing block with the multipliers of
``visol`` constraints and the implicit variables.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .empinfo import AgentKind, validate_ownership
from .errors import (AmbiguousReplication, AssemblyError, DomainError, ImplicitNotSquare,
                     UnmatchedParameterVariable)
from .model import Kind, Relation, normalize

__all__ = [
    "Column", "MCPInstance", "ModelStats", "EquilibriumSolution", "assemble_mcp",
    "agent_kkt", "model_stats", "block_density", "extract_solution",
]

INF = float("inf")


@dataclass(frozen=True)
class Column:
    label: str
    agent: int | None   # 1-based agent index; None for the trailing block
    symbol: str         # model variable or equation the column stems from
    role: str           # x, y, lambda, mu, Lambda


@dataclass(frozen=True, eq=False)
class MCPInstance:
    rows: tuple          # Expression per column, over column indices
    lower: np.ndarray
    upper: np.ndarray
    init: np.ndarray
    columns: tuple       # Column per index
    values: dict = field(default_factory=dict)   # model scalar name -> Expression over columns
    strategy: str | None = None
    owners: dict = field(default_factory=dict)   # visol column label -> 1-based owner indices

    @property
    def size(self):
        return len(self.rows)

    @property
    def labels(self):
        return tuple(c.label for c in self.columns)

    def index(self, label):
        for k, c in enumerate(self.columns):
            if c.label == label:
                return k
        raise KeyError(label)


@dataclass(frozen=True)
class ModelStats:
    size: int
    nnz: int

    @property
    def density(self):
        """Structural density as a fraction of size**2."""
        return self.nnz / self.size ** 2 if self.size else 0.0

    @property
    def percent(self):
        return 100.0 * self.density


@dataclass(frozen=True)
class EquilibriumSolution:
    variables: dict     # scalar model variable name -> value
    multipliers: dict   # multiplier label -> value
    columns: dict       # column label -> value


def _body(m, eid):
    return normalize(m.instance(eid))


def _function_row(m, eid):
    # VI functions pair with their variable through lhs - rhs, whatever the relation
    inst = m.instance(eid)
    return ex.sub(inst.lhs, inst.rhs)


def _is_mu(kind):
    return kind is Kind.LE0


class _Builder:
    def __init__(self, report, m, strategy):
        self.m = m
        self.report = report
        self.spec = report.spec
        self.strategy = strategy
        self.next_sym = m.num_variables
        self.cols = []           # [sym, Column, lo, up, init]
        self.rows = {}           # sym -> Expression over symbols
        self.names = {}          # sym -> label (display name)

        self.implicit_of = report.implicit_of
        self.blocks = self.spec.implicits
        self.obj_sub = self._objective_substitution()

    # -- helpers

    def new_sym(self):
        s = self.next_sym
        self.next_sym += 1
        return s

    def add_col(self, sym, label, agent, symbol, role, lo, up, init):
        self.cols.append([sym, Column(label, agent, symbol, role), lo, up, init])
        self.names[sym] = label

    def pre(self, e):
        return ex.substitute(e, self.obj_sub) if self.obj_sub else e

    def _objective_substitution(self):
        sub = {}
        for agent, f in zip(self.spec.agents, self.report.objectives):
            if agent.is_optimization and agent.objective not in self.implicit_of:
                sub[agent.objective] = f
        for _ in range(len(sub)):
            changed = False
            for o, f in sub.items():
                if not sub.keys().isdisjoint(f.free_variables()):
                    sub[o] = ex.substitute(f, sub)
                    changed = True
            if not changed:
                break
        else:
            if any(not sub.keys().isdisjoint(f.free_variables()) for f in sub.values()):
                raise AssemblyError("objective variables are defined in terms of each other cyclically")
        return sub

    def block_owners(self):
        owners = {}
        for a, agent in enumerate(self.spec.agents):
            if agent.synthetic:
                continue
            touched = set()
            if agent.is_optimization:
                for v in agent.variables + (agent.objective,):
                    if v in self.implicit_of:
                        touched.add(self.implicit_of[v])
            for k in sorted(touched):
                owners.setdefault(k, []).append(a)
        return owners

    def explicit_form(self, k):
        """Map y -> h(x) if every defining row reads ``y = h(x)``, else None."""
        decl = self.blocks[k]
        ys = set(decl.variables)
        result = {}
        for e in decl.equations:
            inst = self.m.instance(e)
            found = None
            for mine, other in ((inst.lhs, inst.rhs), (inst.rhs, inst.lhs)):
                if (isinstance(mine, ex.Var) and mine.index in ys
                        and ys.isdisjoint(other.free_variables())):
                    found = (mine.index, self.pre(other))
                    break
            if found is None or found[0] in result:
                return None
            result[found[0]] = found[1]
        return result

    # -- layout

    def build(self):
        m, spec = self.m, self.spec
        owners = self.block_owners()
        self.owners = owners
        replicate = {k for k, o in owners.items() if self.strategy == "Replication" and len(o) >= 2}
        self.replicated_vars = {v for k in replicate for v in self.blocks[k].variables}
        self.explicit = {}
        if self.strategy == "Substitution":
            for k in owners:
                self.explicit[k] = self.explicit_form(k)

        visol_sym = {e: self.new_sym() for e in sorted(spec.visol)}
        self.visol_sym = visol_sym
        agent_plans = []
        for a, agent in enumerate(spec.agents):
            agent_plans.append(self.layout_agent(a, agent, owners, replicate))

        # trailing block
        for e in sorted(spec.visol):
            kind = _body(m, e)[1]
            self.add_col(visol_sym[e], f"{'mu' if _is_mu(kind) else 'lambda'}[{m.eq_names[e]}]", None,
                         m.eq_names[e], "mu" if _is_mu(kind) else "lambda",
                         -INF, 0.0 if _is_mu(kind) else INF, 0.0)
            self.rows[visol_sym[e]] = self.shared_row(e)
        trailing_blocks = [k for k in sorted(owners)
                           if not (self.strategy == "Replication")]
        for k in trailing_blocks:
            decl = self.blocks[k]
            for y, h in zip(decl.variables, decl.equations):
                self.add_col(y, m.var_names[y], None, m.var_names[y], "y", -INF, INF, m.level[y])
                self.rows[y] = self.guard(self.pre(_body(m, h)[0]), None)

        for plan in agent_plans:
            plan()
        return self.finish()

    def guard(self, e, agent):
        """Reject references to replicated variables outside their owners."""
        bad = self.replicated_vars.intersection(e.free_variables())
        if bad:
            v = min(bad)
            where = f"agent {agent + 1}" if agent is not None else "a shared row"
            raise AmbiguousReplication(
                f"{self.m.var_names[v]} is replicated per owner but referenced by {where}")
        return e

    def shared_row(self, e):
        return self.guard(self.pre(_body(self.m, e)[0]), None)

    def layout_agent(self, a, agent, owners, replicate):
        m = self.m
        tag = f"@{a + 1}"
        if not agent.is_optimization:
            return self.layout_vi(a, agent)

        implicit_of = self.implicit_of
        decisions = [v for v in agent.variables if v not in implicit_of]
        owned_blocks = sorted(k for k, o in owners.items() if a in o)
        for v in decisions:
            self.add_col(v, m.var_names[v], a + 1, m.var_names[v], "x", m.lower[v], m.upper[v], m.level[v])

        # replicated copies (or the variable itself when owned by one agent)
        local = {}
        for k in owned_blocks:
            if self.strategy != "Replication":
                continue
            for y in self.blocks[k].variables:
                if k in replicate:
                    s = self.new_sym()
                    local[y] = ex.Var(s, m.var_names[y] + tag)
                    self.add_col(s, m.var_names[y] + tag, a + 1, m.var_names[y], "y", -INF, INF, m.level[y])
                else:
                    self.add_col(y, m.var_names[y], a + 1, m.var_names[y], "y", -INF, INF, m.level[y])

        # constraint multipliers
        obj_eq = self.report.objective_equations[a]
        cons = []   # (body, multiplier sym)
        for e in agent.equations:
            if e == obj_eq:
                continue
            body, kind = _body(m, e)
            body = self.pre(body)
            if e in self.visol_sym:
                if local and not set(local).isdisjoint(body.free_variables()):
                    raise AmbiguousReplication(
                        f"visol constraint {m.eq_names[e]} references a replicated variable")
                cons.append((body, self.visol_sym[e]))
                continue
            s = self.new_sym()
            mu = _is_mu(kind)
            label = f"{'mu' if mu else 'lambda'}[{m.eq_names[e]}{tag}]"
            self.add_col(s, label, a + 1, m.eq_names[e], "mu" if mu else "lambda",
                         -INF, 0.0 if mu else INF, 0.0)
            cons.append((body, s))
            self.rows[s] = None   # filled once the agent's rows are built

        # defining-row multipliers (Replication and Switching)
        h_cons = []
        if self.strategy in ("Replication", "Switching"):
            for k in owned_blocks:
                for h in self.blocks[k].equations:
                    s = self.new_sym()
                    self.add_col(s, f"lambda[{m.eq_names[h]}{tag}]", a + 1, m.eq_names[h], "lambda",
                                 -INF, INF, 0.0)
                    h_cons.append((self.pre(_body(m, h)[0]), s, k))

        # substitution columns
        lam = {}
        if self.strategy == "Substitution":
            for k in owned_blocks:
                if self.explicit.get(k) is not None:
                    continue
                for x in decisions:
                    for y in self.blocks[k].variables:
                        s = self.new_sym()
                        lam[(x, y)] = s
                        self.add_col(s, f"Lambda[{m.var_names[x]},{m.var_names[y]}{tag}]", a + 1,
                                     m.var_names[y], "Lambda", -INF, INF, 0.0)

        def rows():
            f = self.pre(self.report.objectives[a])
            if agent.kind is AgentKind.MAX:
                f = ex.neg(f)
            f = self.localize(f, local, a)
            lcons = [(self.localize(b, local, a), s) for b, s in cons]
            lh = [(ex.substitute(b, local), s, k) for b, s, k in h_cons]
            for b, s in lcons:
                if s not in self.visol_sym.values():
                    self.rows[s] = b
            terms = [(f, None)] + lcons + [(b, s) for b, s, _ in lh]

            def grad(v):
                parts = []
                for e, s in terms:
                    if v not in e.free_variables():
                        continue
                    d = ex.differentiate(e, v)
                    parts.append(d if s is None else ex.neg(ex.mul(d, self.var(s))))
                return ex.make_sum(parts)

            sub_blocks = [k for k in owned_blocks if self.strategy == "Substitution"]
            for x in decisions:
                row = grad(x)
                for k in sub_blocks:
                    decl = self.blocks[k]
                    h = self.explicit.get(k)
                    for y in decl.variables:
                        gy = grad(y)
                        if gy is ex.ZERO:
                            continue
                        if h is not None:
                            dh = ex.differentiate(h[y], x)
                            row = ex.add(row, ex.mul(dh, gy))
                        else:
                            row = ex.sub(row, ex.mul(self.var(lam[(x, y)]), gy))
                self.rows[x] = row
            if self.strategy == "Substitution":
                for k in sub_blocks:
                    if self.explicit.get(k) is not None:
                        continue
                    decl = self.blocks[k]
                    hs = [self.pre(_body(m, h)[0]) for h in decl.equations]
                    for x in decisions:
                        for kk, hk in enumerate(hs):
                            parts = [ex.mul(self.var(lam[(x, yj)]), ex.differentiate(hk, yj))
                                     for yj in decl.variables]
                            row = ex.sub(ex.make_sum(parts), ex.differentiate(hk, x))
                            self.rows[lam[(x, decl.variables[kk])]] = row
                return
            # y-stationarity and defining rows
            for k in owned_blocks:
                decl = self.blocks[k]
                hk_rows = [(b, s) for b, s, kk in lh if kk == k]
                for y, (hb, hs) in zip(decl.variables, hk_rows):
                    ysym = local[y].index if y in local else y
                    gy = grad(ysym)
                    if self.strategy == "Switching":
                        self.rows[hs] = gy
                    else:
                        self.rows[ysym] = gy
                        self.rows[hs] = hb
        return rows

    def localize(self, e, local, a):
        if local:
            e = ex.substitute(e, local)
        return self.guard(e, a)

    def var(self, sym):
        return ex.Var(sym, self.names.get(sym, f"s{sym}"))

    def layout_vi(self, a, agent):
        m = self.m
        tag = f"@{a + 1}"
        prim = list(agent.preceding) + [v for _, v in agent.pairs]
        funcs = [None] * len(agent.preceding) + [f for f, _ in agent.pairs]
        for v in prim:
            self.add_col(v, m.var_names[v], a + 1, m.var_names[v], "x" if not agent.synthetic else "y",
                         m.lower[v], m.upper[v], m.level[v])
        cons = []
        for e in agent.constraints:
            body, kind = _body(m, e)
            body = self.pre(body)
            if e in self.visol_sym:
                cons.append((body, self.visol_sym[e]))
                continue
            s = self.new_sym()
            mu = _is_mu(kind)
            self.add_col(s, f"{'mu' if mu else 'lambda'}[{m.eq_names[e]}{tag}]", a + 1, m.eq_names[e],
                         "mu" if mu else "lambda", -INF, 0.0 if mu else INF, 0.0)
            cons.append((body, s))

        def rows():
            for b, s in cons:
                self.guard(b, a)
                if s not in self.visol_sym.values():
                    self.rows[s] = b
            for v, f in zip(prim, funcs):
                if f is None:
                    row = ex.ZERO
                elif agent.synthetic:
                    row = self.pre(_body(m, f)[0])
                else:
                    row = self.pre(_function_row(m, f))
                parts = [row]
                for b, s in cons:
                    if v in b.free_variables():
                        parts.append(ex.neg(ex.mul(ex.differentiate(b, v), self.var(s))))
                self.rows[v] = self.guard(ex.make_sum(parts), a)
        return rows

    def finish(self):
        m = self.m
        index = {c[0]: k for k, c in enumerate(self.cols)}
        mapping = {sym: ex.Var(k, c[1].label) for k, c in enumerate(self.cols) for sym in (c[0],)}
        rows = []
        allowed = set(index)
        for sym, col, *_ in self.cols:
            row = self.rows.get(sym)
            if row is None:
                raise AssemblyError(f"no row assembled for column {col.label}")
            stray = row.free_variables() - allowed
            if stray:
                s = min(stray)
                name = m.var_names[s] if s < m.num_variables else f"s{s}"
                raise AssemblyError(f"row of {col.label} references {name}, which is not a column")
            rows.append(ex.substitute(row, mapping))
        values = {}
        for v in range(m.num_variables):
            name = m.var_names[v]
            if v in index:
                values[name] = mapping[v]
            elif v in self.obj_sub:
                f = self.obj_sub[v]
                if f.free_variables() <= allowed:
                    values[name] = ex.substitute(f, mapping)
            elif v in self.replicated_vars:
                copy = next(c for c in self.cols if c[1].symbol == name and c[1].role == "y")
                values[name] = mapping[copy[0]]
        return MCPInstance(
            tuple(rows),
            np.array([c[2] for c in self.cols], dtype=float),
            np.array([c[3] for c in self.cols], dtype=float),
            np.array([c[4] for c in self.cols], dtype=float),
            tuple(c[1] for c in self.cols),
            values,
            self.strategy,
            {self.names[s]: tuple(a + 1 for a in self.report.equation_owners.get(e, ()))
             for e, s in self.visol_sym.items()},
        )


def _assemble_qvi(report, m):
    q = report.spec.qvi
    interest = [e.variable for e in q.entries]
    match = {e.parameter: ex.Var(e.variable, m.var_names[e.variable])
             for e in q.entries if e.parameter is not None}
    lower, upper, init, cols, rows_sym = [], [], [], [], []
    next_sym = m.num_variables
    for e in q.entries:
        y = e.variable
        lo, up = m.lower[y], m.upper[y]
        if e.parameter is not None:
            lo, up = max(lo, m.lower[e.parameter]), min(up, m.upper[e.parameter])
            if lo > up:
                raise AssemblyError(f"bounds of {m.var_names[y]} and {m.var_names[e.parameter]} do not intersect")
        lower.append(lo)
        upper.append(up)
        init.append(min(max(m.level[y], lo), up))
        cols.append(Column(m.var_names[y], 1, m.var_names[y], "x"))
    cons = []
    for c in q.constraints:
        body, kind = _body(m, c)
        mu = _is_mu(kind)
        s = next_sym
        next_sym += 1
        cons.append((body, s, Column(f"{'mu' if mu else 'lambda'}[{m.eq_names[c]}]", 1, m.eq_names[c],
                                     "mu" if mu else "lambda")))
        lower.append(-INF)
        upper.append(0.0 if mu else INF)
        init.append(0.0)
    syms = interest + [s for _, s, _ in cons]
    allowed = set(syms)
    for e in q.entries:
        row = _function_row(m, e.function) if e.function is not None else ex.ZERO
        parts = [row]
        for body, s, col in cons:
            if e.variable in body.free_variables():
                parts.append(ex.neg(ex.mul(ex.differentiate(body, e.variable), ex.Var(s, col.label))))
        rows_sym.append(ex.substitute(ex.make_sum(parts), match))
    for body, s, col in cons:
        rows_sym.append(ex.substitute(body, match))
        cols.append(col)
    mapping = {}
    for k, s in enumerate(syms):
        mapping[s] = ex.Var(k, cols[k].label)
    rows = []
    for r in rows_sym:
        stray = r.free_variables() - allowed
        if stray:
            raise UnmatchedParameterVariable(
                f"{m.var_names[min(stray)]} is neither a variable of interest nor a matched parameter")
        rows.append(ex.substitute(r, mapping))
    values = {m.var_names[y]: mapping[y] for y in interest}
    for x, yv in match.items():
        values[m.var_names[x]] = mapping[yv.index]
    return MCPInstance(tuple(rows), np.array(lower, float), np.array(upper, float),
                       np.array(init, float), tuple(cols), values, None)


def assemble_mcp(spec_or_report, m, strategy=None):
    """Assemble the MCP for a spec (validated on the fly) or an OwnershipReport.

    ``strategy`` overrides the ImplVarModel option from empinfo.
    """
    report = spec_or_report
    if not hasattr(report, "equation_class"):
        report = validate_ownership(spec_or_report, m)
    if report.spec.qvi is not None:
        return _assemble_qvi(report, m)
    for decl in report.spec.implicits:
        if len(decl.variables) != len(decl.equations):
            raise ImplicitNotSquare("implicit block is not square")
    strategy = strategy or report.spec.strategy
    if strategy not in ("Replication", "Switching", "Substitution"):
        raise ValueError(f"unknown strategy {strategy!r}")
    return _Builder(report, m, strategy).build()


def agent_kkt(spec_or_report, m, agent, strategy=None):
    """Columns and rows contributed by one agent (0-based index)."""
    mcp = assemble_mcp(spec_or_report, m, strategy)
    picked = [k for k, c in enumerate(mcp.columns) if c.agent == agent + 1]
    return [(mcp.columns[k], mcp.rows[k]) for k in picked]


def model_stats(mcp):
    nnz = sum(len(r.free_variables()) for r in mcp.rows)
    return ModelStats(mcp.size, nnz)


def block_density(mcp, columns):
    """Structural density of the square sub-block on the given column indices."""
    cols = set(columns)
    if not cols:
        return 0.0
    hits = sum(len(mcp.rows[k].free_variables() & cols) for k in cols)
    return hits / len(cols) ** 2


def extract_solution(mcp, z):
    """Map an MCP point back to model variables and per-agent multipliers.

    A ``visol`` multiplier is reported once under its own label and once
    per owning agent, as ``mu[cons(1)@k]``.
    """
    z = np.asarray(z, dtype=float)
    variables = {}
    names = list(mcp.values)
    if names:
        try:
            vals = ex.Program([mcp.values[n] for n in names])(z)
        except DomainError:
            # failed solves still get a report; undefined values become nan
            vals = []
            for n in names:
                try:
                    vals.append(ex.evaluate(mcp.values[n], z))
                except DomainError:
                    vals.append(math.nan)
        variables = dict(zip(names, (float(v) for v in vals)))
    columns = {c.label: float(v) for c, v in zip(mcp.columns, z)}
    multipliers = {}
    for c, v in zip(mcp.columns, z):
        if c.role in ("mu", "lambda"):
            multipliers[c.label] = float(v)
            for a in mcp.owners.get(c.label, ()):
                multipliers[f"{c.label[:-1]}@{a}]"] = float(v)
        elif c.role == "y" and c.label not in variables:
            variables[c.label] = float(v)
    return EquilibriumSolution(variables, multipliers, columns)
