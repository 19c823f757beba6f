"""Command-line front end: ``equilib solve | stats | check``."""

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .empinfo import STRATEGIES, parse_empinfo, validate_ownership
from .errors import EquilibError, MismatchedExpectation, ParseError
from .model import parse_model
from .options import Options, parse_options
from .reformulate import assemble_mcp, extract_solution, model_stats
from .solver import SolverOptions, Status, solve_mcp

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2


@dataclass
class Problem:
    model: object
    report: object
    options: Options

    def solver_options(self):
        kw = {}
        if self.options.tolerance is not None:
            kw["tolerance"] = self.options.tolerance
        if self.options.max_iterations is not None:
            kw["max_iterations"] = self.options.max_iterations
        return SolverOptions(**kw)


@dataclass
class Result:
    problem: Problem
    mcp: object
    solution: object      # solver Solution
    values: object        # EquilibriumSolution


def load_problem(model_text, empinfo_text, options_text=""):
    """Parse and validate a (model, empinfo, options) triple."""
    opts = parse_options(options_text or "")
    m = parse_model(model_text)
    spec = parse_empinfo(empinfo_text, m).with_options(opts.shared_equ, opts.strategy)
    return Problem(m, validate_ownership(spec, m), opts)


def solve_problem(problem, strategy=None):
    mcp = assemble_mcp(problem.report, problem.model, strategy)
    sol = solve_mcp(mcp, problem.solver_options())
    return Result(problem, mcp, sol, extract_solution(mcp, sol.z))


def solve_texts(model_text, empinfo_text, options_text="", strategy=None):
    return solve_problem(load_problem(model_text, empinfo_text, options_text), strategy)


def _fmt(v):
    return f"{v:.12g}"


def machine_report(result):
    """``key = value`` lines in column order, then derived variables."""
    sol = result.solution
    lines = [f"status = {sol.status.value}", f"iterations = {sol.iterations}",
             f"residual = {sol.residual:.3e}"]
    seen = set()
    for label, v in result.values.columns.items():
        lines.append(f"{label} = {_fmt(v)}")
        seen.add(label)
    for name, v in result.values.variables.items():
        if name not in seen:
            lines.append(f"{name} = {_fmt(v)}")
            seen.add(name)
    for name, v in result.values.multipliers.items():
        if name not in seen:
            lines.append(f"{name} = {_fmt(v)}")
            seen.add(name)
    return "\n".join(lines) + "\n"


def human_report(result):
    sol, mcp, vals = result.solution, result.mcp, result.values
    out = [f"status      {sol.status.value}", f"iterations  {sol.iterations}",
           f"residual    {sol.residual:.3e}", f"columns     {mcp.size}"]
    if sol.message:
        out.append(f"message     {sol.message}")
    agents = sorted({c.agent for c in mcp.columns if c.agent is not None})
    spec = result.problem.report.spec
    objectives = {}
    m = result.problem.model
    for a, agent in enumerate(spec.agents):
        if agent.is_optimization:
            objectives[a + 1] = m.var_names[agent.objective]
    for a in agents:
        kind = spec.agents[a - 1].kind.value if a - 1 < len(spec.agents) else "?"
        out.append(f"\nagent {a} ({kind})")
        if a in objectives and objectives[a] in vals.variables:
            out.append(f"  {objectives[a]:<24} {_fmt(vals.variables[objectives[a]])}")
        for c, v in zip(mcp.columns, vals.columns.values()):
            if c.agent == a:
                out.append(f"  {c.label:<24} {_fmt(v)}")
    trailing = [(c, v) for c, v in zip(mcp.columns, vals.columns.values()) if c.agent is None]
    if trailing:
        out.append("\nshared")
        for c, v in trailing:
            out.append(f"  {c.label:<24} {_fmt(v)}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ expectations

@dataclass(frozen=True)
class Expectation:
    entries: tuple          # (name, value, tol)
    error: str | None = None


def parse_expected(text):
    default_tol = 1e-6
    raw, error = [], None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition("=")
        if not sep:
            raise ParseError("expected 'name = value'", lineno, 1)
        key, rest = key.strip(), rest.strip()
        if key == "default_tol":
            default_tol = float(rest)
            continue
        if key == "error":
            error = rest
            continue
        parts = rest.split()
        tol = None
        try:
            value = float(parts[0])
            for p in parts[1:]:
                k, _, v = p.partition("=")
                if k != "tol":
                    raise ValueError(p)
                tol = float(v)
        except (ValueError, IndexError):
            raise ParseError(f"bad expectation {line!r}", lineno, 1) from None
        raw.append((key, value, tol))
    return Expectation(tuple((k, v, default_tol if t is None else t) for k, v, t in raw), error)


def compare(result, expectation):
    """Return the list of failing entries (empty when everything matches)."""
    failures = []
    if result.solution.status is not Status.SOLVED:
        failures.append(f"status {result.solution.status.value}")
    pool = {**result.values.columns, **result.values.variables, **result.values.multipliers}
    for name, value, tol in expectation.entries:
        got = pool.get(name)
        if got is None:
            failures.append(f"{name}: no such variable or multiplier")
        elif not abs(got - value) <= tol:
            failures.append(f"{name}: expected {value} got {_fmt(got)} (tol {tol:g})")
    return failures


def check_texts(model_text, empinfo_text, expected_text, options_text=""):
    """Solve and compare; raise MismatchedExpectation on failure."""
    exp = parse_expected(expected_text)
    try:
        result = solve_texts(model_text, empinfo_text, options_text)
    except EquilibError as err:
        if exp.error is not None and type(err).__name__ == exp.error:
            return None
        if exp.error is not None:
            raise MismatchedExpectation([f"expected {exp.error}, got {type(err).__name__}: {err}"]) from err
        raise
    if exp.error is not None:
        raise MismatchedExpectation([f"expected {exp.error}, but the pipeline succeeded"])
    failures = compare(result, exp)
    if failures:
        raise MismatchedExpectation(failures)
    return result


# -------------------------------------------------------------------- main

def _read(path):
    return Path(path).read_text() if path else ""


def _cmd_solve(args):
    result = solve_texts(_read(args.model), _read(args.empinfo), _read(args.opt), args.strategy)
    sys.stdout.write(human_report(result))
    if args.out:
        Path(args.out).write_text(machine_report(result))
    return EXIT_OK if result.solution.status is Status.SOLVED else EXIT_ERROR


def _cmd_stats(args):
    problem = load_problem(_read(args.model), _read(args.empinfo), _read(args.opt))
    strategies = STRATEGIES if args.all_strategies else (problem.report.spec.strategy,)
    print(f"{'strategy':<14}{'size':>8}{'nnz':>12}{'density%':>12}")
    for s in strategies:
        try:
            st = model_stats(assemble_mcp(problem.report, problem.model, s))
        except EquilibError as err:
            print(f"{s:<14}{type(err).__name__}: {err}")
            continue
        print(f"{s:<14}{st.size:>8}{st.nnz:>12}{st.percent:>12.4f}")
    return EXIT_OK


def _cmd_check(args):
    try:
        result = check_texts(_read(args.model), _read(args.empinfo), _read(args.expected), _read(args.opt))
    except MismatchedExpectation as err:
        for f in err.failures:
            print(f"FAIL {f}")
        return EXIT_MISMATCH
    if result is None:
        print("PASS (expected error raised)")
    else:
        n = len(parse_expected(_read(args.expected)).entries)
        print(f"PASS {n} entries")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="equilib", description="Equilibrium models to MCPs, and their solution.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="solve a model and print per-agent results")
    s.add_argument("model")
    s.add_argument("empinfo")
    s.add_argument("--opt")
    s.add_argument("--strategy", choices=STRATEGIES, help="override ImplVarModel")
    s.add_argument("--out", help="write machine-readable key = value lines here")
    s.set_defaults(func=_cmd_solve)
    s = sub.add_parser("stats", help="size and structural density of the assembled MCP")
    s.add_argument("model")
    s.add_argument("empinfo")
    s.add_argument("--opt")
    s.add_argument("--all-strategies", action="store_true")
    s.set_defaults(func=_cmd_stats)
    s = sub.add_parser("check", help="solve and compare against an expected-solution file")
    s.add_argument("model")
    s.add_argument("empinfo")
    s.add_argument("expected")
    s.add_argument("--opt")
    s.set_defaults(func=_cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EquilibError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
