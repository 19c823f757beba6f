"""Independent reference computations used by the tests.

Nothing here goes through the assembly or Newton code paths.
"""

import itertools
import math

import numpy as np

from equilib import expr as ex


def lcp_enumerate(M, q):
    """Solve the LCP 0 <= z _|_ Mz + q >= 0 by trying every active set."""
    n = len(q)
    M = np.asarray(M, float)
    q = np.asarray(q, float)
    for pattern in itertools.product((False, True), repeat=n):
        basic = [i for i in range(n) if pattern[i]]
        z = np.zeros(n)
        if basic:
            try:
                z[basic] = np.linalg.solve(M[np.ix_(basic, basic)], -q[basic])
            except np.linalg.LinAlgError:
                continue
        w = M @ z + q
        if np.all(z >= -1e-12) and np.all(w >= -1e-10):
            return np.maximum(z, 0.0)
    raise ValueError("no complementary solution")


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, float)
    g = np.empty_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_expression(rng, nvars, depth=4):
    """A random smooth expression defined on all of R^nvars.

    Every operator is guarded so the result is finite everywhere: logs and
    square roots act on 1 + u^2, divisors are 1 + u^2, exponentials take
    a bounded argument.
    """
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            k = int(rng.integers(nvars))
            return ex.Var(k, f"v{k}")
        return ex.Const(round(float(rng.uniform(-3, 3)), 2))
    a = random_expression(rng, nvars, depth - 1)
    op = int(rng.integers(9))
    if op < 4:
        b = random_expression(rng, nvars, depth - 1)
        return [ex.add, ex.sub, ex.mul, lambda u, v: ex.div(u, ex.add(ex.ONE, ex.sqr(v)))][op](a, b)
    if op == 4:
        return ex.sqr(a)
    if op == 5:
        return ex.sqrt(ex.add(ex.ONE, ex.sqr(a)))
    if op == 6:
        return ex.log(ex.add(ex.ONE, ex.sqr(a)))
    if op == 7:
        return ex.exp(ex.div(a, ex.add(ex.ONE, ex.sqr(a))))
    return ex.power(ex.add(ex.Const(2.0), ex.sqr(a)), ex.Const(round(float(rng.uniform(-1.5, 2.5)), 2)))


def python_value(e, x):
    """Evaluate an expression tree by plain recursion (no compilation)."""
    t = type(e).__name__
    if t == "Const":
        return e.value
    if t == "Var":
        return float(x[e.index])
    vals = [python_value(a, x) for a in e.args]
    if t == "Sum":
        return math.fsum(vals)
    table = {
        "Add": lambda a, b: a + b, "Sub": lambda a, b: a - b, "Mul": lambda a, b: a * b,
        "Div": lambda a, b: a / b, "Pow": math.pow, "Neg": lambda a: -a,
        "Sqr": lambda a: a * a, "Sqrt": math.sqrt, "Log": math.log, "Exp": math.exp,
    }
    return table[t](*vals)


def switching_oligopoly_nnz(n):
    """Hand count of Jacobian entries for the shared-variable oligopoly.

    Each q row touches q itself, z and its owner's defining-row multiplier
    (3n).  The q0 row touches the demand multiplier (1).  Each of the five
    owner rows for z touches its multiplier, the demand multiplier, z and the
    owner's n/5 plants (15 + n).  The demand row touches q0 and z (2), and
    the defining row of z touches z and every q (n + 1).
    """
    return 3 * n + 1 + (15 + n) + 2 + (n + 1)


def cobb_douglas_demand(s, p, b):
    s, p, b = (np.asarray(v, float) for v in (s, p, b))
    return s * float(p @ b) / p
