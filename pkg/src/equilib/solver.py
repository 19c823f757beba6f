"""Semismooth Newton method for box-constrained MCPs.

The complementarity conditions are recast as the square nonsmooth system
Phi(z) = 0 with the Fischer-Burmeister function

    phi(a, b) = a + b - sqrt(a**2 + b**2)

composed per column according to its bounds.  Each step solves
``H d = -Phi`` with an element ``H = diag(da) + diag(db) J_F`` of the
generalized Jacobian, followed by Armijo backtracking on ``0.5*|Phi|**2``.
Convergence is judged on the natural residual ``z - mid(l, z - F, u)``.
"""

import enum
import math
import warnings
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import expr as ex
from .errors import DomainError

__all__ = [
    "SolverOptions", "Status", "Solution", "natural_residual", "fb_residual",
    "jacobian", "solve_mcp", "fischer_burmeister",
]

_KINK = 1.0 - 1.0 / math.sqrt(2.0)
_DENSE_LIMIT = 500


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 200
    contraction: float = 0.5
    min_step: float = 1e-12
    perturbation: float = 1e-8
    # Newton steps are scaled down to |d|_inf <= max_step * max(1, |z|_inf)
    max_step: float = 1.0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


class Status(str, enum.Enum):
    SOLVED = "Solved"
    ITERATION_LIMIT = "IterationLimit"
    SINGULAR = "Singular"
    DOMAIN_FAILURE = "DomainFailure"


@dataclass(frozen=True, eq=False)
class Solution:
    z: np.ndarray
    status: Status
    iterations: int
    residual: float
    message: str = ""

    @property
    def solved(self):
        return self.status is Status.SOLVED


class _Compiled:
    def __init__(self, mcp):
        self.n = mcp.size
        self.F = ex.Program(mcp.rows)
        rows, cols, exprs = [], [], []
        for i, r in enumerate(mcp.rows):
            for j in sorted(r.free_variables()):
                rows.append(i)
                cols.append(j)
                exprs.append(ex.differentiate(r, j))
        self.rows = np.array(rows, dtype=np.int64)
        self.cols = np.array(cols, dtype=np.int64)
        self.J = ex.Program(exprs) if exprs else None
        lo, up = np.asarray(mcp.lower, float), np.asarray(mcp.upper, float)
        self.lower, self.upper = lo, up
        fin_lo, fin_up = np.isfinite(lo), np.isfinite(up)
        self.fixed = fin_lo & fin_up & (lo == up)
        self.boxed = fin_lo & fin_up & ~self.fixed
        self.lower_only = fin_lo & ~fin_up
        self.upper_only = fin_up & ~fin_lo
        self.free = ~fin_lo & ~fin_up

    def jac_values(self, z):
        if self.J is None:
            return np.zeros(0)
        return self.J(z)

    def jac(self, z):
        return scipy.sparse.csr_matrix((self.jac_values(z), (self.rows, self.cols)),
                                       shape=(self.n, self.n))


_CACHE = weakref.WeakKeyDictionary()


def _compiled(mcp):
    c = _CACHE.get(mcp)
    if c is None:
        c = _Compiled(mcp)
        _CACHE[mcp] = c
    return c


def fischer_burmeister(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a + b - np.hypot(a, b)


def _phi_parts(a, b):
    r = np.hypot(a, b)
    safe = np.where(r > 0, r, 1.0)
    da = np.where(r > 0, 1.0 - a / safe, _KINK)
    db = np.where(r > 0, 1.0 - b / safe, _KINK)
    return a + b - r, da, db


def natural_residual(mcp, z):
    """Componentwise ``z - mid(l, z - F(z), u)``; zero exactly at solutions."""
    z = np.asarray(z, dtype=float)
    F = _compiled(mcp).F(z)
    return z - np.clip(z - F, mcp.lower, mcp.upper)


def _fb(c, z, F, with_derivative=False):
    n = c.n
    phi = np.empty(n)
    da = np.zeros(n)
    db = np.zeros(n)
    lo, up = c.lower, c.upper

    m = c.free
    phi[m] = F[m]
    db[m] = 1.0

    m = c.fixed
    phi[m] = z[m] - lo[m]
    da[m] = 1.0

    m = c.lower_only
    v, pa, pb = _phi_parts(z[m] - lo[m], F[m])
    phi[m], da[m], db[m] = v, pa, pb

    m = c.upper_only
    v, pa, pb = _phi_parts(up[m] - z[m], -F[m])
    phi[m], da[m], db[m] = -v, pa, pb

    m = c.boxed
    v, qa, qb = _phi_parts(up[m] - z[m], -F[m])
    psi = -v
    w, pa, pc = _phi_parts(z[m] - lo[m], psi)
    phi[m] = w
    da[m] = pa + pc * qa
    db[m] = pc * qb

    if with_derivative:
        return phi, da, db
    return phi


def fb_residual(mcp, z):
    """Mixed Fischer-Burmeister residual of ``mcp`` at ``z``."""
    z = np.asarray(z, dtype=float)
    c = _compiled(mcp)
    return _fb(c, z, c.F(z))


def jacobian(mcp, z, fb=False):
    """Sparse Jacobian of the rows at ``z`` (or of the FB residual when ``fb``).

    Structural zeros of the symbolic pattern are kept as explicit entries.
    """
    z = np.asarray(z, dtype=float)
    c = _compiled(mcp)
    J = c.jac(z)
    if not fb:
        return J
    _, da, db = _fb(c, z, c.F(z), with_derivative=True)
    return (scipy.sparse.diags(db) @ J + scipy.sparse.diags(da)).tocsr()


def _solve_linear(H, rhs, dense):
    if dense:
        A = H.toarray()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(A, check_finite=True)
        if np.any(np.abs(np.diag(lu[0])) < 1e-14 * max(1.0, np.abs(A).max())):
            raise np.linalg.LinAlgError("singular")
        return scipy.linalg.lu_solve(lu, rhs)
    lu = scipy.sparse.linalg.splu(H.tocsc())
    return lu.solve(rhs)


def solve_mcp(mcp, opts=None, z0=None):
    """Solve ``mcp`` from its initial point (or ``z0``), clamped into the box."""
    opts = opts or SolverOptions()
    c = _compiled(mcp)
    n = c.n
    lo, up = c.lower, c.upper
    z = np.clip(np.asarray(mcp.init if z0 is None else z0, dtype=float), lo, up)
    if n == 0:
        return Solution(z, Status.SOLVED, 0, 0.0)
    dense = n < _DENSE_LIMIT
    eye = scipy.sparse.identity(n, format="csr")

    def merit(point):
        try:
            F = c.F(point)
        except DomainError:
            return math.inf, None, None
        phi = _fb(c, point, F)
        return 0.5 * float(phi @ phi), phi, F

    def natres(point):
        try:
            F = c.F(point)
        except DomainError:
            return math.inf
        return float(np.max(np.abs(point - np.clip(point - F, lo, up))))

    try:
        F = c.F(z)
    except DomainError as err:
        return Solution(z, Status.DOMAIN_FAILURE, 0, math.inf, f"at the starting point: {err}")
    phi, da, db = _fb(c, z, F, with_derivative=True)
    theta = 0.5 * float(phi @ phi)

    res = math.inf
    for it in range(opts.max_iterations + 1):
        zc = np.clip(z, lo, up)
        res = natres(zc)
        if res <= opts.tolerance:
            return Solution(zc, Status.SOLVED, it, res)
        if it == opts.max_iterations:
            break
        try:
            J = c.jac(z)
        except DomainError as err:
            return Solution(z, Status.DOMAIN_FAILURE, it, res, str(err))
        H = (scipy.sparse.diags(db) @ J + scipy.sparse.diags(da)).tocsr()
        grad = H.T @ phi

        d = None
        delta = 0.0
        while True:
            try:
                A = H if delta == 0.0 else H + delta * eye
                d = _solve_linear(A, -phi, dense)
                if np.all(np.isfinite(d)):
                    break
            except (np.linalg.LinAlgError, RuntimeError, ValueError):
                pass
            d = None
            delta = opts.perturbation if delta == 0.0 else delta * 10.0
            if delta > 1e-2:
                break
        if d is None and not np.any(grad):
            return Solution(z, Status.SINGULAR, it, res, "Newton system singular after perturbation")
        if d is not None:
            # far from a solution the FB linearization can be wildly off in
            # directions the bound-active rows barely see
            limit = opts.max_step * max(1.0, float(np.max(np.abs(z))))
            size = float(np.max(np.abs(d)))
            if size > limit:
                d = d * (limit / size)

        slope = float(grad @ d) if d is not None else 0.0
        use_gradient = d is None or slope > -1e-10 * float(d @ d) ** 1.05
        accepted = False
        for attempt in ("newton", "gradient"):
            if attempt == "newton" and use_gradient:
                continue
            if attempt == "gradient":
                d = -grad
                slope = -float(grad @ grad)
                if slope == 0.0:
                    break
            t = 1.0
            while t >= opts.min_step:
                trial = z + t * d
                decrease = t * slope
                if attempt == "gradient":
                    trial = np.clip(trial, lo, up)
                    decrease = float(grad @ (trial - z))
                th, ph, Ft = merit(trial)
                if th < theta and th <= theta + 1e-4 * decrease:
                    accepted = True
                    break
                t *= opts.contraction
            if accepted:
                break
        if not accepted:
            if d is None:
                return Solution(z, Status.SINGULAR, it, res, "Newton system singular after perturbation")
            return Solution(zc, Status.ITERATION_LIMIT, it, res, "line search stalled")
        z = trial
        phi, da, db = _fb(c, z, Ft, with_derivative=True)
        theta = th
    zc = np.clip(z, lo, up)
    return Solution(zc, Status.ITERATION_LIMIT, opts.max_iterations, res,
                    "iteration limit reached")
