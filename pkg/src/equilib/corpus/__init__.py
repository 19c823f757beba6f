"""Worked examples as (model, empinfo, options, expected) file sets.

Each builder returns an :class:`Instance`; the committed copies under
``data/`` are exactly what the builders produce (see
``python -m equilib.corpus --write``).  Random data for the large oligopoly
comes from a fixed numpy seed.
"""

import argparse
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = ["Instance", "BUILDERS", "NAMES", "ERROR_NAMES", "build", "load", "write", "data_dir"]

FILES = {"model": "model.mdl", "empinfo": "empinfo.emp", "options": "options.opt",
         "expected": "expected.sol"}


@dataclass(frozen=True)
class Instance:
    name: str
    model: str
    empinfo: str
    options: str = ""
    expected: str = ""

    @property
    def expected_error(self):
        for line in self.expected.splitlines():
            key, _, value = line.partition("=")
            if key.strip() == "error":
                return value.strip()
        return None


def _entries(values):
    return ", ".join(f"[{','.join(map(str, k))}] {v!r}" for k, v in values)


def _lines(*parts):
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------- NEP / GNEP

OLIGOPOLY_DATA = """\
param c(I) = { [1] 10, [2] 8, [3] 6, [4] 4, [5] 2 };
param K(I) = { [1] 5, [2] 5, [3] 5, [4] 5, [5] 5 };
param beta(I) = { [1] 1.2, [2] 1.1, [3] 1.0, [4] 0.9, [5] 0.8 };"""


def nep_oligopoly():
    model = _lines(
        "# Five firms supplying one homogeneous good (Cournot oligopoly).",
        "set I = 1..5;",
        OLIGOPOLY_DATA,
        "var obj(I) free;",
        "var q(I) >= 0 init 10;",
        "equ objdef(i in I) : obj(i) =E= q(i)*5000^(1/1.1)*sum(j in I, q(j))^(-1/1.1)",
        "    - (c(i)*q(i) + beta(i)/(beta(i)+1)*K(i)^(-1/beta(i))*q(i)^((beta(i)+1)/beta(i)));",
    )
    empinfo = _lines("equilibrium", *(f"max obj({i}) q({i}) objdef({i})" for i in range(1, 6)))
    expected = _lines(
        "default_tol = 1e-3",
        "q(1) = 36.933", "q(2) = 41.818", "q(3) = 43.707", "q(4) = 42.659", "q(5) = 39.179",
    )
    return Instance("nep_oligopoly", model, empinfo, "", expected)


def gnep_outrata():
    model = _lines(
        "# Two players whose feasible sets depend on each other.",
        "set I = 1..2;",
        "var obj(I) free;",
        "var x(I) in [0, 11];",
        "equ defobj1 : obj(1) =E= sqr(x(1)) + 8/3*x(1)*x(2) - 100/3*x(1);",
        "equ defobj2 : obj(2) =E= sqr(x(2)) + 5/4*x(1)*x(2) - 22.5*x(2);",
        "equ cons1 : x(1) + x(2) =L= 15;",
        "equ cons2 : x(1) + x(2) =L= 20;",
    )
    empinfo = _lines("equilibrium", "min obj(1) x(1) defobj1 cons1", "min obj(2) x(2) defobj2 cons2")
    expected = _lines("default_tol = 1e-4", "x(1) = 10", "x(2) = 5")
    return Instance("gnep_outrata", model, empinfo, "", expected)


def qvi_outrata():
    model = _lines(
        "# The same equilibrium written as a quasi-variational inequality.",
        "set I = 1..2;",
        "param A(I, I) = { [1,1] 2, [1,2] 8/3, [2,1] 5/4, [2,2] 2 };",
        "param b(I) = { [1] 100/3, [2] 22.5 };",
        "param Cy(I, I) = { [1,1] 1, [2,2] 1 };",
        "param Cx(I, I) = { [1,2] 1, [2,1] 1 };",
        "param rhs(I) = { [1] 15, [2] 20 };",
        "var y(I) in [0, 11];",
        "var x(I) in [0, 11];",
        "equ F(i in I) : sum(j in I, A(i,j)*y(j)) - b(i) =N= 0;",
        "equ g(i in I) : sum(j in I, Cy(i,j)*y(j)) + sum(j in I, Cx(i,j)*x(j)) - rhs(i) =L= 0;",
    )
    empinfo = _lines("qvi F y x g")
    expected = _lines("default_tol = 1e-4", "y(1) = 10", "y(2) = 5")
    return Instance("qvi_outrata", model, empinfo, "", expected)


def mopec_mathiesen():
    model = _lines(
        "# One producer, one Cobb-Douglas consumer and a market for three goods.",
        "set I = 1..3;",
        "param ATmat(I) = { [1] 1, [2] -1, [3] -1 };",
        "param s(I) = { [1] 0.9, [2] 0.1, [3] 0 };",
        "param b(I) = { [1] 0, [2] 5, [3] 3 };",
        "var u free;",
        "var y >= 0;",
        "var x(I) >= 0 init 1;",
        "var p(I) >= 0;",
        "p.fx(2) = 1;   # numeraire",
        "equ mkt(i in I) : b(i) + ATmat(i)*y - x(i) =G= 0;",
        "equ profit : sum(i in I, -ATmat(i)*p(i)) =G= 0;",
        "equ udef : u =E= sum(i in I, s(i)*log(x(i)));",
        "equ budget : sum(i in I, p(i)*x(i)) =L= sum(i in I, p(i)*b(i));",
    )
    empinfo = _lines("equilibrium", "max u x udef budget", "vi mkt p profit y")
    expected = _lines(
        "default_tol = 1e-3",
        "y = 3", "x(1) = 3", "x(2) = 2", "x(3) = 0", "p(1) = 6", "p(2) = 1", "p(3) = 5",
    )
    return Instance("mopec_mathiesen", model, empinfo, "", expected)


# ----------------------------------------------------------- shared constraints

def tragedy_commons(n=5, visol=False):
    model = _lines(
        "# Players share a channel of capacity one.",
        f"set I = 1..{n};",
        "var obj(I) free;",
        "var x(I) in [0, 1];",
        "equ defobj(i in I) : obj(i) =E= x(i)*(1 - sum(j in I, x(j)));",
        "equ cap : sum(i in I, x(i)) =L= 1;",
    )
    head = ["equilibrium"] + (["visol cap"] if visol else [])
    empinfo = _lines(*head, *(f"max obj({i}) x({i}) defobj({i}) cap" for i in range(1, n + 1)))
    value = 1.0 / (n + 1)
    exp = ["default_tol = 1e-6"] + [f"x({i}) = {value!r}" for i in range(1, n + 1)]
    if visol:
        exp.append("mu[cap] = 0")
    exp += [f"mu[cap@{i}] = 0" for i in range(1, n + 1)]
    name = "tragedy_commons_visol" if visol else "tragedy_commons"
    return Instance(name, model, empinfo, "SharedEqu\n", _lines(*exp))


RIVER_MODEL = """\
# Three firms along a river with two shared pollution limits.
set I = 1..3;
set M = 1..2;
param K(M) = { [1] 100, [2] 100 };
param d1 = 3;
param d2 = 0.01;
param e(I) = { [1] 0.5, [2] 0.25, [3] 0.75 };
param c(M, I) = { [1,1] 0.1, [1,2] 0.12, [1,3] 0.15, [2,1] 0.01, [2,2] 0.05, [2,3] 0.01 };
param u(I, M) = { [1,1] 6.5, [1,2] 4.583, [2,1] 5.0, [2,2] 6.25, [3,1] 5.5, [3,2] 3.75 };
var obj(I) free;
var x(I) >= 0;
equ objdef(i in I) : obj(i) =E= (c(1,i) + c(2,i)*x(i))*x(i) - (d1 - d2*sum(j in I, x(j)))*x(i);
equ cons(m in M) : sum(i in I, u(i,m)*e(i)*x(i)) =L= K(m);
"""


def river_basin(visol=True):
    head = ["equilibrium"] + (["visol cons"] if visol else [])
    empinfo = _lines(*head, *(f"min obj({i}) x({i}) objdef({i}) cons" for i in range(1, 4)))
    if visol:
        exp = ["default_tol = 1e-3", "x(1) = 21.145", "x(2) = 16.028", "x(3) = 2.726",
               "mu[cons(1)] = -0.574", "mu[cons(2)] = 0"]
        exp += [f"mu[cons(1)@{i}] = -0.574" for i in range(1, 4)]
        name = "river_basin_visol"
    else:
        exp = ["default_tol = 1e-3", "x(1) = 0", "x(2) = 6.473", "x(3) = 22.281",
               "mu[cons(1)@1] = -0.804", "mu[cons(1)@2] = -1.504", "mu[cons(1)@3] = -0.459"]
        exp += [f"mu[cons(2)@{i}] = 0" for i in range(1, 4)]
        name = "river_basin_gnep"
    return Instance(name, RIVER_MODEL, empinfo, "SharedEqu\n", _lines(*exp))


# ------------------------------------------------------------- shared variables

def impl_bounds(b=10):
    model = _lines(
        "# Two agents share y = x(1) + x(2), which is kept inside [0, b].",
        f"param b = {b!r};",
        "set I = 1..2;",
        "var obj(I) free;",
        "var x(I) >= 0;",
        "var y free;",
        "equ deff(i in I) : obj(i) =E= x(i) - x(i)*(10 - 0.5*y);",
        "equ defH : y =E= sum(i in I, x(i));",
        "equ ylo : y =G= 0;",
        "equ yup : y =L= b;",
    )
    empinfo = _lines(
        "equilibrium",
        "implicit y defH",
        "visol ylo yup",
        "min obj(1) x(1) y deff(1) ylo yup",
        "min obj(2) x(2) y deff(2) ylo yup",
    )
    v = min(b, 12) / 2
    expected = _lines("default_tol = 1e-6", f"x(1) = {v!r}", f"x(2) = {v!r}")
    return Instance("impl_bounds", model, empinfo, "SharedEqu\n", expected)


def mixed_behavior(makers=0):
    """Oligopoly where firms 1..makers own the price (price-makers)."""
    model = _lines(
        "# Price-taking and price-making firms; z is the market price.",
        "set I = 1..5;",
        OLIGOPOLY_DATA,
        "var obj(I) free;",
        "var q(I) >= 0 init 10;",
        "var z free init 50;",
        "equ defobj(i in I) : obj(i) =E= q(i)*z",
        "    - (c(i)*q(i) + beta(i)/(beta(i)+1)*K(i)^(-1/beta(i))*q(i)^((beta(i)+1)/beta(i)));",
        "equ defz : z =E= 5000^(1/1.1)*sum(i in I, q(i))^(-1/1.1);",
    )
    lines = ["equilibrium", "implicit z defz"]
    for i in range(1, 6):
        own = " z" if i <= makers else ""
        lines.append(f"max obj({i}) q({i}){own} defobj({i})")
    label = "competitive" if makers == 0 else "oligo" + "".join(str(i) for i in range(1, makers + 1))
    profits = MIXED_PROFITS[label]
    expected = _lines("default_tol = 2e-3", *(f"obj({i}) = {p}" for i, p in enumerate(profits, 1)))
    return Instance(f"mixed_{label}", model, _lines(*lines), "", expected)


def mixed_welfare(variables):
    """Total profit and social welfare (consumer surplus plus profit) of a solved variant."""
    Q = sum(variables[f"q({i})"] for i in range(1, 6))
    profit = sum(variables[f"obj({i})"] for i in range(1, 6))
    surplus = 5000 ** (1 / 1.1) * 11 * Q ** (0.1 / 1.1) - variables["z"] * Q
    return profit, surplus + profit


MIXED_LABELS = ("competitive", "oligo1", "oligo12", "oligo123", "oligo1234", "oligo12345")
MIXED_PROFITS = {
    "competitive": (123.834, 195.314, 257.807, 302.863, 327.591),
    "oligo1": (125.513, 216.446, 278.984, 322.512, 344.819),
    "oligo12": (145.591, 219.632, 306.174, 347.477, 366.543),
    "oligo123": (167.015, 243.593, 309.986, 373.457, 388.972),
    "oligo1234": (185.958, 264.469, 331.189, 376.697, 408.308),
    "oligo12345": (199.934, 279.716, 346.590, 391.279, 410.357),
}
MIXED_TOTALS = {
    "competitive": (1207.410, 39063.824), "oligo1": (1288.273, 39050.191),
    "oligo12": (1385.417, 39034.577), "oligo123": (1483.023, 39022.469),
    "oligo1234": (1566.621, 39016.373), "oligo12345": (1627.875, 39015.125),
}


def luna_data(n=100, seed=20170101):
    nk = n // 5
    rng = np.random.default_rng(seed)
    U = rng.uniform(0, 10, size=(5, nk))
    M = rng.uniform(0.4, 0.8, size=(5, nk))
    b = rng.uniform(30, 60, size=(5, nk))
    return np.round(U, 4), np.round(M, 4), np.round(b, 4)


def luna_oligopoly(n=100, shared=True, seed=20170101):
    """Electricity market with an ISO agent and five producers with n/5 plants each."""
    if n % 5:
        raise ValueError("n must be a multiple of 5")
    nk = n // 5
    U, M, b = luna_data(n, seed)

    def table(name, arr):
        vals = (((i + 1, k + 1), float(arr[i, k])) for i in range(5) for k in range(nk))
        return f"param {name}(I, K) = {{ {_entries(vals)} }};"

    total = "sum(j in I, l in K, q(j,l))"
    price = "(a*sqr(z) + P)" if shared else f"(a*sqr({total}) + P)"
    zed = "z" if shared else total
    out = [
        "# ISO agent and five producers sharing a fixed demand.",
        "set I = 1..5;",
        f"set K = 1..{nk};",
        "param P = 120;",
        "param U0 = 5;",
        table("U", U), table("M", M), table("b", b),
        "param d = 0.8*sum(i in I, k in K, U(i,k));",
        "param a = -P/(1.5*d)^2;",
        "var iso_obj free;",
        "var agent_obj(I) free;",
    ]
    if shared:
        out.append(f"var z free init {float(np.sum(0.8 * U))!r};")
    out += [
        "var q0 in [0, U0];",
        "var q(i in I, k in K) in [0, U(i,k)] init 0.8*U(i,k);",
        "equ iso_defobj : iso_obj =E= sum(i in I, k in K, 0.5*M(i,k)*sqr(q(i,k)) + b(i,k)*q(i,k))",
        f"    - {price}*{zed} + P*q0;",
        "equ agent_defobj(i in I) : agent_obj(i) =E= sum(k in K, 0.5*M(i,k)*sqr(q(i,k)) + b(i,k)*q(i,k))",
        f"    - {price}*sum(k in K, q(i,k));",
        f"equ demand : q0 + {zed} =E= d;",
    ]
    if shared:
        out.append(f"equ defz : z =E= {total};")
    lines = ["equilibrium"]
    if shared:
        lines.append("implicit z defz")
    lines += ["visol demand", "min iso_obj q0 iso_defobj demand"]
    for i in range(1, 6):
        lines.append(f"min agent_obj({i}) q({i},*){' z' if shared else ''} agent_defobj({i}) demand")
    name = "luna_oligopoly" if shared else "luna_original"
    return Instance(name, _lines(*out), _lines(*lines), "SharedEqu\n", "")


def example3(sizes=(2, 3), m=1, explicit=True, seed=0):
    """Agents i own x_i and a shared implicit y in R^m; no other constraints.

    Each objective is a convex quadratic in (x_i, y); y is tied to x by
    ``y(k) = sum a(k,j)*x(j) + d(k)`` (written implicitly as ``2*y(k) = ...``
    when ``explicit`` is false).
    """
    rng = np.random.default_rng(seed)
    N = len(sizes)
    n = sum(sizes)
    owner = [i + 1 for i, s in enumerate(sizes) for _ in range(s)]
    A = np.round(rng.uniform(-0.5, 0.5, size=(m, n)), 3)
    d = np.round(rng.uniform(0, 1, size=m), 3)
    c = np.round(rng.uniform(1, 3, size=n), 3)
    g = np.round(rng.uniform(0.1, 0.5, size=(N, m)), 3)
    out = [
        f"set J = 1..{n};",
        f"set L = 1..{m};",
        f"param A(L, J) = {{ {_entries(((k + 1, j + 1), float(A[k, j])) for k in range(m) for j in range(n))} }};",
        f"param d(L) = {{ {_entries(((k + 1,), float(d[k])) for k in range(m))} }};",
        f"param c(J) = {{ {_entries(((j + 1,), float(c[j])) for j in range(n))} }};",
        "var obj(N) free;",
        "var x(J) >= 0 init 1;",
        "var y(L) free;",
    ]
    out.insert(0, f"set N = 1..{N};")
    for i in range(1, N + 1):
        mine = [j + 1 for j in range(n) if owner[j] == i]
        own = " + ".join(f"0.5*sqr(x({j})) - c({j})*x({j})" for j in mine)
        gy = " + ".join(f"{float(g[i - 1, k])!r}*sqr(y({k + 1}))" for k in range(m))
        cross = " + ".join(f"y({k + 1})*x({j})" for k in range(m) for j in mine)
        out.append(f"equ f{i} : obj({i}) =E= {own} + {gy} + 0.1*({cross});")
    lhs = "y(l)" if explicit else "2*y(l)"
    rhs = "sum(j in J, A(l,j)*x(j)) + d(l)" if explicit else "2*(sum(j in J, A(l,j)*x(j)) + d(l))"
    out.append(f"equ H(l in L) : {lhs} =E= {rhs};")
    lines = ["equilibrium", "implicit y H"]
    for i in range(1, N + 1):
        mine = " ".join(f"x({j + 1})" for j in range(n) if owner[j] == i)
        lines.append(f"min obj({i}) {mine} y f{i}")
    return Instance("example3", _lines(*out), _lines(*lines), "", "")


# ---------------------------------------------------------------- error files

_ERR_MODEL = _lines(
    "set I = 1..2;",
    "var obj(I) free;",
    "var x(I) >= 0;",
    "equ defobj(i in I) : obj(i) =E= sqr(x(i)) - x(i)*(3 - sum(j in I, x(j)));",
    "equ cap : sum(i in I, x(i)) =L= 1;",
)


def _err(name, cls, empinfo, options="", model=_ERR_MODEL):
    return Instance(name, model, _lines(*empinfo), options, _lines(f"error = {cls}"))


def err_multiple_ownership():
    return _err("err_multiple_ownership", "MultipleOwnership",
                ["equilibrium", "min obj(1) x(1) defobj(1) cap", "min obj(1) x(2) defobj(2)"])


def err_missing_ownership():
    return _err("err_missing_ownership", "MissingOwnership",
                ["equilibrium", "min obj(1) x(1) defobj(1) cap", "min obj(2) defobj(2)"])


def err_shared_equ():
    return _err("err_shared_equ", "SharedEquNotEnabled",
                ["equilibrium", "min obj(1) x(1) defobj(1) cap", "min obj(2) x(2) defobj(2) cap"])


def err_non_implicit_shared():
    return _err("err_non_implicit_shared", "NonImplicitSharedVariable",
                ["equilibrium", "min obj(1) x(1) x(2) defobj(1) cap", "min obj(2) x(2) defobj(2)"])


_IMPLICIT_MODEL = _lines(
    "set I = 1..3;",
    "var obj(I) free;",
    "var x(I) >= 0;",
    "var y free;",
    "var w free;",
    "equ defobj(i in I) : obj(i) =E= sqr(x(i)) - x(i)*(10 - y);",
    "equ defH : y + w =E= sum(i in I, x(i));",
)


def err_implicit_not_square():
    return _err("err_implicit_not_square", "ImplicitNotSquare",
                ["equilibrium", "implicit y w defH",
                 "min obj(1) x(1) y w defobj(1)", "min obj(2) x(2) y w defobj(2)",
                 "min obj(3) x(3) defobj(3)"],
                model=_IMPLICIT_MODEL)


def err_ambiguous_replication():
    model = _IMPLICIT_MODEL.replace("var w free;\n", "").replace("y + w =E=", "y =E=")
    return _err("err_ambiguous_replication", "AmbiguousReplication",
                ["equilibrium", "implicit y defH",
                 "min obj(1) x(1) y defobj(1)", "min obj(2) x(2) y defobj(2)",
                 "min obj(3) x(3) defobj(3)"],
                options="ImplVarModel = Replication\n", model=model)


BUILDERS = {
    "nep_oligopoly": nep_oligopoly,
    "gnep_outrata": gnep_outrata,
    "qvi_outrata": qvi_outrata,
    "mopec_mathiesen": mopec_mathiesen,
    "tragedy_commons": lambda: tragedy_commons(5, False),
    "tragedy_commons_visol": lambda: tragedy_commons(5, True),
    "river_basin_visol": lambda: river_basin(True),
    "river_basin_gnep": lambda: river_basin(False),
    "impl_bounds": impl_bounds,
    "luna_oligopoly": lambda: luna_oligopoly(100, True),
    "luna_original": lambda: luna_oligopoly(100, False),
    **{f"mixed_{label}": (lambda k=k: mixed_behavior(k)) for k, label in enumerate(MIXED_LABELS)},
    "err_multiple_ownership": err_multiple_ownership,
    "err_missing_ownership": err_missing_ownership,
    "err_shared_equ": err_shared_equ,
    "err_non_implicit_shared": err_non_implicit_shared,
    "err_implicit_not_square": err_implicit_not_square,
    "err_ambiguous_replication": err_ambiguous_replication,
}
NAMES = tuple(BUILDERS)
ERROR_NAMES = tuple(n for n in NAMES if n.startswith("err_"))


def build(name):
    return BUILDERS[name]()


def data_dir():
    return Path(str(resources.files(__name__) / "data"))


def load(name):
    """Read the committed files of a corpus instance."""
    base = data_dir() / name
    if not base.is_dir():
        raise KeyError(name)
    texts = {}
    for key, fname in FILES.items():
        path = base / fname
        texts[key] = path.read_text() if path.exists() else ""
    return Instance(name, **texts)


def write(instance, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for key, fname in FILES.items():
        text = getattr(instance, key)
        path = directory / fname
        if text:
            path.write_text(text)
        elif path.exists():
            path.unlink()
    return directory


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m equilib.corpus")
    parser.add_argument("--write", metavar="DIR", nargs="?", const=str(data_dir()),
                        help="regenerate the corpus files (default: the package data directory)")
    args = parser.parse_args(argv)
    if args.write is None:
        for name in NAMES:
            print(name)
        return 0
    for name in NAMES:
        write(build(name), Path(args.write) / name)
    return 0
