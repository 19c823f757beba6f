"""Shared constraints: generalized Nash versus variational equilibria.

With ``SharedEqu`` each agent may list the same constraint.  Without
``visol`` every owner keeps its own multiplier, and the game usually has a
whole continuum of solutions.  With ``visol`` the owners are forced to agree
on one multiplier, which singles out the variational equilibrium.
"""
import numpy as np

from equilib import corpus, solve_texts
from equilib.solver import natural_residual


def show(title, inst):
    res = solve_texts(inst.model, inst.empinfo, inst.options)
    print(title, res.solution.status.value)
    xs = [v for k, v in res.values.variables.items() if k.startswith("x(")]
    print("   x  =", " ".join(f"{x:8.4f}" for x in xs))
    for k, v in res.values.multipliers.items():
        if "@" in k:
            print(f"   {k:<16}{v:9.4f}")
    return res


# tragedy of the commons: both modes agree, x_i = 1/(N+1) and the capacity
# constraint is slack
for visol in (False, True):
    show(f"commons, N=4, visol={visol}:", corpus.tragedy_commons(4, visol))

print()
# river basin: the two modes differ
show("river basin, variational:", corpus.river_basin(True))
res = show("river basin, GNEP:", corpus.river_basin(False))
# any point on cons(1) where each firm's stationarity holds with its own
# multiplier is a GNEP solution; Newton from x = 0 lands on the one above,
# while other solvers may report another point of the same set

# the point reported for this game elsewhere, x = (0, 6.473, 22.281) with
# per-firm multipliers (-0.804, -1.504, -0.459), is another member of that
# set: it satisfies every complementarity condition up to its rounding.
# The Jacobian is singular along the set, so Newton does not single it out.
mcp = res.mcp
reported = {"x(1)": 0.0, "x(2)": 6.473, "x(3)": 22.281,
            "mu[cons(1)@1]": -0.804, "mu[cons(1)@2]": -1.504, "mu[cons(1)@3]": -0.459}
z = np.array([reported.get(label, 0.0) for label in mcp.labels])
print("river basin, reported GNEP point: natural residual "
      f"{np.max(np.abs(natural_residual(mcp, z))):.1e} (data rounded to 1e-3)")
