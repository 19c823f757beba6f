"""A small MOPEC, and one GNEP written two ways.

The MOPEC has a Cobb-Douglas consumer, a linear producer and a market
agent setting prices through a VI.  The second part solves a two-player
GNEP both as a game and as a quasi-variational inequality.
"""
import numpy as np

from equilib import corpus, solve_texts

inst = corpus.mopec_mathiesen()
res = solve_texts(inst.model, inst.empinfo, inst.options)
v = res.values.variables
p = np.array([v[f"p({i})"] for i in (1, 2, 3)])
x = np.array([v[f"x({i})"] for i in (1, 2, 3)])
print("MOPEC:", res.solution.status.value, "in", res.solution.iterations, "iterations")
print("  prices       ", np.round(p, 4))
print("  consumption  ", np.round(x, 4))
print("  activity y   ", round(v["y"], 4))
income = p @ np.array([0, 5, 3])
print("  demand check ", np.round(np.array([0.9, 0.1, 0.0]) * income / p, 4))

for name in ("gnep_outrata", "qvi_outrata"):
    inst = corpus.build(name)
    res = solve_texts(inst.model, inst.empinfo, inst.options)
    pts = {k: round(v, 6) for k, v in res.values.variables.items() if k[0] in "xy"}
    print(f"{name}: {pts}")
