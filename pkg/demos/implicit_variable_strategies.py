"""Shared implicit variables and the three MCP assembly strategies.

An electricity market: an ISO buys slack q0 and five producers run n/5
plants each.  All of them see the price through total output z.  Written
out directly, every producer row depends on every plant (a dense Jacobian).
Declaring ``implicit z defz`` and letting the agents share z keeps the
system sparse.
"""
import time

from equilib import assemble_mcp, corpus, load_problem, model_stats, solve_mcp

print(f"{'n':>5} {'formulation':<14}{'size':>7}{'nnz':>9}{'density %':>11}{'solve s':>9}")
for n in (50, 100, 250):
    for shared, strategy in ((False, None), (True, "Switching"), (True, "Substitution")):
        inst = corpus.luna_oligopoly(n, shared=shared)
        prob = load_problem(inst.model, inst.empinfo, inst.options)
        mcp = assemble_mcp(prob.report, prob.model, strategy)
        st = model_stats(mcp)
        t0 = time.perf_counter()
        sol = solve_mcp(mcp)
        dt = time.perf_counter() - t0
        name = "original" if not shared else strategy
        print(f"{n:>5} {name:<14}{st.size:>7}{st.nnz:>9}{st.percent:>11.3f}{dt:>9.2f}"
              f"{'' if sol.solved else '  ' + sol.status.value}")

# Replication copies z for every owner; since the ISO's demand row also
# mentions z it cannot tell which copy is meant
inst = corpus.luna_oligopoly(50)
prob = load_problem(inst.model, inst.empinfo, inst.options)
try:
    assemble_mcp(prob.report, prob.model, "Replication")
except Exception as err:
    print(f"\nReplication: {type(err).__name__}: {err}")
