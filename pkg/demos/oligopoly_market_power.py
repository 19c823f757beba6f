"""Cournot oligopoly: from price-takers to price-makers.

Five firms sell one good.  We first solve the plain Nash game, then make
the market price an implicit variable and hand it to more and more firms.
Each firm that owns the price internalises its effect on revenue, so total
profit climbs while social welfare falls.
"""
import time

from equilib import corpus, solve_texts

inst = corpus.nep_oligopoly()
t0 = time.perf_counter()
res = solve_texts(inst.model, inst.empinfo, inst.options)
print(f"Nash-Cournot game solved in {res.solution.iterations} iterations "
      f"({time.perf_counter() - t0:.3f} s)")
for i in range(1, 6):
    print(f"  firm {i}: q = {res.values.variables[f'q({i})']:8.3f}   "
          f"profit = {res.values.variables[f'obj({i})']:8.3f}")

print()
print(f"{'variant':<12}{'price':>9}{'total profit':>15}{'welfare':>13}")
for makers, label in enumerate(corpus.MIXED_LABELS):
    inst = corpus.mixed_behavior(makers)
    res = solve_texts(inst.model, inst.empinfo, inst.options)
    profit, welfare = corpus.mixed_welfare(res.values.variables)
    print(f"{label:<12}{res.values.variables['z']:9.4f}{profit:15.3f}{welfare:13.3f}")
