"""
Empirical regret under its upper bound
======================================

With the exploration weight set to 2 u_max^2 the regret bounds apply.
u_max and the per-epoch means come from a Monte-Carlo estimate, and the
bound is evaluated with them.  The curves are far apart: the bound is
loose by more than an order of magnitude.
"""
import numpy as np

from _common import N_SEEDS, plt, save
from vccoffload import parse_scenario, run_batch
from vccoffload.bounds import bound_curve, inputs_from_estimate, theorem1_bound

scenario = parse_scenario("synthetic_table1_theory")
agg = run_batch(scenario, ["avucb"], N_SEEDS)["avucb"]

t = np.arange(1, scenario.horizon + 1)
curves = np.array([bound_curve(theorem1_bound, inputs_from_estimate(scenario, r.epochs, r.mu), t)
                   for r in agg.runs])

# %%
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(t, agg.mean_cum_regret, label="AVUCB, mean regret")
ax.plot(t, curves.min(axis=0), label="bound (smallest over seeds)")
ax.set_yscale("log")
ax.set_xlabel("period")
ax.set_ylabel("regret (s)")
ax.legend()
save(fig, "bounds_overlay.png")
print(f"bound / regret at T: {curves.min(axis=0)[-1] / agg.mean_cum_regret[-1]:.1f}")
