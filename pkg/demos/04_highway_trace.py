"""
Offloading on a highway trace
=============================

A TaV drives for 400 one-second periods.  SeVs join and leave its 200 m
range according to a position trace (SeV 4 joins at period 118, SeV 5
only stays for periods 320 to 343).  Five policies are compared on their
average task delay.
"""
import numpy as np

from _common import N_SEEDS, plt, save
from vccoffload import build_environment, parse_scenario, run_batch

scenario = parse_scenario("highway_table2")
env = build_environment(scenario)

# %%
# Which SeVs are in range when, straight from the trace.
fig, ax = plt.subplots(figsize=(7, 2.8))
for j, arm in enumerate(env.arm_ids):
    on = ~np.isnan(env.distance[:, j])
    ax.scatter(np.flatnonzero(on) + 1, np.full(on.sum(), arm), s=2)
ax.set_xlabel("period")
ax.set_ylabel("SeV")
save(fig, "highway_availability.png")

# %%
policies = ["oracle", "avucb", "vucb1", "ucb1", "random"]
batch = run_batch(scenario, policies, N_SEEDS)
means = [batch[p].average_delays.mean() for p in policies]
errs = [batch[p].average_delays.std() / np.sqrt(N_SEEDS) for p in policies]
for p, m, e in zip(policies, means, errs):
    print(f"{p:>6}: {m:.4f} +- {e:.4f} s")

fig, ax = plt.subplots(figsize=(6, 3.5))
ax.bar(policies, means, yerr=errs, capsize=3)
ax.set_ylabel("average delay (s)")
ax.set_ylim(min(means) * 0.9, max(means) * 1.05)
save(fig, "highway_delay.png")
