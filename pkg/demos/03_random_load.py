"""
Exploring only when it is cheap
===============================

With task sizes uniform on [0.2, 1] Mbit, a wrong choice costs more on a
big task.  The load-aware policy shrinks its exploration bonus as the
task grows.  Two threshold settings are compared with UCB1, and we look
at how exploratory picks split across task sizes.
"""
import numpy as np

from _common import N_SEEDS, plt, save
from vccoffload import parse_scenario, run_batch

base = parse_scenario("random_load")
settings = {
    "AVUCB (0.4, 0.8)": base.with_policy(x_lower=0.4e6, x_upper=0.8e6),
    "AVUCB (0.6, 0.6)": base.with_policy(x_lower=0.6e6, x_upper=0.6e6),
}
runs = {label: run_batch(sc, ["avucb"], N_SEEDS)["avucb"] for label, sc in settings.items()}
runs["UCB1"] = run_batch(base, ["ucb1"], N_SEEDS)["ucb1"]

# %%
t = np.arange(1, base.horizon + 1)
fig, ax = plt.subplots(figsize=(7, 4))
for label, agg in runs.items():
    ax.plot(t, agg.mean_cum_regret, label=label)
ax.set_xlabel("period")
ax.set_ylabel("cumulative regret (s)")
ax.legend()
save(fig, "random_load_regret.png")

# %%
# A pick counts as exploratory when it is not the epoch's best arm.
# Binning those picks by task size shows where each policy pays for learning.
bins = np.linspace(0.2e6, 1e6, 9)
fig, ax = plt.subplots(figsize=(7, 4))
for label, agg in runs.items():
    sizes = []
    for r in agg.runs:
        best, _ = r.mu.best(r.epochs[0], 0)
        sizes.extend(x for x, a in zip(r.x_bits, r.chosen) if a != best)
    hist, _ = np.histogram(sizes, bins=bins)
    ax.plot(0.5 * (bins[1:] + bins[:-1]) / 1e6, hist / len(agg.runs), marker="o", label=label)
ax.set_xlabel("task size (Mbit)")
ax.set_ylabel("non-best picks per run")
ax.legend()
save(fig, "random_load_exploration.png")
