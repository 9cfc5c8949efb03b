"""
How fast does the policy settle after the SeV set changes?
===========================================================

Per-period delay of AVUCB against an oracle that knows every SeV's mean
bit delay in advance.  Within each epoch the gap should close.
"""
import numpy as np

from _common import N_SEEDS, plt, save
from vccoffload import parse_scenario, run_batch

scenario = parse_scenario("synthetic_table1")
batch = run_batch(scenario, ["avucb", "oracle"], N_SEEDS)


def smooth(y, w=25):
    return np.convolve(y, np.ones(w) / w, mode="valid")


# %%
fig, ax = plt.subplots(figsize=(7, 4))
for name in ("avucb", "oracle"):
    curve = batch[name].mean_delay_curve
    ax.plot(np.arange(len(smooth(curve))) + 13, smooth(curve), label=name)
for ep in scenario.epochs[1:]:
    ax.axvline(ep.start, color="grey", lw=0.8, ls=":")
ax.set_xlabel("period")
ax.set_ylabel("task delay (s), 25-period moving mean")
ax.legend()
save(fig, "epoch_convergence.png")

# %%
# Numbers behind the picture: the last 100 periods of each epoch.
for ep in scenario.epochs:
    a = batch["avucb"].window_mean_delay(ep.end - 99, ep.end)
    o = batch["oracle"].window_mean_delay(ep.end - 99, ep.end)
    print(f"epoch [{ep.start:4d}, {ep.end:4d}]  avucb {a:.4f} s  oracle {o:.4f} s  gap {(a - o) / o:6.2%}")
