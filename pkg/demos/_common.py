"""Shared plumbing for the demo scripts: headless plotting and an output folder."""
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

OUT = Path(os.environ.get("VCCOFFLOAD_DEMO_OUT", Path(__file__).with_name("figures")))
N_SEEDS = int(os.environ.get("VCCOFFLOAD_DEMO_SEEDS", "30"))


def save(fig, name):
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / name
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    print(f"wrote {path}")
