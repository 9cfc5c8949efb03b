"""Closed-form regret upper bounds for AVUCB, for overlay on empirical curves.

All bounds assume the exploration weight ``beta = 2 * u_max**2``.  The
constants hidden behind ``O(1)`` in the logarithmic-horizon bounds are
instantiated with the per-arm pull-count constant ``1 + pi**2 / 3``:

* identical load: ``C_b = (1 + pi**2/3) * sum_n gap_nb`` per epoch,
* pull counts under random load: ``C1 = 1 + pi**2/3``,
* regret under random load: ``C2 = (1 + pi**2/3) * gap_n * x_max``, i.e.
  every extra pull is charged at the largest possible task.

Gaps are normalized: ``gap_nb = (mu_nb - mu*_b) / u_max``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bandit import arm_sort_key

PULL_CONST = 1.0 + math.pi**2 / 3.0


@dataclass(frozen=True)
class BoundInputs:
    """Everything the bounds need.

    ``mu`` maps ``(arm, epoch index)`` to expected seconds per bit,
    ``occurrence`` maps ``(arm, epoch index)`` to the arm's occurrence time
    as seen in that epoch, and ``epochs`` are ``(start, end, active)``
    triples (anything with those attributes works).  ``x0`` is the fixed
    task size for the identical-load bounds; ``expected_small_load`` is
    ``E[x | x <= x_lower]`` and ``x_max`` the largest task size for the
    random-load bound.
    """

    u_max: float
    mu: dict
    epochs: tuple
    occurrence: dict
    x0: float | None = None
    expected_small_load: float | None = None
    x_max: float | None = None

    def __post_init__(self):
        if not self.u_max > 0:
            raise ValueError("u_max must be > 0")
        top = max(self.mu.values())
        if top > self.u_max:
            raise ValueError(f"u_max {self.u_max} is below the largest mean {top}")

    def best(self, b: int):
        active = sorted(self.epochs[b].active, key=arm_sort_key)
        return min(active, key=lambda a: self.mu[(a, b)])

    def gaps(self, b: int) -> dict:
        """Normalized gaps of the suboptimal arms of epoch ``b``.

        Arms tied with the best one have no finite log term and are
        dropped with a warning.
        """
        best = self.best(b)
        mu_star = self.mu[(best, b)]
        out = {}
        for a in sorted(self.epochs[b].active, key=arm_sort_key):
            if a == best:
                continue
            gap = (self.mu[(a, b)] - mu_star) / self.u_max
            if gap <= 0:
                warnings.warn(f"arm {a!r} ties the best arm in epoch {b}; left out of the bound", stacklevel=3)
                continue
            out[a] = gap
        return out


def occurrence_times(epochs) -> dict:
    """(arm, epoch) -> start of the unbroken run of epochs the arm belongs to."""
    occ = {}
    for b, ep in enumerate(epochs):
        for a in ep.active:
            if b > 0 and a in epochs[b - 1].active:
                occ[(a, b)] = occ[(a, b - 1)]
            else:
                occ[(a, b)] = ep.start
    return occ


def _log_pos(v: float) -> float:
    return math.log(v) if v > 1 else 0.0


def lemma1_bound(inputs: BoundInputs, b: int) -> float:
    """Regret bound of epoch ``b`` with identical load."""
    if inputs.x0 is None:
        raise ValueError("identical-load bound needs x0")
    ep = inputs.epochs[b]
    total = 0.0
    for a, gap in inputs.gaps(b).items():
        total += 8.0 * _log_pos(ep.end - inputs.occurrence[(a, b)]) / gap + PULL_CONST * gap
    return inputs.x0 * inputs.u_max * total


def theorem1_bound(inputs: BoundInputs, T: int) -> float:
    """Total regret bound at horizon ``T`` with identical load.

    Only epochs that have started by ``T`` contribute, so the function can
    be evaluated at intermediate checkpoints.
    """
    if inputs.x0 is None:
        raise ValueError("identical-load bound needs x0")
    total = 0.0
    for b, ep in enumerate(inputs.epochs):
        if ep.start > T:
            break
        gaps = inputs.gaps(b)
        total += sum(8.0 * _log_pos(T) / g for g in gaps.values()) + PULL_CONST * sum(gaps.values())
    return inputs.x0 * inputs.u_max * total


def theorem2_bound(inputs: BoundInputs, T: int) -> tuple[dict, float | None]:
    """Single-epoch random-load bounds at horizon ``T``.

    Returns the expected pull-count bound of every suboptimal arm and, when
    ``expected_small_load`` and ``x_max`` are known (equal thresholds), the
    regret bound; otherwise the second item is ``None``.
    """
    if len(inputs.epochs) != 1:
        raise ValueError("random-load bound covers a single epoch only")
    gaps = inputs.gaps(0)
    pulls = {a: 8.0 * _log_pos(T) / g**2 + PULL_CONST for a, g in gaps.items()}
    if inputs.expected_small_load is None or inputs.x_max is None:
        return pulls, None
    regret = inputs.u_max * sum(
        8.0 * _log_pos(T) * inputs.expected_small_load / g + PULL_CONST * g * inputs.x_max
        for g in gaps.values()
    )
    return pulls, regret


def bound_curve(fn, inputs: BoundInputs, periods) -> np.ndarray:
    """Evaluate a horizon bound at each checkpoint."""
    return np.array([fn(inputs, int(t)) for t in periods])


def inputs_from_estimate(scenario, epochs, estimate) -> BoundInputs:
    """Bound inputs matching a scenario and its Monte-Carlo mean estimate.

    The same ``u_max`` feeds the gaps here and ``beta`` in theory-mode runs.
    """
    load, pol = scenario.load, scenario.policy
    x0 = load.x0 if load.kind == "fixed" else None
    small = None
    if load.kind == "uniform" and pol.x_lower == pol.x_upper and math.isfinite(pol.x_lower):
        small = load.conditional_mean_below(pol.x_lower)
    return BoundInputs(
        u_max=estimate.u_max,
        mu=dict(estimate.mu),
        epochs=tuple(epochs),
        occurrence=occurrence_times(epochs),
        x0=x0,
        expected_small_load=small,
        x_max=load.support_max,
    )
