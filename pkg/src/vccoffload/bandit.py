"""Offloading policies that learn SeV delay from feedback on the chosen arm only.

All index policies minimize ``mean - padding``.  They differ only in the
time argument of the logarithm and in whether the task size gates the
exploration term:

=========  =====================  ===========================
policy     log argument           load gating
=========  =====================  ===========================
avucb      t - occurrence_time    1 - normalized_load(x)
vucb1      t - occurrence_time    none
ucb1       t                      none
=========  =====================  ===========================

Delays are learned per ``load_unit_bits`` (1 Mbit by default), which puts
the means on the same scale as the exploration weight ``beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

POLICY_NAMES = ("avucb", "ucb1", "vucb1", "random", "oracle")


def arm_sort_key(arm_id):
    """Order integers numerically, and ahead of any string ids."""
    if isinstance(arm_id, (int, np.integer)):
        return (0, int(arm_id), "")
    return (1, 0, str(arm_id))


@dataclass
class ArmState:
    arm_id: Hashable
    mean_bit_delay: float = 0.0
    pull_count: int = 0
    occurrence_time: int = 0
    last_seen: int = 0
    needs_connect: bool = True


@dataclass(frozen=True)
class PolicyConfig:
    """Knobs shared by every policy.

    ``x_lower``/``x_upper`` are load thresholds in bits.  The default of
    ``inf`` for both keeps the normalized load at 0 for every finite task,
    i.e. load gating is off.  ``reappear`` selects what happens when an arm
    returns after an absence: ``"retain"`` keeps its mean and count and
    restarts its occurrence time, ``"reset"`` forgets it entirely.
    """

    beta: float = 2.0
    x_lower: float = math.inf
    x_upper: float = math.inf
    tie_break: str = "lowest_id"
    load_unit_bits: float = 1e6
    reappear: str = "retain"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.x_upper >= self.x_lower >= 0:
            raise ValueError(f"need x_upper >= x_lower >= 0, got ({self.x_lower}, {self.x_upper})")
        if self.tie_break not in ("lowest_id", "first_listed"):
            raise ValueError(f"unknown tie_break rule {self.tie_break!r}")
        if not self.load_unit_bits > 0:
            raise ValueError("load_unit_bits must be > 0")
        if self.reappear not in ("retain", "reset"):
            raise ValueError(f"unknown reappear mode {self.reappear!r}")


def theory_beta(u_max: float) -> float:
    """Exploration weight ``2 u_max**2`` under which the regret bounds hold.

    ``u_max`` must be in seconds per load unit, like the policy's means.
    """
    return 2.0 * u_max**2


@dataclass
class Decision:
    chosen_arm: Hashable
    utilities: dict = field(default_factory=dict)
    was_initialization: bool = False


def normalized_load(x: float, config: PolicyConfig) -> float:
    """Task size mapped onto [0, 1] between the two thresholds.

    With equal thresholds this is a step: 0 at or below, 1 above.
    """
    lo, hi = config.x_lower, config.x_upper
    if hi == lo:
        return 0.0 if x <= lo else 1.0
    return max(min((x - lo) / (hi - lo), 1.0), 0.0)


def padded_index(mean: float, pulls: int, elapsed: float, load_factor: float, beta: float) -> float:
    """``mean - sqrt(beta * load_factor * ln(elapsed) / pulls)``."""
    if elapsed < 1:
        raise ValueError(f"log argument must be >= 1, got {elapsed}")
    return mean - math.sqrt(beta * load_factor * math.log(elapsed) / pulls)


def utility(arm: ArmState, t: int, x_norm: float, beta: float) -> float:
    """Load- and occurrence-aware index of ``arm`` at period ``t``."""
    if arm.pull_count < 1:
        raise ValueError(f"arm {arm.arm_id!r} has not been connected yet")
    if t <= arm.occurrence_time:
        raise ValueError(
            f"period {t} is not after occurrence time {arm.occurrence_time} of arm {arm.arm_id!r}"
        )
    return padded_index(arm.mean_bit_delay, arm.pull_count, t - arm.occurrence_time, 1.0 - x_norm, beta)


class Policy:
    """Bookkeeping shared by all policies.

    ``select`` registers every candidate (first sight, reappearance) and
    delegates the actual choice to ``_choose``.  ``update`` accepts the
    delay of the arm chosen in the same period and nothing else.
    """

    name = "base"
    initializes_new_arms = True

    def __init__(self, config: PolicyConfig | None = None):
        self.config = config or PolicyConfig()
        self.arms: dict[Hashable, ArmState] = {}
        self._pending = None
        self._last_t = 0

    def _order(self, candidates: Iterable[Hashable]) -> list:
        cands = list(dict.fromkeys(candidates))
        if self.config.tie_break == "lowest_id":
            cands.sort(key=arm_sort_key)
        return cands

    def _register(self, cands: list, t: int) -> None:
        for n in cands:
            arm = self.arms.get(n)
            if arm is None:
                self.arms[n] = ArmState(n, occurrence_time=t, last_seen=t)
                continue
            if arm.last_seen < t - 1:
                if self.config.reappear == "reset":
                    self.arms[n] = ArmState(n, occurrence_time=t, last_seen=t)
                    continue
                arm.occurrence_time = t
                arm.needs_connect = True
            arm.last_seen = t

    def select(self, candidates: Iterable[Hashable], t: int, x: float) -> Decision:
        cands = self._order(candidates)
        if not cands:
            raise ValueError(f"empty candidate set at period {t}")
        if t <= self._last_t:
            raise ValueError(f"periods must increase: got {t} after {self._last_t}")
        self._last_t = t
        self._register(cands, t)
        if self.initializes_new_arms:
            fresh = [n for n in cands if self.arms[n].needs_connect]
            if fresh:
                self._pending = fresh[0]
                return Decision(fresh[0], {}, True)
        decision = self._choose(cands, t, x)
        self._pending = decision.chosen_arm
        return decision

    def _choose(self, cands: list, t: int, x: float) -> Decision:
        raise NotImplementedError

    def update(self, arm_id: Hashable, x: float, delay: float) -> None:
        if arm_id not in self.arms:
            raise KeyError(f"arm {arm_id!r} was never offered to this policy")
        if arm_id != self._pending:
            raise ValueError(f"arm {arm_id!r} was not selected in the current period")
        if not (x > 0 and delay > 0):
            raise ValueError("x and delay must be > 0")
        arm = self.arms[arm_id]
        sample = delay / (x / self.config.load_unit_bits)
        k = arm.pull_count
        arm.mean_bit_delay = (arm.mean_bit_delay * k + sample) / (k + 1)
        arm.pull_count = k + 1
        arm.needs_connect = False
        self._pending = None

    def total_pulls(self) -> int:
        return sum(a.pull_count for a in self.arms.values())


class IndexPolicy(Policy):
    def _elapsed(self, arm: ArmState, t: int) -> float:
        return t - arm.occurrence_time

    def _load_factor(self, x: float) -> float:
        return 1.0

    def _choose(self, cands, t, x):
        beta = self.config.beta
        gate = self._load_factor(x)
        utilities = {}
        for n in cands:
            arm = self.arms[n]
            utilities[n] = padded_index(arm.mean_bit_delay, arm.pull_count, self._elapsed(arm, t), gate, beta)
        # min() keeps the first of equal values, and cands is already in tie-break order
        best = min(cands, key=utilities.__getitem__)
        return Decision(best, utilities, False)


class AVUCB(IndexPolicy):
    """Occurrence- and load-aware UCB."""

    name = "avucb"

    def _load_factor(self, x):
        return 1.0 - normalized_load(x, self.config)


class VUCB1(IndexPolicy):
    """Occurrence-aware UCB, blind to task size."""

    name = "vucb1"


class UCB1(IndexPolicy):
    """Classic UCB1 with the log of the episode period counter."""

    name = "ucb1"

    def _elapsed(self, arm, t):
        return t


class RandomPolicy(Policy):
    name = "random"
    initializes_new_arms = False

    def __init__(self, config=None, rng: np.random.Generator | None = None):
        super().__init__(config)
        self.rng = rng if rng is not None else np.random.default_rng()

    def _choose(self, cands, t, x):
        return Decision(cands[int(self.rng.integers(len(cands)))], {}, False)


class OraclePolicy(Policy):
    """Picks the lowest expected bit delay, as published by the engine.

    The engine calls :meth:`set_expected` with the per-epoch means before
    each decision; nothing else about the environment is visible here.
    """

    name = "oracle"
    initializes_new_arms = False

    def __init__(self, config=None):
        super().__init__(config)
        self.expected: dict = {}

    def set_expected(self, expected: Mapping[Hashable, float]) -> None:
        self.expected = dict(expected)

    def _choose(self, cands, t, x):
        missing = [n for n in cands if n not in self.expected]
        if missing:
            raise KeyError(f"no expected delay for arms {missing} at period {t}")
        utilities = {n: self.expected[n] for n in cands}
        return Decision(min(cands, key=utilities.__getitem__), utilities, False)


def make_policy(name: str, config: PolicyConfig | None = None, rng: np.random.Generator | None = None) -> Policy:
    """Build a policy by name: one of ``POLICY_NAMES``."""
    name = name.lower()
    if name == "avucb":
        return AVUCB(config)
    if name == "vucb1":
        return VUCB1(config)
    if name == "ucb1":
        return UCB1(config)
    if name == "random":
        return RandomPolicy(config, rng)
    if name == "oracle":
        return OraclePolicy(config)
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")
