"""Discrete-time offloading episodes, regret accounting and seeded batches.

Randomness is split into independent streams keyed by ``(seed, purpose,
arm, ...)`` so that every policy run on a given seed faces the same task
sizes, distances, allocations and interference (common random numbers),
and the Monte-Carlo means used for regret never consume environment draws.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bandit import (
    POLICY_NAMES,
    OraclePolicy,
    Policy,
    PolicyConfig,
    arm_sort_key,
    make_policy,
    theory_beta,
)
from .mobility import MobilityConfig, SyntheticMobility, TraceMobility, load_trace
from .vcc_model import ChannelModel, RadioParams, SevCompute, bit_delay, channel_gain, link_rate

# stream purposes
_LOAD, _MOBILITY, _ALLOC, _INTERFERENCE, _POLICY, _REGRET = range(6)


class EmptyCandidateSetError(RuntimeError):
    def __init__(self, period: int):
        super().__init__(f"no candidate SeV in period {period}; cloud fallback is not modeled")
        self.period = period


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass(frozen=True)
class Epoch:
    start: int
    end: int
    active: tuple

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"epoch end {self.end} before start {self.start}")
        if not self.active:
            raise ValueError(f"epoch [{self.start}, {self.end}] has no active SeV")

    def __len__(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class LoadModel:
    """Task input size in bits: ``fixed`` at ``x0`` or ``uniform`` on [x_min, x_max]."""

    kind: str = "fixed"
    x0: float = 0.6e6
    x_min: float = 0.2e6
    x_max: float = 1.0e6

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform"):
            raise ValueError(f"unknown load kind {self.kind!r}")
        if self.kind == "fixed" and not self.x0 > 0:
            raise ValueError("x0 must be > 0")
        if self.kind == "uniform" and not 0 < self.x_min <= self.x_max:
            raise ValueError("need 0 < x_min <= x_max")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(size, float(self.x0))
        return rng.uniform(self.x_min, self.x_max, size=size)

    @property
    def support_max(self) -> float:
        return self.x0 if self.kind == "fixed" else self.x_max

    def conditional_mean_below(self, threshold: float) -> float:
        """E[x | x <= threshold]."""
        if self.kind == "fixed":
            if self.x0 > threshold:
                raise ValueError("P(x <= threshold) is zero")
            return self.x0
        if threshold < self.x_min:
            raise ValueError("P(x <= threshold) is zero")
        return 0.5 * (self.x_min + min(threshold, self.x_max))


@dataclass(frozen=True)
class Scenario:
    """Everything that defines an experiment apart from the policy name and seed.

    ``epochs`` is required in synthetic mobility and derived from the trace
    otherwise.  ``beta_rule`` is ``"fixed"`` (use ``policy.beta``) or
    ``"theory"`` (``2 u_max**2`` from the Monte-Carlo estimate, per seed).
    ``stochastic_interference`` redraws interference every (period, arm) from
    an exponential law whose mean is the configured constant.
    """

    name: str
    horizon: int
    sevs: dict
    epochs: tuple | None = None
    load: LoadModel = LoadModel()
    output_ratio: float = 0.1
    intensity: float = 1000.0
    radio: RadioParams = RadioParams()
    channel: ChannelModel = ChannelModel()
    mobility: MobilityConfig = MobilityConfig()
    policy: PolicyConfig = PolicyConfig()
    beta_rule: str = "fixed"
    seed: int = 0
    mu_samples: int = 20000
    u_max_safety: float = 1.05
    stochastic_interference: bool = False
    base_dir: str = "."

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.beta_rule not in ("fixed", "theory"):
            raise ValueError(f"unknown beta_rule {self.beta_rule!r}")
        if self.mu_samples < 1:
            raise ValueError("mu_samples must be >= 1")
        if not self.intensity > 0 or self.output_ratio < 0:
            raise ValueError("need intensity > 0 and output_ratio >= 0")
        if self.mobility.mode == "synthetic":
            if not self.epochs:
                raise ValueError("synthetic mobility needs an epoch schedule")
            check_partition(self.epochs, self.horizon)
            for ep in self.epochs:
                unknown = [a for a in ep.active if a not in self.sevs]
                if unknown:
                    raise ValueError(f"epoch [{ep.start}, {ep.end}] names unknown SeVs {unknown}")

    def with_policy(self, **changes) -> "Scenario":
        return replace(self, policy=replace(self.policy, **changes))


def check_partition(epochs: Sequence[Epoch], horizon: int) -> None:
    expected = 1
    for ep in epochs:
        if ep.start != expected:
            raise ValueError(f"epochs must partition 1..{horizon}: gap or overlap at period {ep.start}")
        expected = ep.end + 1
    if expected != horizon + 1:
        raise ValueError(f"epochs end at {expected - 1}, horizon is {horizon}")


def derive_epochs(candidates: Sequence[tuple]) -> tuple:
    """Maximal runs of identical candidate sets."""
    epochs = []
    start = 1
    for t in range(2, len(candidates) + 2):
        if t == len(candidates) + 1 or set(candidates[t - 1]) != set(candidates[start - 1]):
            if not candidates[start - 1]:
                raise EmptyCandidateSetError(start)
            epochs.append(Epoch(start, t - 1, tuple(candidates[start - 1])))
            start = t
    return tuple(epochs)


# ---------------------------------------------------------------------------
# environment


@dataclass
class Environment:
    """Precomputed per-seed world: every (period, arm) quantity is fixed up front.

    ``bit_delay`` holds the true seconds-per-bit of every arm in every
    period it is a candidate (NaN otherwise).  Policies only ever see the
    entry of the arm they chose.
    """

    seed: int
    arm_ids: list
    loads: np.ndarray
    candidates: list
    distance: np.ndarray
    alloc: np.ndarray
    ul_interference: np.ndarray
    dl_interference: np.ndarray
    bit_delay: np.ndarray
    epochs: tuple
    epoch_index: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.loads)

    def column(self, arm) -> int:
        return self.arm_ids.index(arm)


def _interference(scenario: Scenario, rng: np.random.Generator, mean: float, size):
    if scenario.stochastic_interference and mean > 0:
        return rng.exponential(mean, size=size)
    return np.full(size, float(mean))


def _rates_and_delay(scenario, distance, alloc, i_ul, i_dl):
    h = channel_gain(distance, scenario.channel)
    r_ul = link_rate(h, scenario.radio, i_ul)
    r_dl = link_rate(h, scenario.radio, i_dl)
    return bit_delay(r_ul, r_dl, alloc, scenario.output_ratio, scenario.intensity)


def build_environment(scenario: Scenario, seed: int | None = None) -> Environment:
    seed = scenario.seed if seed is None else seed
    mob = scenario.mobility
    if mob.mode == "trace":
        trace_path = Path(scenario.base_dir) / mob.trace_path
        tm = TraceMobility(load_trace(trace_path), mob)
        if tm.horizon != scenario.horizon:
            raise ValueError(f"trace gives {tm.horizon} periods for the TaV, scenario says {scenario.horizon}")
        candidates = [tm.candidate_set(t).ids() for t in range(1, tm.horizon + 1)]
        arm_ids = tm.arm_ids()
        epochs = derive_epochs(candidates)
        distance = tm.distance_matrix(arm_ids)
    else:
        epochs = tuple(scenario.epochs)
        arm_ids = sorted({a for ep in epochs for a in ep.active}, key=arm_sort_key)
        candidates = []
        for ep in epochs:
            cands = tuple(sorted(ep.active, key=arm_sort_key))
            candidates.extend([cands] * len(ep))
        rngs = [stream(seed, _MOBILITY, j) for j in range(len(arm_ids))]
        distance = SyntheticMobility(mob, candidates, arm_ids, rngs).distance_matrix()

    missing = [a for a in arm_ids if a not in scenario.sevs]
    if missing:
        raise ValueError(f"no compute capability given for SeVs {missing}")

    T, N = len(candidates), len(arm_ids)
    loads = scenario.load.sample(stream(seed, _LOAD), T)
    alloc = np.empty((T, N))
    i_ul = np.empty((T, N))
    i_dl = np.empty((T, N))
    for j, arm in enumerate(arm_ids):
        alloc[:, j] = scenario.sevs[arm].sample_alloc(stream(seed, _ALLOC, j), T)
        rng = stream(seed, _INTERFERENCE, j)
        i_ul[:, j] = _interference(scenario, rng, scenario.radio.ul_interference, T)
        i_dl[:, j] = _interference(scenario, rng, scenario.radio.dl_interference, T)

    u = np.full((T, N), np.nan)
    present = ~np.isnan(distance)
    u[present] = _rates_and_delay(scenario, distance[present], alloc[present], i_ul[present], i_dl[present])

    epoch_index = np.empty(T, dtype=int)
    for b, ep in enumerate(epochs):
        epoch_index[ep.start - 1 : ep.end] = b
    return Environment(seed, arm_ids, loads, candidates, distance, alloc, i_ul, i_dl, u, epochs, epoch_index)


# ---------------------------------------------------------------------------
# expected bit delays


@dataclass
class MuEstimate:
    mu: dict  # (arm, epoch index) -> expected seconds per bit
    std_err: dict
    sample_max: float
    u_max: float

    def best(self, epoch: Epoch, b: int) -> tuple:
        """(best arm, its mean) among the epoch's active arms, ties to the lowest id."""
        arm = min(sorted(epoch.active, key=arm_sort_key), key=lambda a: self.mu[(a, b)])
        return arm, self.mu[(arm, b)]


def estimate_mu(scenario: Scenario, samples: int | None = None, environment: Environment | None = None,
                seed: int | None = None) -> MuEstimate:
    """Monte-Carlo expected bit delay per (arm, epoch).

    Each draw picks a period of the epoch uniformly (which fixes the
    distance state), then a fresh allocation and interference.  Draws come
    from a dedicated stream so the estimate never perturbs the episode.
    """
    samples = scenario.mu_samples if samples is None else samples
    if samples < 1:
        raise ValueError("samples must be >= 1")
    env = environment if environment is not None else build_environment(scenario, seed)
    seed = env.seed
    mu, se = {}, {}
    peak = 0.0
    for b, ep in enumerate(env.epochs):
        for arm in ep.active:
            j = env.column(arm)
            rng = stream(seed, _REGRET, b, j)
            ts = rng.integers(ep.start, ep.end + 1, size=samples)
            dist = env.distance[ts - 1, j]
            alloc = scenario.sevs[arm].sample_alloc(rng, samples)
            i_ul = _interference(scenario, rng, scenario.radio.ul_interference, samples)
            i_dl = _interference(scenario, rng, scenario.radio.dl_interference, samples)
            u = _rates_and_delay(scenario, dist, alloc, i_ul, i_dl)
            mu[(arm, b)] = float(u.mean())
            se[(arm, b)] = float(u.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
            peak = max(peak, float(u.max()))
    return MuEstimate(mu, se, peak, peak * scenario.u_max_safety)


# ---------------------------------------------------------------------------
# episodes


@dataclass
class RunResult:
    scenario: str
    policy: str
    seed: int
    periods: np.ndarray
    chosen: list
    x_bits: np.ndarray
    delay_s: np.ndarray
    bit_delay: np.ndarray
    was_initialization: np.ndarray
    candidates: list
    true_bit_delay: np.ndarray = field(repr=False)
    arm_ids: list = field(repr=False, default_factory=list)
    epochs: tuple = ()
    mu: MuEstimate | None = field(repr=False, default=None)
    beta: float = float("nan")
    regret_increment: np.ndarray | None = None
    cum_regret: np.ndarray | None = None
    cum_pseudo_regret: np.ndarray | None = None
    epoch_regret: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return len(self.periods)

    @property
    def total_delay(self) -> float:
        return float(self.delay_s.sum())

    @property
    def average_delay(self) -> float:
        return float(self.delay_s.mean())

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])

    def epoch_mean_delay(self) -> np.ndarray:
        return np.array([self.delay_s[ep.start - 1 : ep.end].mean() for ep in self.epochs])

    def pull_counts(self) -> dict:
        counts = dict.fromkeys(self.arm_ids, 0)
        for a in self.chosen:
            counts[a] += 1
        return counts


def compute_regret(result: RunResult, epochs: Sequence[Epoch], mu: MuEstimate | dict, kind: str = "realized"):
    """Per-period regret, its running sum and per-epoch totals.

    ``realized`` charges ``x_t (u(t, a_t) - mu*_b)`` with the observed bit
    delay; ``expected`` uses the chosen arm's mean instead and is therefore
    nondecreasing.
    """
    table = mu.mu if isinstance(mu, MuEstimate) else mu
    inc = np.empty(result.horizon)
    totals = np.zeros(len(epochs))
    for b, ep in enumerate(epochs):
        missing = [a for a in ep.active if (a, b) not in table]
        if missing:
            raise KeyError(f"no expected delay for arms {missing} in epoch {b}")
        best = min(table[(a, b)] for a in ep.active)
        for t in range(ep.start, ep.end + 1):
            i = t - 1
            a = result.chosen[i]
            if kind == "realized":
                u = result.bit_delay[i]
            elif kind == "expected":
                u = table[(a, b)]
            else:
                raise ValueError(f"unknown regret kind {kind!r}")
            inc[i] = result.x_bits[i] * (u - best)
        totals[b] = inc[ep.start - 1 : ep.end].sum()
    return inc, np.cumsum(inc), totals


def _resolve_policy(scenario: Scenario, policy, seed: int, mu: MuEstimate) -> tuple[Policy, float]:
    cfg = scenario.policy
    if scenario.beta_rule == "theory":
        cfg = replace(cfg, beta=theory_beta(mu.u_max * cfg.load_unit_bits))
    if isinstance(policy, Policy):
        return policy, policy.config.beta
    name = policy.lower()
    if name not in POLICY_NAMES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {', '.join(POLICY_NAMES)}")
    rng = stream(seed, _POLICY, POLICY_NAMES.index(name))
    return make_policy(name, cfg, rng), cfg.beta


def run_episode(scenario: Scenario, policy="avucb", seed: int | None = None,
                environment: Environment | None = None, mu: MuEstimate | None = None) -> RunResult:
    """Play ``policy`` (a name or a :class:`Policy`) for the whole horizon.

    Each period: observe the candidate set and task size, ask the policy,
    charge the chosen arm's precomputed bit delay, feed that single delay
    back.
    """
    seed = scenario.seed if seed is None else seed
    env = environment if environment is not None else build_environment(scenario, seed)
    if mu is None:
        mu = estimate_mu(scenario, environment=env)
    pol, beta = _resolve_policy(scenario, policy, seed, mu)
    is_oracle = isinstance(pol, OraclePolicy)

    T = env.horizon
    col = {a: j for j, a in enumerate(env.arm_ids)}
    chosen = []
    inits = np.zeros(T, dtype=bool)
    u_chosen = np.empty(T)
    current_epoch = -1
    for i in range(T):
        t = i + 1
        cands = env.candidates[i]
        if not cands:
            raise EmptyCandidateSetError(t)
        x = float(env.loads[i])
        if is_oracle and env.epoch_index[i] != current_epoch:
            current_epoch = int(env.epoch_index[i])
            pol.set_expected({a: mu.mu[(a, current_epoch)] for a in env.epochs[current_epoch].active})
        dec = pol.select(cands, t, x)
        a = dec.chosen_arm
        u = float(env.bit_delay[i, col[a]])
        pol.update(a, x, x * u)
        chosen.append(a)
        inits[i] = dec.was_initialization
        u_chosen[i] = u

    result = RunResult(
        scenario=scenario.name,
        policy=pol.name,
        seed=seed,
        periods=np.arange(1, T + 1),
        chosen=chosen,
        x_bits=env.loads.copy(),
        delay_s=env.loads * u_chosen,
        bit_delay=u_chosen,
        was_initialization=inits,
        candidates=env.candidates,
        true_bit_delay=env.bit_delay,
        arm_ids=env.arm_ids,
        epochs=env.epochs,
        mu=mu,
        beta=beta,
    )
    result.regret_increment, result.cum_regret, result.epoch_regret = compute_regret(result, env.epochs, mu)
    result.cum_pseudo_regret = compute_regret(result, env.epochs, mu, kind="expected")[1]
    return result


# ---------------------------------------------------------------------------
# batches


@dataclass
class PolicyAggregate:
    policy: str
    seeds: list
    runs: list

    def _stack(self, attr) -> np.ndarray:
        return np.vstack([getattr(r, attr) for r in self.runs])

    @property
    def mean_cum_regret(self) -> np.ndarray:
        return self._stack("cum_regret").mean(axis=0)

    @property
    def std_cum_regret(self) -> np.ndarray:
        return self._stack("cum_regret").std(axis=0)

    @property
    def mean_delay_curve(self) -> np.ndarray:
        return self._stack("delay_s").mean(axis=0)

    @property
    def final_regrets(self) -> np.ndarray:
        return np.array([r.final_regret for r in self.runs])

    @property
    def average_delays(self) -> np.ndarray:
        return np.array([r.average_delay for r in self.runs])

    @property
    def epoch_mean_delays(self) -> np.ndarray:
        """(seeds, epochs) matrix of per-epoch mean delay."""
        return np.vstack([r.epoch_mean_delay() for r in self.runs])

    def window_mean_delay(self, start: int, end: int) -> float:
        """Mean delay over periods start..end (inclusive), pooled over seeds."""
        return float(self._stack("delay_s")[:, start - 1 : end].mean())


@dataclass
class BatchResult:
    scenario: Scenario
    seeds: list
    policies: dict  # name -> PolicyAggregate

    def __getitem__(self, name) -> PolicyAggregate:
        return self.policies[name]


def parse_seeds(seeds) -> list:
    """An int ``n`` means seeds ``0..n-1``; an iterable is taken as-is."""
    if isinstance(seeds, (int, np.integer)):
        if seeds < 1:
            raise ValueError("need at least one seed")
        return list(range(int(seeds)))
    out = [int(s) for s in seeds]
    if not out:
        raise ValueError("need at least one seed")
    return out


def _run_seed(scenario: Scenario, policies: list, seed: int) -> list:
    env = build_environment(scenario, seed)
    mu = estimate_mu(scenario, environment=env)
    return [run_episode(scenario, p, seed, environment=env, mu=mu) for p in policies]


def run_batch(scenario: Scenario, policies: Iterable[str], seeds, workers: int = 1) -> BatchResult:
    """Run every (policy, seed) pair; each seed's environment is shared by all policies.

    With ``workers > 1`` seeds run in a process pool.  Results are ordered
    by seed either way, so aggregates do not depend on scheduling.
    """
    seeds = parse_seeds(seeds)
    policies = list(policies)
    if not policies:
        raise ValueError("need at least one policy")
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(_run_seed, repeat(scenario), repeat(policies), seeds))
    else:
        per_seed = [_run_seed(scenario, policies, s) for s in seeds]
    return BatchResult(
        scenario,
        seeds,
        {p: PolicyAggregate(p, seeds, [runs[i] for runs in per_seed]) for i, p in enumerate(policies)},
    )
