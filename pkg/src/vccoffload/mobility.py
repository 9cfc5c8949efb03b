"""TaV-SeV distances and candidate sets, from a random walk or a position trace."""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable

import numpy as np

from .bandit import arm_sort_key

TRACE_COLUMNS = ("period", "vehicle_id", "role", "x", "y", "speed", "direction")
_INT_RE = re.compile(r"[+-]?\d+")


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MobilityConfig:
    comm_range: float = 200.0
    mode: str = "synthetic"
    dist_min: float = 10.0
    dist_max: float = 200.0
    step_max: float = 10.0
    trace_path: str | None = None
    tav_id: Hashable | None = None

    def __post_init__(self):
        if not self.comm_range > 0:
            raise ValueError("comm_range must be > 0")
        if self.mode not in ("synthetic", "trace"):
            raise ValueError(f"unknown mobility mode {self.mode!r}")
        if not self.dist_min < self.dist_max:
            raise ValueError("dist_min must be < dist_max")
        if self.step_max < 0:
            raise ValueError("step_max must be >= 0")
        if self.mode == "trace" and (self.trace_path is None or self.tav_id is None):
            raise ValueError("trace mode needs trace_path and tav_id")


@dataclass(frozen=True)
class VehicleSnapshot:
    period: int
    vehicle_id: Hashable
    role: str
    x: float
    y: float
    speed: float
    direction: int


@dataclass
class CandidateSet:
    period: int
    members: dict = field(default_factory=dict)  # SeV id -> distance in meters

    def ids(self) -> tuple:
        return tuple(self.members)


# ---------------------------------------------------------------------------
# synthetic random walk


def initial_distances(n: int, rng: np.random.Generator, config: MobilityConfig) -> np.ndarray:
    return rng.uniform(config.dist_min, config.dist_max, size=n)


def step_synthetic(distances, rng: np.random.Generator, config: MobilityConfig) -> np.ndarray:
    """Move every distance by a uniform step in [-step_max, step_max] and clamp."""
    d = np.asarray(distances, dtype=float)
    step = rng.uniform(-config.step_max, config.step_max, size=d.shape)
    return np.clip(d + step, config.dist_min, config.dist_max)


def clamped_walk(start: float, steps, lo: float, hi: float) -> np.ndarray:
    """Positions ``start, clip(start + s0), ...``; one entry per step plus the start."""
    out = np.empty(len(steps) + 1)
    d = out[0] = start
    for i, s in enumerate(steps, 1):
        d = min(max(d + s, lo), hi)
        out[i] = d
    return out


# ---------------------------------------------------------------------------
# trace ingestion


def _parse_id(text: str):
    text = text.strip()
    return int(text) if _INT_RE.fullmatch(text) else text


@dataclass
class Trace:
    """Snapshots sorted by (period, vehicle id), with a per-period index."""

    snapshots: list
    by_period: dict

    @property
    def periods(self) -> list:
        return sorted(self.by_period)

    def __len__(self):
        return len(self.snapshots)


def load_trace(path) -> Trace:
    """Read a position trace CSV.

    Lines starting with ``#`` are skipped.  Errors cite 1-based line numbers.
    """
    path = Path(path)
    snaps: list[VehicleSnapshot] = []
    by_period: dict[int, dict] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [(i, line) for i, line in enumerate(fh, 1) if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        return Trace([], {})
    header_line, header = lines[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    missing = [c for c in TRACE_COLUMNS if c not in cols]
    if missing:
        raise TraceFormatError(f"{path}:{header_line}: missing columns {missing}")
    idx = {c: cols.index(c) for c in TRACE_COLUMNS}
    last_period = -1
    for lineno, row in zip((i for i, _ in lines[1:]), csv.reader(line for _, line in lines[1:])):
        if len(row) != len(cols):
            raise TraceFormatError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
        get = lambda c: row[idx[c]].strip()  # noqa: E731
        try:
            period = int(get("period"))
            vid = _parse_id(get("vehicle_id"))
            role = get("role").upper()
            x, y, speed = float(get("x")), float(get("y")), float(get("speed"))
            direction = int(get("direction"))
        except ValueError as exc:
            raise TraceFormatError(f"{path}:{lineno}: {exc}") from None
        if period < 0:
            raise TraceFormatError(f"{path}:{lineno}: negative period {period}")
        if role not in ("TAV", "SEV"):
            raise TraceFormatError(f"{path}:{lineno}: role must be TAV or SEV, got {role!r}")
        if direction not in (1, -1):
            raise TraceFormatError(f"{path}:{lineno}: direction must be +1 or -1, got {direction}")
        if period < last_period:
            raise TraceFormatError(f"{path}:{lineno}: period {period} after period {last_period}")
        last_period = period
        bucket = by_period.setdefault(period, {})
        if vid in bucket:
            raise TraceFormatError(f"{path}:{lineno}: duplicate vehicle {vid!r} in period {period}")
        snap = VehicleSnapshot(period, vid, role, x, y, speed, direction)
        bucket[vid] = snap
        snaps.append(snap)
    snaps.sort(key=lambda s: (s.period, arm_sort_key(s.vehicle_id)))
    return Trace(snaps, by_period)


def trace_candidates(trace: Trace, period: int, tav_id, comm_range: float) -> CandidateSet:
    """SeVs heading the TaV's way within ``comm_range`` (inclusive) in ``period``."""
    bucket = trace.by_period.get(period, {})
    tav = bucket.get(tav_id)
    if tav is None:
        raise KeyError(f"TaV {tav_id!r} not present in period {period}")
    members = {}
    for vid in sorted(bucket, key=arm_sort_key):
        s = bucket[vid]
        if s.role != "SEV" or s.direction != tav.direction:
            continue
        dist = math.hypot(s.x - tav.x, s.y - tav.y)
        if dist <= comm_range:
            members[vid] = dist
    return CandidateSet(period, members)


class TraceMobility:
    """Candidate sets of one TaV over its trace periods.

    Engine period ``t`` (1-based) maps to the TaV's ``t``-th trace period;
    the TaV must be present in a contiguous block of periods.
    """

    def __init__(self, trace: Trace, config: MobilityConfig):
        self.trace = trace
        self.config = config
        own = [p for p in trace.periods if config.tav_id in trace.by_period[p]]
        if not own:
            raise ValueError(f"TaV {config.tav_id!r} does not appear in the trace")
        if own != list(range(own[0], own[-1] + 1)):
            raise ValueError(f"TaV {config.tav_id!r} periods are not contiguous")
        self.first_period = own[0]
        self.horizon = len(own)
        self._sets = [
            trace_candidates(trace, p, config.tav_id, config.comm_range) for p in own
        ]

    def candidate_set(self, t: int) -> CandidateSet:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"period {t} outside 1..{self.horizon}")
        cs = self._sets[t - 1]
        return CandidateSet(t, dict(cs.members))

    def arm_ids(self) -> list:
        seen = {}
        for cs in self._sets:
            seen.update(dict.fromkeys(cs.members))
        return sorted(seen, key=arm_sort_key)

    def distance_matrix(self, arm_ids) -> np.ndarray:
        """(T, N) distances, NaN where the arm is not a candidate."""
        col = {a: j for j, a in enumerate(arm_ids)}
        out = np.full((self.horizon, len(arm_ids)), np.nan)
        for i, cs in enumerate(self._sets):
            for vid, dist in cs.members.items():
                out[i, col[vid]] = dist
        return out


class SyntheticMobility:
    """Clamped random-walk distances for a fixed availability schedule.

    ``active`` is a list of candidate tuples, one per period.  Each arm gets
    its own generator, so its walk does not depend on which other arms exist.
    Its first distance is uniform on [dist_min, dist_max] at its first
    active period.
    """

    def __init__(self, config: MobilityConfig, active: list, arm_ids: list, rngs: list):
        self.config = config
        self.active = [tuple(a) for a in active]
        self.horizon = len(active)
        self.arm_ids = list(arm_ids)
        T, N = self.horizon, len(self.arm_ids)
        dist = np.full((T, N), np.nan)
        for j, arm in enumerate(self.arm_ids):
            rng = rngs[j]
            start = rng.uniform(config.dist_min, config.dist_max)
            steps = rng.uniform(-config.step_max, config.step_max, size=T)
            present = [i for i in range(T) if arm in self.active[i]]
            if not present:
                continue
            first = present[0]
            walk = clamped_walk(start, steps[first + 1 :], config.dist_min, config.dist_max)
            dist[first:, j] = walk
        self._dist = dist
        self._col = {a: j for j, a in enumerate(self.arm_ids)}

    def candidate_set(self, t: int) -> CandidateSet:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"period {t} outside 1..{self.horizon}")
        row = self._dist[t - 1]
        return CandidateSet(t, {a: float(row[self._col[a]]) for a in self.active[t - 1]})

    def distance_matrix(self, arm_ids=None) -> np.ndarray:
        out = self._dist.copy()
        for i, act in enumerate(self.active):
            for a in self.arm_ids:
                if a not in act:
                    out[i, self._col[a]] = np.nan
        if arm_ids is not None:
            out = out[:, [self._col[a] for a in arm_ids]]
        return out
