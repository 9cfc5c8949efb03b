"""Wireless link and computation delay model for one TaV-SeV pair.

Rates follow the Shannon capacity of an inverse-power-law channel; the
compute side uses processor sharing, where the TaV receives an allocated
fraction of the SeV's maximum CPU speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class Task:
    """One computation job.

    ``input_bits`` is uploaded, ``output_bits`` comes back, and every input
    bit costs ``intensity`` CPU cycles.
    """

    input_bits: float
    output_bits: float
    intensity: float

    def __post_init__(self):
        if not self.input_bits > 0:
            raise ValueError(f"input_bits must be > 0, got {self.input_bits}")
        if self.output_bits < 0:
            raise ValueError(f"output_bits must be >= 0, got {self.output_bits}")
        if not self.intensity > 0:
            raise ValueError(f"intensity must be > 0, got {self.intensity}")

    @classmethod
    def proportional(cls, input_bits: float, output_ratio: float, intensity: float) -> "Task":
        """Task whose output size is a fixed ratio of its input size."""
        return cls(input_bits, output_ratio * input_bits, intensity)

    @property
    def output_ratio(self) -> float:
        return self.output_bits / self.input_bits


@dataclass(frozen=True)
class RadioParams:
    bandwidth: float = 10e6  # Hz
    tx_power: float = 0.1  # W
    noise_power: float = 1e-13  # W
    ul_interference: float = 0.0  # W
    dl_interference: float = 0.0  # W

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")
        for name in ("tx_power", "ul_interference", "dl_interference"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ChannelModel:
    """Inverse power law ``h = gain_const * l**-pathloss_exp``.

    ``gain_const`` is linear; use :meth:`from_db` for a dB value.
    """

    gain_const: float = db_to_linear(-17.8)
    pathloss_exp: float = 2.0

    def __post_init__(self):
        if not self.gain_const > 0:
            raise ValueError("gain_const must be > 0")

    @classmethod
    def from_db(cls, gain_db: float, pathloss_exp: float = 2.0) -> "ChannelModel":
        return cls(db_to_linear(gain_db), pathloss_exp)


@dataclass(frozen=True)
class SevCompute:
    """Maximum CPU speed of a SeV and the range of fractions handed to one TaV."""

    max_capability: float  # cycles/s
    alloc_fraction_range: tuple[float, float] = (0.2, 0.5)

    def __post_init__(self):
        if not self.max_capability > 0:
            raise ValueError("max_capability must be > 0")
        lo, hi = self.alloc_fraction_range
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"need 0 < lo <= hi <= 1, got {self.alloc_fraction_range}")

    def alloc_bounds(self) -> tuple[float, float]:
        lo, hi = self.alloc_fraction_range
        return lo * self.max_capability, hi * self.max_capability

    def sample_alloc(self, rng: np.random.Generator, size=None):
        """Allocated cycles/s, uniform between the two fractions of capability."""
        lo, hi = self.alloc_bounds()
        return rng.uniform(lo, hi, size=size)


@dataclass(frozen=True)
class DelayBreakdown:
    compute_s: float
    transmit_s: float
    total_s: float
    bit_delay_s_per_bit: float
    ul_rate: float
    dl_rate: float


def channel_gain(distance, model: ChannelModel):
    """Linear channel gain at ``distance`` meters. Accepts scalars or arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0")
    gain = model.gain_const * d ** (-model.pathloss_exp)
    return float(gain) if gain.ndim == 0 else gain


def link_rate(gain, radio: RadioParams, interference=0.0):
    """Shannon rate ``W log2(1 + P h / (noise + I))`` in bit/s."""
    sinr = radio.tx_power * np.asarray(gain, dtype=float) / (radio.noise_power + np.asarray(interference, dtype=float))
    rate = radio.bandwidth * np.log2(1.0 + sinr)
    return float(rate) if rate.ndim == 0 else rate


def computation_delay(task: Task, alloc_cycles_per_s: float) -> float:
    if not alloc_cycles_per_s > 0:
        raise ValueError("allocated computation capability must be > 0")
    return task.input_bits * task.intensity / alloc_cycles_per_s


def transmission_delay(task: Task, ul_rate: float, dl_rate: float) -> float:
    if not (ul_rate > 0 and dl_rate > 0):
        raise ValueError("link rates must be > 0")
    return task.input_bits / ul_rate + task.output_bits / dl_rate


def bit_delay(ul_rate, dl_rate, alloc, output_ratio: float, intensity: float):
    """Seconds needed per input bit: uplink + scaled downlink + compute.

    Vectorized over array arguments; this is the quantity the bandit learns.
    """
    return 1.0 / ul_rate + output_ratio / dl_rate + intensity / alloc


def offload_delay(
    task: Task,
    distance: float,
    radio: RadioParams,
    channel: ChannelModel,
    alloc: float,
    dl_distance: float | None = None,
) -> DelayBreakdown:
    """Full delay of offloading ``task`` to a SeV at ``distance``.

    Uplink and downlink share one gain unless ``dl_distance`` is given.
    ``total_s`` equals ``input_bits * bit_delay_s_per_bit`` up to rounding.
    """
    h_ul = channel_gain(distance, channel)
    h_dl = h_ul if dl_distance is None else channel_gain(dl_distance, channel)
    r_ul = link_rate(h_ul, radio, radio.ul_interference)
    r_dl = link_rate(h_dl, radio, radio.dl_interference)
    d_c = computation_delay(task, alloc)
    d_t = transmission_delay(task, r_ul, r_dl)
    u = bit_delay(r_ul, r_dl, alloc, task.output_ratio, task.intensity)
    return DelayBreakdown(
        compute_s=d_c,
        transmit_s=d_t,
        total_s=d_c + d_t,
        bit_delay_s_per_bit=u,
        ul_rate=r_ul,
        dl_rate=r_dl,
    )
