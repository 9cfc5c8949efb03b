"""YAML scenario files: parsing, validation and canonical serialization.

Quantities carry their unit in the key name (``bandwidth_hz``,
``tx_power_w``, ``x0_bits``, ...).  The channel constant is given either as
``gain_db`` or ``gain_linear``.  Unknown keys are rejected, and every error
names the offending key and its line.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict
from pathlib import Path

import yaml

from .bandit import PolicyConfig, arm_sort_key
from .engine import Epoch, LoadModel, Scenario
from .mobility import MobilityConfig
from .vcc_model import ChannelModel, RadioParams, SevCompute, db_to_linear

SCENARIO_DIR = Path(__file__).with_name("scenarios")
DEFAULT_SEED = 0
_MISSING = object()


class ScenarioFileError(Exception):
    pass


class _LineDict(dict):
    line = 0

    def __init__(self):
        super().__init__()
        self.lines = {}


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _LineDict()
    out.line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        line = key_node.start_mark.line + 1
        if key in out:
            raise ScenarioFileError(f"line {line}: duplicate key {key!r}")
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = line
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


class _Section:
    """Pops keys off one mapping and complains about leftovers."""

    def __init__(self, data, path: str, source: str):
        if not isinstance(data, dict):
            raise ScenarioFileError(f"{source}: {path or 'top level'} must be a mapping")
        self.data = data
        self.path = path
        self.source = source
        self.used = set()

    def _where(self, key) -> str:
        line = getattr(self.data, "lines", {}).get(key) or getattr(self.data, "line", 0)
        full = f"{self.path}.{key}" if self.path else str(key)
        return f"{self.source}:{line}: key {full!r}"

    def fail(self, key, msg):
        raise ScenarioFileError(f"{self._where(key)}: {msg}")

    def has(self, key) -> bool:
        return key in self.data

    def get(self, key, conv=None, default=_MISSING):
        self.used.add(key)
        if key not in self.data:
            if default is _MISSING:
                line = getattr(self.data, "line", 0)
                where = f"{self.path}.{key}" if self.path else key
                raise ScenarioFileError(f"{self.source}:{line}: missing required key {where!r}")
            return default
        value = self.data[key]
        if conv is None:
            return value
        try:
            return conv(value)
        except (TypeError, ValueError) as exc:
            self.fail(key, str(exc))

    def sub(self, key, default=_MISSING) -> "_Section":
        if key not in self.data and default is not _MISSING:
            self.used.add(key)
            return _Section(_LineDict(), self._full(key), self.source)
        value = self.get(key)
        if not isinstance(value, dict):
            self.fail(key, "must be a mapping")
        return _Section(value, self._full(key), self.source)

    def _full(self, key) -> str:
        return f"{self.path}.{key}" if self.path else str(key)

    def finish(self):
        for key in self.data:
            if key not in self.used:
                self.fail(key, "unknown key")


def _num(v) -> float:
    if isinstance(v, bool):
        raise ValueError(f"expected a number, got {v!r}")
    x = float(v)  # also accepts "3e9", which YAML 1.1 leaves as a string
    if math.isnan(x):
        raise ValueError("NaN is not allowed")
    return x


def _int(v) -> int:
    if isinstance(v, bool) or float(v) != int(float(v)):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(float(v))


def _bool(v) -> bool:
    if not isinstance(v, bool):
        raise ValueError(f"expected true or false, got {v!r}")
    return v


def _pair(v) -> tuple:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValueError(f"expected a [lo, hi] pair, got {v!r}")
    return (_num(v[0]), _num(v[1]))


def _arm_id(v):
    if isinstance(v, bool):
        raise ValueError(f"bad SeV id {v!r}")
    return v


def resolve_path(name_or_path) -> Path:
    """A file path, or the name of a shipped scenario (with or without ``.yaml``)."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    for cand in (SCENARIO_DIR / p.name, SCENARIO_DIR / f"{p.name}.yaml"):
        if cand.is_file():
            return cand
    raise FileNotFoundError(f"no scenario file or shipped scenario named {name_or_path!r}")


def shipped_scenarios() -> list:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def parse_scenario(path) -> Scenario:
    path = resolve_path(path)
    source = str(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = yaml.load(fh, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        raise ScenarioFileError(f"{source}: not valid YAML: {exc}") from None
    except ScenarioFileError as exc:
        raise ScenarioFileError(f"{source}: {exc}") from None
    if raw is None:
        raise ScenarioFileError(f"{source}: empty scenario file")
    top = _Section(raw, "", source)

    name = top.get("name", str, path.stem)
    horizon = top.get("horizon", _int)
    if not top.has("seed"):
        warnings.warn(f"{source}: no 'seed' given, using {DEFAULT_SEED}", stacklevel=2)
    seed = top.get("seed", _int, DEFAULT_SEED)
    if seed < 0:
        top.fail("seed", "must be >= 0")

    alloc_default = top.get("alloc_fraction", _pair, (0.2, 0.5))
    sevs_sec = top.sub("sevs")
    sevs = {}
    for arm in list(sevs_sec.data):
        s = sevs_sec.sub(arm)
        try:
            sevs[_arm_id(arm)] = SevCompute(
                s.get("max_capability_hz", _num), s.get("alloc_fraction", _pair, alloc_default)
            )
        except ValueError as exc:
            sevs_sec.fail(arm, str(exc))
        s.finish()
    sevs_sec.finish()

    mob = top.sub("mobility", default=None)
    mode = mob.get("mode", str, "synthetic")
    try:
        mobility = MobilityConfig(
            comm_range=mob.get("comm_range_m", _num, 200.0),
            mode=mode,
            dist_min=mob.get("dist_min_m", _num, 10.0),
            dist_max=mob.get("dist_max_m", _num, 200.0),
            step_max=mob.get("step_max_m", _num, 10.0),
            trace_path=mob.get("trace_path", str, None),
            tav_id=mob.get("tav_id", _arm_id, None),
        )
    except ValueError as exc:
        top.fail("mobility", str(exc))
    mob.finish()

    epochs = None
    if top.has("epochs"):
        if mode == "trace":
            top.fail("epochs", "epochs are derived from the trace in trace mode")
        items = top.get("epochs")
        if not isinstance(items, list):
            top.fail("epochs", "must be a list")
        epochs = []
        for i, item in enumerate(items):
            e = _Section(item, f"epochs[{i}]", source)
            try:
                epochs.append(Epoch(e.get("start", _int), e.get("end", _int),
                                    tuple(sorted(e.get("active", list), key=arm_sort_key))))
            except ValueError as exc:
                top.fail("epochs", f"entry {i}: {exc}")
            e.finish()
        epochs = tuple(epochs)

    task = top.sub("task")
    load_sec = task.sub("load")
    kind = load_sec.get("kind", str)
    try:
        if kind == "fixed":
            load = LoadModel("fixed", x0=load_sec.get("x0_bits", _num))
        elif kind == "uniform":
            load = LoadModel("uniform", x_min=load_sec.get("x_min_bits", _num), x_max=load_sec.get("x_max_bits", _num))
        else:
            load_sec.fail("kind", "must be 'fixed' or 'uniform'")
    except ValueError as exc:
        task.fail("load", str(exc))
    load_sec.finish()
    output_ratio = task.get("output_ratio", _num, 0.1)
    intensity = task.get("intensity_cycles_per_bit", _num, 1000.0)
    task.finish()

    rad = top.sub("radio", default=None)
    try:
        radio = RadioParams(
            bandwidth=rad.get("bandwidth_hz", _num, 10e6),
            tx_power=rad.get("tx_power_w", _num, 0.1),
            noise_power=rad.get("noise_power_w", _num, 1e-13),
            ul_interference=rad.get("ul_interference_w", _num, 0.0),
            dl_interference=rad.get("dl_interference_w", _num, 0.0),
        )
    except ValueError as exc:
        top.fail("radio", str(exc))
    stochastic = rad.get("stochastic_interference", _bool, False)
    rad.finish()

    ch = top.sub("channel", default=None)
    if ch.has("gain_db") and ch.has("gain_linear"):
        ch.fail("gain_linear", "give either gain_db or gain_linear, not both")
    if ch.has("gain_linear"):
        gain = ch.get("gain_linear", _num)
    else:
        gain = db_to_linear(ch.get("gain_db", _num, -17.8))
    try:
        channel = ChannelModel(gain, ch.get("pathloss_exp", _num, 2.0))
    except ValueError as exc:
        top.fail("channel", str(exc))
    ch.finish()

    pol = top.sub("policy", default=None)
    beta_raw = pol.get("beta", None, 2.0)
    beta_rule = "fixed"
    if beta_raw == "theory":
        beta_rule, beta = "theory", 2.0
    else:
        try:
            beta = _num(beta_raw)
        except (TypeError, ValueError) as exc:
            pol.fail("beta", f"{exc} (or 'theory')")
    try:
        policy = PolicyConfig(
            beta=beta,
            x_lower=pol.get("x_lower_bits", _num, math.inf),
            x_upper=pol.get("x_upper_bits", _num, math.inf),
            tie_break=pol.get("tie_break", str, "lowest_id"),
            load_unit_bits=pol.get("load_unit_bits", _num, 1e6),
            reappear=pol.get("reappear", str, "retain"),
        )
    except ValueError as exc:
        top.fail("policy", str(exc))
    pol.finish()

    est = top.sub("estimation", default=None)
    mu_samples = est.get("mu_samples", _int, 20000)
    safety = est.get("u_max_safety", _num, 1.05)
    est.finish()
    top.finish()

    try:
        return Scenario(
            name=name,
            horizon=horizon,
            sevs=sevs,
            epochs=epochs,
            load=load,
            output_ratio=output_ratio,
            intensity=intensity,
            radio=radio,
            channel=channel,
            mobility=mobility,
            policy=policy,
            beta_rule=beta_rule,
            seed=seed,
            mu_samples=mu_samples,
            u_max_safety=safety,
            stochastic_interference=stochastic,
            base_dir=str(path.parent),
        )
    except ValueError as exc:
        raise ScenarioFileError(f"{source}: {exc}") from None


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully resolved, JSON-friendly view of a scenario (no file paths outside the trace name)."""
    d = asdict(scenario)
    d.pop("base_dir")
    d["sevs"] = {str(k): v for k, v in sorted(d["sevs"].items(), key=lambda kv: arm_sort_key(kv[0]))}
    return d


def scenario_hash(scenario: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(scenario), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
