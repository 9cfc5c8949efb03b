"""Command-line front end.

    vccoffload run --scenario synthetic_table1 --policy avucb,ucb1 --seeds 100 --out out/
    vccoffload bounds --scenario synthetic_table1_theory --out out/
    vccoffload verify

``run`` writes ``results.csv`` (one row per policy, seed and period) and
``summary.csv`` (one row per policy); ``--bounds`` adds ``bounds.csv``.
Every file starts with ``#`` comment lines carrying the scenario hash, the
seed list and the fully resolved scenario.  Floats are written with 17
significant digits, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bandit import POLICY_NAMES
from .bounds import bound_curve, inputs_from_estimate, lemma1_bound, theorem1_bound, theorem2_bound
from .engine import BatchResult, build_environment, estimate_mu, run_batch
from .scenario_file import ScenarioFileError, parse_scenario, scenario_hash, scenario_to_dict

RESULT_COLUMNS = ("scenario", "policy", "seed", "period", "chosen_arm", "x_bits", "delay_s", "cum_regret_s")
GOLDEN_DIR = Path(__file__).with_name("goldens")
GOLDEN_RUNS = {
    "synthetic_table1": ("avucb", "ucb1"),
    "highway_table2": POLICY_NAMES,
}
GOLDEN_SEEDS = (0,)


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def parse_seed_arg(text: str) -> list:
    """``"100"`` -> 0..99, ``"3,5,8"`` -> that list, ``"10-19"`` -> 10..19."""
    text = text.strip()
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    if "-" in text[1:]:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    n = int(text)
    if n < 1:
        raise ValueError("seed count must be >= 1")
    return list(range(n))


def _header(scenario, seeds) -> list:
    resolved = json.dumps(scenario_to_dict(scenario), sort_keys=True, default=str)
    return [
        f"# scenario={scenario.name} hash={scenario_hash(scenario)}",
        f"# seeds={','.join(str(s) for s in seeds)}",
        f"# resolved={resolved}",
    ]


def _render(header: list, columns, rows) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def results_rows(batch: BatchResult):
    for name, agg in batch.policies.items():
        for run in agg.runs:
            for i in range(run.horizon):
                yield (run.scenario, name, run.seed, i + 1, run.chosen[i],
                       float(run.x_bits[i]), float(run.delay_s[i]), float(run.cum_regret[i]))


def results_csv(batch: BatchResult) -> str:
    return _render(_header(batch.scenario, batch.seeds), RESULT_COLUMNS, results_rows(batch))


def summary_csv(batch: BatchResult) -> str:
    n_epochs = len(next(iter(batch.policies.values())).runs[0].epochs)
    cols = ["scenario", "policy", "n_seeds", "final_regret_mean_s", "final_regret_std_s",
            "avg_delay_mean_s", "avg_delay_std_s"]
    cols += [f"epoch{b + 1}_mean_delay_s" for b in range(n_epochs)]
    rows = []
    for name, agg in batch.policies.items():
        fr, ad = agg.final_regrets, agg.average_delays
        rows.append([batch.scenario.name, name, len(agg.runs), float(fr.mean()), float(fr.std()),
                     float(ad.mean()), float(ad.std()), *map(float, agg.epoch_mean_delays.mean(axis=0))])
    return _render(_header(batch.scenario, batch.seeds), cols, rows)


def bounds_rows(scenario):
    """Bound curves in the results schema, tagged ``bound:<name>`` in the policy column.

    Pull-count bounds put an expected count, not seconds, in the last column.
    """
    env = build_environment(scenario)
    est = estimate_mu(scenario, environment=env)
    inputs = inputs_from_estimate(scenario, env.epochs, est)
    periods = np.arange(1, scenario.horizon + 1)
    seed = scenario.seed
    blank = ("", "", "")
    if inputs.x0 is not None:
        for t, v in zip(periods, bound_curve(theorem1_bound, inputs, periods)):
            yield (scenario.name, "bound:theorem1", seed, int(t), *blank, float(v))
        acc = 0.0
        for b, ep in enumerate(env.epochs):
            acc += lemma1_bound(inputs, b)
            yield (scenario.name, "bound:lemma1_cumulative", seed, ep.end, *blank, acc)
    if len(env.epochs) == 1:
        curves = [theorem2_bound(inputs, int(t)) for t in periods]
        if curves[0][1] is not None:
            for t, (_, reg) in zip(periods, curves):
                yield (scenario.name, "bound:theorem2_regret", seed, int(t), *blank, float(reg))
        for arm in curves[0][0]:
            for t, (pulls, _) in zip(periods, curves):
                yield (scenario.name, f"bound:theorem2_pulls_arm{arm}", seed, int(t), *blank, float(pulls[arm]))


def bounds_csv(scenario) -> str:
    return _render(_header(scenario, [scenario.seed]), RESULT_COLUMNS, bounds_rows(scenario))


def _write_all(out_dir: Path, files: dict) -> None:
    """Write every file or none: temporaries first, then renames."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tmps = []
    try:
        for name, text in files.items():
            tmp = out_dir / f".{name}.tmp"
            tmp.write_text(text, encoding="utf-8")
            tmps.append((tmp, out_dir / name))
        for tmp, final in tmps:
            os.replace(tmp, final)
    finally:
        for tmp, _ in tmps:
            if tmp.exists():
                tmp.unlink()


def cmd_run(args) -> int:
    scenario = parse_scenario(args.scenario)
    policies = [p.strip().lower() for p in args.policy.split(",") if p.strip()]
    bad = [p for p in policies if p not in POLICY_NAMES]
    if bad:
        raise ValueError(f"unknown policies {bad}; choose from {', '.join(POLICY_NAMES)}")
    seeds = parse_seed_arg(args.seeds)
    batch = run_batch(scenario, policies, seeds, workers=args.workers)
    files = {"results.csv": results_csv(batch), "summary.csv": summary_csv(batch)}
    if args.bounds:
        files["bounds.csv"] = bounds_csv(scenario)
    _write_all(Path(args.out), files)
    for name, agg in batch.policies.items():
        print(f"{name:>7}: final regret {agg.final_regrets.mean():.4g} s, "
              f"average delay {agg.average_delays.mean():.4g} s over {len(seeds)} seeds")
    return 0


def cmd_bounds(args) -> int:
    scenario = parse_scenario(args.scenario)
    _write_all(Path(args.out), {"bounds.csv": bounds_csv(scenario)})
    return 0


def _golden_text(name: str) -> str:
    scenario = parse_scenario(name)
    batch = run_batch(scenario, GOLDEN_RUNS[name], GOLDEN_SEEDS)
    return _render([], RESULT_COLUMNS, results_rows(batch))


def _compare(expected: str, actual: str, rtol: float = 1e-12) -> str | None:
    exp = list(csv.reader(io.StringIO(expected)))
    act = list(csv.reader(io.StringIO(actual)))
    if len(exp) != len(act):
        return f"row count {len(act)} != golden {len(exp)}"
    for i, (er, ar) in enumerate(zip(exp, act), 1):
        if len(er) != len(ar):
            return f"row {i}: field count differs"
        for e, a in zip(er, ar):
            if e == a:
                continue
            try:
                fe, fa = float(e), float(a)
            except ValueError:
                return f"row {i}: {a!r} != golden {e!r}"
            if not math.isclose(fe, fa, rel_tol=rtol, abs_tol=0.0):
                return f"row {i}: {a} != golden {e}"
    return None


def cmd_verify(args) -> int:
    failures = 0
    for name in GOLDEN_RUNS:
        path = GOLDEN_DIR / f"{name}.csv"
        text = _golden_text(name)
        if args.regenerate:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            print(f"regenerated {path}")
            continue
        if not path.is_file():
            print(f"FAIL {name}: golden file {path} missing")
            failures += 1
            continue
        problem = _compare(path.read_text(encoding="utf-8"), text)
        print(f"{'FAIL' if problem else 'ok  '} {name}" + (f": {problem}" if problem else ""))
        failures += problem is not None
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vccoffload", description="Learning-based task offloading experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run policies over seeds and write CSV results")
    run.add_argument("--scenario", required=True, help="scenario file or shipped scenario name")
    run.add_argument("--policy", required=True, help=f"comma-separated subset of {','.join(POLICY_NAMES)}")
    run.add_argument("--seeds", default="1", help="count N (seeds 0..N-1), list a,b,c or range lo-hi")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--bounds", action="store_true", help="also write bounds.csv")
    run.add_argument("--workers", type=int, default=1, help="parallel processes over seeds")
    run.set_defaults(func=cmd_run)

    bnd = sub.add_parser("bounds", help="write regret bound curves")
    bnd.add_argument("--scenario", required=True)
    bnd.add_argument("--out", required=True)
    bnd.set_defaults(func=cmd_bounds)

    ver = sub.add_parser("verify", help="rerun the shipped golden experiments and compare")
    ver.add_argument("--regenerate", action="store_true", help="overwrite the goldens instead")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioFileError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"vccoffload {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
