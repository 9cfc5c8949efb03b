import shutil

import pytest

from vccoffload import cli
from vccoffload.engine import build_environment
from vccoffload.scenario_file import (
    SCENARIO_DIR,
    ScenarioFileError,
    parse_scenario,
    scenario_hash,
    shipped_scenarios,
)

MINIMAL = """\
name: tiny
horizon: 20
{seed}
sevs:
  1: {{max_capability_hz: 3e9}}
  2: {{max_capability_hz: 4.0e+9}}
epochs:
  - {{start: 1, end: 20, active: [1, 2]}}
task:
  load: {{kind: fixed, x0_bits: 600000}}
{extra}
"""


def write_scenario(tmp_path, seed="seed: 3", extra=""):
    p = tmp_path / "tiny.yaml"
    p.write_text(MINIMAL.format(seed=seed, extra=extra))
    return p


class TestScenarioFiles:
    def test_all_shipped_parse(self):
        assert set(shipped_scenarios()) >= {"synthetic_table1", "highway_table2", "random_load"}
        for name in shipped_scenarios():
            parse_scenario(name)

    def test_table1(self):
        sc = parse_scenario("synthetic_table1")
        assert sc.horizon == 1200
        assert [(e.start, e.end) for e in sc.epochs] == [(1, 400), (401, 800), (801, 1200)]
        assert {k: v.max_capability for k, v in sc.sevs.items()} == {1: 3e9, 2: 4e9, 3: 6e9, 4: 5e9, 5: 2e9}
        assert sc.load.x0 == 600000 and sc.policy.beta == 2.0

    def test_table2(self):
        sc = parse_scenario("highway_table2")
        assert sc.horizon == 400
        assert {k: v.max_capability for k, v in sc.sevs.items()} == {1: 3e9, 2: 2e9, 3: 2.5e9, 4: 4.5e9, 5: 3.5e9}
        env = build_environment(sc)
        occ, dep = {}, {}
        for t, cands in enumerate(env.candidates, 1):
            for a in cands:
                occ.setdefault(a, t)
                dep[a] = t
        assert [occ[a] for a in range(1, 6)] == [1, 1, 1, 118, 320]
        assert [dep[a] for a in range(1, 6)] == [400, 400, 400, 400, 343]

    def test_missing_seed_defaults_with_warning(self, tmp_path):
        with pytest.warns(UserWarning, match="seed"):
            sc = parse_scenario(write_scenario(tmp_path, seed=""))
        assert sc.seed == 0

    def test_string_exponent_numbers(self, tmp_path):
        assert parse_scenario(write_scenario(tmp_path)).sevs[1].max_capability == 3e9

    def test_unknown_key_names_key_and_line(self, tmp_path):
        p = write_scenario(tmp_path, extra="radio:\n  bandwith_hz: 1e7\n")
        with pytest.raises(ScenarioFileError, match=r"tiny\.yaml:12: key 'radio\.bandwith_hz': unknown key"):
            parse_scenario(p)

    def test_bad_value_names_key_and_line(self, tmp_path):
        p = write_scenario(tmp_path, extra="policy:\n  beta: lots\n")
        with pytest.raises(ScenarioFileError, match=r":12: key 'policy\.beta'"):
            parse_scenario(p)

    def test_missing_required_key(self, tmp_path):
        p = tmp_path / "x.yaml"
        p.write_text("name: x\nsevs: {1: {max_capability_hz: 1e9}}\n")
        with pytest.raises(ScenarioFileError, match="horizon"):
            parse_scenario(p)

    def test_theory_beta(self):
        assert parse_scenario("synthetic_table1_theory").beta_rule == "theory"

    def test_hash_changes_with_content(self, tmp_path):
        a = parse_scenario(write_scenario(tmp_path))
        b = parse_scenario(write_scenario(tmp_path, seed="seed: 4"))
        assert scenario_hash(a) != scenario_hash(b)
        assert scenario_hash(a) == scenario_hash(parse_scenario(write_scenario(tmp_path)))


def read_data_rows(path):
    lines = path.read_text().splitlines()
    return [ln for ln in lines if not ln.startswith("#")]


class TestCommands:
    def test_run_writes_outputs(self, tmp_path):
        sc = write_scenario(tmp_path)
        out = tmp_path / "out"
        assert cli.main(["run", "--scenario", str(sc), "--policy", "avucb,ucb1", "--seeds", "2",
                         "--out", str(out), "--bounds"]) == 0
        text = (out / "results.csv").read_text()
        assert text.startswith("# scenario=tiny hash=")
        assert "# seeds=0,1" in text
        rows = read_data_rows(out / "results.csv")
        assert rows[0] == ",".join(cli.RESULT_COLUMNS)
        assert len(rows) == 1 + 2 * 2 * 20
        summary = read_data_rows(out / "summary.csv")
        assert len(summary) == 3 and summary[0].startswith("scenario,policy,n_seeds")
        assert "bound:theorem1" in (out / "bounds.csv").read_text()

    def test_rerun_is_byte_identical(self, tmp_path):
        sc = write_scenario(tmp_path)
        for d in ("a", "b"):
            cli.main(["run", "--scenario", str(sc), "--policy", "avucb", "--seeds", "1", "--out", str(tmp_path / d)])
        assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()

    def test_bounds_command(self, tmp_path):
        assert cli.main(["bounds", "--scenario", "random_load_theory", "--out", str(tmp_path)]) == 0
        text = (tmp_path / "bounds.csv").read_text()
        assert "bound:theorem2_regret" in text and "bound:theorem2_pulls_arm" in text

    def test_verify_passes(self, capsys):
        assert cli.main(["verify"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_verify_catches_tampering(self, tmp_path, monkeypatch, capsys):
        gold = tmp_path / "goldens"
        shutil.copytree(cli.GOLDEN_DIR, gold)
        path = gold / "synthetic_table1.csv"
        lines = path.read_text().splitlines()
        fields = lines[5].split(",")
        fields[6] = repr(float(fields[6]) * (1 + 1e-9))
        lines[5] = ",".join(fields)
        path.write_text("\n".join(lines) + "\n")
        monkeypatch.setattr(cli, "GOLDEN_DIR", gold)
        assert cli.main(["verify"]) == 1
        assert "FAIL synthetic_table1: row 6" in capsys.readouterr().out

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--scenario", "no_such_scenario", "--policy", "avucb", "--out", "{out}"],
            ["run", "--scenario", "synthetic_table1", "--policy", "thompson", "--out", "{out}"],
            ["run", "--scenario", "{bad}", "--policy", "avucb", "--out", "{out}"],
        ],
    )
    def test_failures_exit_nonzero_without_outputs(self, tmp_path, capsys, argv):
        bad = tmp_path / "bad.yaml"
        bad.write_text("horizon: [1\n")
        out = tmp_path / "out"
        argv = [a.format(out=out, bad=bad) for a in argv]
        assert cli.main(argv) == 1
        assert "error" in capsys.readouterr().err
        assert not out.exists() or not any(out.iterdir())

    def test_write_failure_leaves_nothing(self, tmp_path, monkeypatch):
        calls = []
        real = cli.os.replace

        def flaky(src, dst):
            calls.append(dst)
            if len(calls) == 2:
                raise OSError("disk full")
            real(src, dst)

        monkeypatch.setattr(cli.os, "replace", flaky)
        out = tmp_path / "out"
        with pytest.raises(OSError):
            cli._write_all(out, {"a.csv": "1\n", "b.csv": "2\n"})
        assert not any(p.name.startswith(".") for p in out.iterdir())

    def test_seed_argument_forms(self):
        assert cli.parse_seed_arg("3") == [0, 1, 2]
        assert cli.parse_seed_arg("4,9") == [4, 9]
        assert cli.parse_seed_arg("10-12") == [10, 11, 12]
        with pytest.raises(ValueError):
            cli.parse_seed_arg("0")


def test_scenario_dir_ships_trace():
    assert (SCENARIO_DIR / "highway_table2_trace.csv").is_file()
