from __future__ import annotations

import copy
import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from toplyap import cli
from toplyap.cli import CSV_COLUMNS, EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from toplyap.config import ConfigError, locate, parse_config
from toplyap.errors import InvariantViolation

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
LOG_PHI = math.log((1 + math.sqrt(5)) / 2)

# smaller workloads than the shipped configs so the suite stays fast
FAST_PARAMS = {
    "jsr": {"n": 14, "k_max": 6},
    "lyapunov": {"n": 20000, "runs": 2},
    "periodic-approx": {"eps": 0.05, "n_estimate": 20000, "runs": 2},
    "optimal-orbit": {"k_max": 6},
    "pressure": {"n": 8, "q_list": [0, 0.5, 1, 2]},
    "zero-temp": {"n": 8, "q_list": [1, 2, 4, 8, 16]},
    "oracle-check": {"quick": True},
}


def load(name: str) -> dict:
    return json.loads((CONFIGS / name).read_text())


def write_config(tmp_path: Path, cfg: dict, name: str = "cfg.json") -> Path:
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return p


def run(command: str, cfg_path: Path, out: Path, *extra: str) -> tuple[int, dict | None]:
    rc = main([command, "--config", str(cfg_path), "--out", str(out), *extra])
    js = out / f"{command}.json"
    return rc, json.loads(js.read_text()) if js.exists() else None


@pytest.fixture
def fast_pair(tmp_path):
    cfg = load("matrix_pair.json")
    cfg["params"] = FAST_PARAMS
    return write_config(tmp_path, cfg)


@pytest.mark.parametrize("command", sorted(CSV_COLUMNS))
def test_every_command_writes_json_and_csv(command, fast_pair, tmp_path, capsys):
    out = tmp_path / "out"
    rc, rec = run(command, fast_pair, out)
    assert rc == EXIT_OK, capsys.readouterr().err
    assert rec["command"] == command and rec["wall_time"] >= 0
    assert set(rec) == {"command", "version", "config", "result", "trace_columns", "wall_time"}
    assert "converged" in rec["result"]
    with (out / f"{command}.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS[command] and len(rows) > 1
    assert all(len(r) == len(rows[0]) for r in rows)


def test_jsr_result_values(fast_pair, tmp_path):
    _, rec = run("jsr", fast_pair, tmp_path / "o")
    res = rec["result"]
    assert res["lower"] <= 0.48121 + 1e-5 and res["lower"] >= 0.48121 - 1e-5
    assert res["lower"] <= LOG_PHI <= res["upper"]
    assert res["certified"] and res["lower_witness"]["root"] == [0, 1]


def test_pressure_entropy_configs(tmp_path):
    _, rec = run("pressure", CONFIGS / "full_shift_entropy.json", tmp_path / "a")
    assert rec["result"]["values"] == [pytest.approx(math.log(2), abs=1e-15)]
    _, rec = run("pressure", CONFIGS / "golden_mean_entropy.json", tmp_path / "b")
    assert abs(rec["result"]["values"][0] - LOG_PHI) < 0.02
    assert rec["result"]["values"][0] == pytest.approx(rec["result"]["entropy_check"])


def test_pressure_reports_variational_gaps(fast_pair, tmp_path):
    _, rec = run("pressure", fast_pair, tmp_path / "o")
    gaps = rec["result"]["variational_gaps"]
    assert set(gaps) == {"0.0", "0.5", "1.0", "2.0"}
    assert all(g >= -1e-9 for v in gaps.values() for g in v)


def test_oracle_check_torus_passes(tmp_path, capsys):
    cfg = load("punctured_torus.json")
    cfg["params"] = {"oracle-check": {"quick": True}}
    rc, rec = run("oracle-check", write_config(tmp_path, cfg), tmp_path / "o")
    out = capsys.readouterr().out
    assert rc == EXIT_OK and rec["result"]["all_passed"]
    assert "PASS" in out and "FAIL" not in out


def test_oracle_check_failure_exits_3(fast_pair, tmp_path, monkeypatch, capsys):
    from toplyap.oracles import CheckResult
    monkeypatch.setattr(cli, "run_suite",
                        lambda *a, **k: [CheckResult("fake", False, 1, "forced failure")])
    rc, rec = run("oracle-check", fast_pair, tmp_path / "o")
    assert rc == EXIT_INVARIANT and not rec["result"]["all_passed"]
    assert "FAIL fake" in capsys.readouterr().out


def test_surface_file_and_rational_configs(tmp_path):
    rc, rec = run("jsr", CONFIGS / "torus_surface_file.json", tmp_path / "a")
    assert rc == EXIT_OK and rec["result"]["upper"] >= rec["result"]["lower"] - rec["result"]["slack"]
    rc, rec = run("lyapunov", CONFIGS / "rational_sft.json", tmp_path / "b")
    assert rc == EXIT_OK and math.isfinite(rec["result"]["estimates"][0]["value"])


def test_config_echo_reproduces_result(fast_pair, tmp_path):
    for command in ("jsr", "periodic-approx", "zero-temp"):
        _, first = run(command, fast_pair, tmp_path / "a", "--seed", "5", "--threads", "2")
        assert first["config"]["seed"] == 5 and first["config"]["threads"] == 2
        echo = write_config(tmp_path, first["config"], "echo.json")
        _, second = run(command, echo, tmp_path / "b")
        assert second["result"] == first["result"]
        assert (tmp_path / "a" / f"{command}.csv").read_text() == \
            (tmp_path / "b" / f"{command}.csv").read_text()


def test_thread_override_keeps_results(fast_pair, tmp_path):
    results = []
    for th in ("1", "4", "8"):
        _, rec = run("jsr", fast_pair, tmp_path / th, "--threads", th)
        results.append(rec["result"])
    assert results[0] == results[1] == results[2]


def test_seed_changes_sampled_results(fast_pair, tmp_path):
    _, a = run("lyapunov", fast_pair, tmp_path / "a", "--seed", "1")
    _, b = run("lyapunov", fast_pair, tmp_path / "b", "--seed", "2")
    assert a["result"] != b["result"]


def test_writes_only_into_out_dir(fast_pair, tmp_path, monkeypatch):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    before = sorted(p.name for p in tmp_path.iterdir())
    rc = main(["pressure", "--config", str(fast_pair), "--out", "results/x"])
    assert rc == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == before
    assert sorted(str(p.relative_to(work)) for p in work.rglob("*") if p.is_file()) == \
        ["results/x/pressure.csv", "results/x/pressure.json"]


def test_default_out_dir_from_config(fast_pair, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = json.loads(fast_pair.read_text())
    del cfg["output"]
    p = write_config(tmp_path, cfg, "noout.json")
    assert main(["pressure", "--config", str(p)]) == EXIT_OK
    assert (tmp_path / "out" / "pressure.json").exists()


# -- error handling ----------------------------------------------------------------------

def expect_config_error(capsys, argv, line: int | None = None, fragment: str = ""):
    rc = main(argv)
    err = capsys.readouterr().err
    assert rc == EXIT_CONFIG, err
    if line is not None:
        assert f":{line}:" in err, err
    assert fragment in err
    return err


def test_bad_json_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "system": {"full_shift": 2},\n  "seed": 1,,\n}\n')
    expect_config_error(capsys, ["jsr", "--config", str(p)], line=3, fragment="invalid JSON")


def test_schema_error_reports_line(tmp_path, capsys):
    cfg = load("matrix_pair.json")
    cfg["seed"] = -4
    p = write_config(tmp_path, cfg)
    line = p.read_text().splitlines().index('  "seed": -4,') + 1
    expect_config_error(capsys, ["jsr", "--config", str(p)], line=line, fragment="seed")


def test_nested_schema_error_reports_line(tmp_path, capsys):
    cfg = load("matrix_pair.json")
    cfg["params"]["jsr"]["n"] = 0
    p = write_config(tmp_path, cfg)
    lines = p.read_text().splitlines()
    line = next(i for i, l in enumerate(lines, 1) if l.strip() == '"n": 0,')
    expect_config_error(capsys, ["jsr", "--config", str(p)], line=line, fragment="params/jsr/n")


def test_unknown_key_and_type(tmp_path, capsys):
    cfg = load("matrix_pair.json")
    cfg["bogus"] = 1
    expect_config_error(capsys, ["jsr", "--config", str(write_config(tmp_path, cfg))])
    cfg = load("matrix_pair.json")
    cfg["target"]["type"] = "tree"
    expect_config_error(capsys, ["jsr", "--config", str(write_config(tmp_path, cfg))])


def test_semantic_errors(tmp_path, capsys):
    cfg = load("matrix_pair.json")
    cfg["assignment"]["1"] = "C"
    err = expect_config_error(capsys, ["jsr", "--config", str(write_config(tmp_path, cfg))],
                              fragment="unknown generator")
    assert "assignment" in err
    cfg = load("matrix_pair.json")
    cfg["target"]["generators"]["A"] = [[1, 1], [1, 1]]
    expect_config_error(capsys, ["jsr", "--config", str(write_config(tmp_path, cfg))])
    cfg = load("golden_mean_entropy.json")
    cfg["chain"] = {"P": [[0.5, 0.5], [0.5, 0.5]]}
    expect_config_error(capsys, ["lyapunov", "--config", str(write_config(tmp_path, cfg))],
                        fragment="chain")
    cfg = load("matrix_pair.json")
    cfg["chain"] = {"bernoulli": [0.5, 0.6]}
    expect_config_error(capsys, ["lyapunov", "--config", str(write_config(tmp_path, cfg))])


def test_missing_chain_and_file(tmp_path, capsys):
    expect_config_error(capsys, ["lyapunov", "--config", str(CONFIGS / "full_shift_entropy.json"),
                                 "--out", str(tmp_path)], fragment="chain")
    expect_config_error(capsys, ["jsr", "--config", str(tmp_path / "nope.json")],
                        fragment="cannot read")
    cfg = load("torus_surface_file.json")
    cfg["target"]["surface_file"] = "missing.json"
    expect_config_error(capsys, ["jsr", "--config", str(write_config(tmp_path, cfg))],
                        fragment="surface")


def test_bad_override(fast_pair, capsys):
    expect_config_error(capsys, ["jsr", "--config", str(fast_pair), "--threads", "0"],
                        fragment="threads")


def test_invariant_violation_exits_3(fast_pair, tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise InvariantViolation("lower bound exceeds upper bound")
    monkeypatch.setattr(cli, "metric_jsr", boom)
    rc = main(["jsr", "--config", str(fast_pair), "--out", str(tmp_path / "o")])
    assert rc == EXIT_INVARIANT
    assert "invariant violation" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_locate_lines():
    text = '{\n "a": 1,\n "b": {\n   "c": [1,\n     2]\n }\n}'
    assert locate(text, ["a"]) == 2
    assert locate(text, ["b", "c"]) == 4
    assert locate(text, ["b", "c", 1]) == 5
    assert locate(text, ["b", "zzz"]) == 3
    with pytest.raises(ConfigError) as ei:
        parse_config(text, "t.json")
    assert str(ei.value).startswith("t.json:")


def test_shipped_configs_validate():
    for p in CONFIGS.glob("*.json"):
        parse_config(p.read_text(), str(p))


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "toplyap.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("toplyap ")
    r = subprocess.run([sys.executable, "-m", "toplyap.cli", "pressure", "--config",
                        str(CONFIGS / "full_shift_entropy.json"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "pressure.json").read_text())["result"]["word_count"] == 1024
