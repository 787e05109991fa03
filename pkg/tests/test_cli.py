import json
from pathlib import Path

import pytest

from rig import cli
from rig.config import load_config, parse_seeds, resolve
from rig.errors import ConfigError

TINY = """
[environment]
total_steps = 10
horizon = 5

[team]
n_robots = 2
alpha = 1

[targets]
n_targets = 2

[sensor]
psi_deg = 94.0
sigma_b_deg = 5.0
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY)
    return p


def test_simulate_writes_the_file_contract(tiny, tmp_path):
    out = tmp_path / "run"
    rc = cli.main(["simulate", "--config", str(tiny), "--modes", "resilient,nonresilient",
                   "--seeds", "3", "--out", str(out)])
    assert rc == 0
    names = sorted(p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file())
    assert len([n for n in names if n.startswith("timeline_")]) == 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["outputs"] + ["manifest.json"]) == names
    assert manifest["seeds"] == [0, 1, 2]


def test_csv_header_is_stable(tiny, tmp_path):
    out = tmp_path / "run"
    cli.main(["simulate", "--config", str(tiny), "--seeds", "1", "--out", str(out)])
    lines = (out / "timeline_resilient_0.csv").read_text().splitlines()
    assert lines[0] == "step,rmse_mean,rmse_peak,entropy_mean,logdet_raw,attacked_ids"
    assert len(lines) == 11
    assert (out / "summary.csv").read_text().splitlines()[0] == \
        "mode,seed,mean_rmse,peak_rmse,mean_entropy,attack_method"


def test_rerun_is_byte_identical(tiny, tmp_path):
    for name in ("a", "b"):
        cli.main(["simulate", "--config", str(tiny), "--seeds", "2", "--out", str(tmp_path / name)])
    for f in (tmp_path / "a").rglob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_threads_do_not_change_results(tiny, tmp_path, monkeypatch):
    cli.main(["simulate", "--config", str(tiny), "--seeds", "2", "--out", str(tmp_path / "a")])
    monkeypatch.setenv("RIG_THREADS", "2")
    cli.main(["simulate", "--config", str(tiny), "--seeds", "2", "--threads", "1",
              "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/summary.csv").read_bytes() == (tmp_path / "b/summary.csv").read_bytes()


def test_dry_run_writes_only_the_manifest(tiny, tmp_path):
    out = tmp_path / "dry"
    assert cli.main(["simulate", "--config", str(tiny), "--dry-run", "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["manifest.json"]


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[team]\nn_robot = 3\n")
    assert cli.main(["simulate", "--config", str(bad)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.toml")]) == 2
    assert cli.main(["simulate"]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_json_config_is_accepted(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"environment": {"total_steps": 10, "horizon": 5},
                             "team": {"n_robots": 2, "alpha": 0}, "targets": {"n_targets": 1}}))
    assert load_config(p).scenario().n_robots == 2


def test_degree_suffix_converts_once():
    cfg = resolve({"sensor": {"psi_deg": 180.0}})
    assert cfg.sensor["psi"] == pytest.approx(3.141592653589793)
    with pytest.raises(ConfigError):
        resolve({"sensor": {"r_sense_deg": 1.0}})
    with pytest.raises(ConfigError):
        resolve({"extra": {}})
    with pytest.raises(ConfigError):
        resolve({"environment": {"total_steps": 7, "horizon": 5}})


def test_config_hash_tracks_semantics_only():
    a = resolve({"run": {"out": "x", "plots": False}})
    b = resolve({"run": {"out": "y"}})
    c = resolve({"team": {"alpha": 1}})
    assert a.digest() == b.digest() != c.digest()


def test_seed_specs():
    assert parse_seeds(3) == [0, 1, 2]
    assert parse_seeds("2-4") == [2, 3, 4]
    assert parse_seeds("5,1") == [5, 1]
    with pytest.raises(ConfigError):
        parse_seeds(0)


def test_verify_bounds_lemmas_only(tmp_path):
    rc = cli.main(["verify-bounds", "--suites", "lemmas", "--instances", "5", "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "bounds_report.json").read_text())
    assert report["violations"] == 0 and {r["suite"] for r in report["records"]} == {"lemmas"}


def test_verify_bounds_self_test_hook_exits_3(tmp_path, capsys):
    rc = cli.main(["verify-bounds", "--suites", "lemmas", "--instances", "3",
                   "--scale-guarantee", "1.5", "--out", str(tmp_path)])
    assert rc == 3
    assert "counterexample" in capsys.readouterr().err


def test_verify_bounds_rejects_unknown_suite(tmp_path):
    assert cli.main(["verify-bounds", "--suites", "nope", "--out", str(tmp_path)]) == 2


def test_plan_dumps_json(tiny, tmp_path):
    out = tmp_path / "plan.json"
    assert cli.main(["plan", "--config", str(tiny), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["rounds"] == 2 * 2 + 1
    assert len(doc["bait"]) == 1 and set(doc["plans"]) == {"0", "1"}
    assert all(len(seq) == 5 for seq in doc["plans"].values())
