import filecmp
import json
import os

import pytest

from dropletlab import cli
from dropletlab.experiments import EXPERIMENTS, ExperimentConfig, validate


def test_config_round_trip_bit_exact():
    cfg = ExperimentConfig("moving-point", seed=7, out="o", n=[16, 32], T=3.0,
                           potentials=[{"family": "pointcharge", "c": 0.0625, "a": "tangent"}],
                           params={"x_half": 6.0, "dx": 0.05})
    text = cfg.to_json()
    back = ExperimentConfig.from_json(text)
    assert back == cfg
    assert back.to_json() == text


def test_unknown_key_is_config_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "droplet", "bogus": 1}))
    assert cli.main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    p.write_text("{not json")
    assert cli.main(["validate", "--config", str(p)]) == 2


def test_validate_reports():
    for e in EXPERIMENTS:
        assert validate(ExperimentConfig(e)) == []
    big = validate(ExperimentConfig("decay-suite", n=[10 ** 6]))
    assert any("conditioning" in v for v in big)
    small = validate(ExperimentConfig("droplet", grid={"h": 0.02, "half_width": 0.8}))
    assert any("cover" in v for v in small)


def test_list_experiments(capsys):
    assert cli.main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    assert all(e in out for e in EXPERIMENTS)


def test_run_writes_manifest_and_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "limits-figures", "--out", str(a), "--seed", "3"]) == 0
    assert cli.main(["run", "limits-figures", "--out", str(b), "--seed", "3"]) == 0
    man = json.loads((a / "manifest.json").read_text())
    assert man["passed"] and man["resolved"]["s"] == [2.0, 5.0, 8.0]
    assert {"ti_profile_s2.csv", "ti_profile_s5.csv", "ti_profile_s8.csv"} <= set(man["files"])
    csvs = sorted(f for f in os.listdir(a) if f.endswith(".csv"))
    match, mismatch, err = filecmp.cmpfiles(a, b, csvs, shallow=False)
    assert mismatch == [] and err == []
    cfg = ExperimentConfig.from_json((a / "config.json").read_text())
    assert cfg.seed == 3


def test_mc_same_seed_byte_identical(tmp_path):
    conf = {"experiment": "mc-crosscheck", "params": {"samples": 125000, "burn": 5000}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(conf))
    outs = []
    for name in ("a", "b"):
        cli.main(["run", "--config", str(p), "--out", str(tmp_path / name), "--seed", "5"])
        outs.append((tmp_path / name / "mc_radial_n8.csv").read_bytes())
    assert outs[0] == outs[1]


def test_failing_criterion_exit_code(tmp_path, monkeypatch):
    from dropletlab import experiments

    def fake(cfg, out, jobs):
        return [experiments.crit("X", "always red", False, 1.0, 0.0)], []
    monkeypatch.setitem(experiments.RUNNERS, "limits-figures", fake)
    assert cli.main(["run", "limits-figures", "--out", str(tmp_path / "o")]) == 1
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["passed"] is False and man["criteria"][0]["id"] == "X"
