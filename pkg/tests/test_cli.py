"""End-to-end tests for the `gpargmax` command-line runner."""

import json

import pytest

from gpargmax import cli
from gpargmax.config import ConfigError

FAST_CONFIG = "kernel-identities"


def _read_summary(outdir):
    return json.loads((outdir / "summary.json").read_text())


def test_list_experiments_catalog(capsys):
    assert cli.main(["list-experiments"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    names = {line.split()[0] for line in out}
    assert {"chernoff-baseline", "erm-convergence", "rkhs-maxscore",
            "kernel-identities", "mean-tail", "multidim-continuity",
            "discontinuity", "bilinear-closed-form", "ci-maxscore"} <= names
    bundled = cli._bundled_configs()
    assert len(out) == len(bundled)
    # Every catalog line carries a criterion tag and a description.
    for line in out:
        assert "[AC-" in line


def test_bundled_configs_are_well_formed():
    for name, (_, cfg) in cli._bundled_configs().items():
        assert cfg["kind"] in cli.KINDS, name
        assert "seed" in cfg, name
        assert cfg.get("description"), name
        assert cfg.get("criterion", "").startswith("AC-"), name


def test_run_bundled_pass_exit0(tmp_path):
    out = tmp_path / "res"
    assert cli.main(["run", "--config", FAST_CONFIG, "--out", str(out)]) == 0
    summary = _read_summary(out)
    assert summary["schema_version"] == 1
    assert summary["status"] == "pass"
    assert summary["kind"] == "check-kernel"
    assert len(summary["config_hash"]) == 16
    assert all(v["passed"] for v in summary["verdicts"].values())


def test_run_reproducible_modulo_timestamp(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", FAST_CONFIG, "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", FAST_CONFIG, "--out", str(out2)]) == 0
    s1, s2 = _read_summary(out1), _read_summary(out2)
    s1.pop("timestamp"), s2.pop("timestamp")
    assert s1 == s2
    for p1 in sorted(out1.iterdir()):
        if p1.name == "summary.json":
            continue
        assert p1.read_bytes() == (out2 / p1.name).read_bytes()


def test_seed_override_recorded(tmp_path):
    out = tmp_path / "res"
    assert cli.main(["run", "--config", FAST_CONFIG, "--out", str(out),
                     "--seed", "7"]) == 0
    assert _read_summary(out)["seed"] == 7


def test_unknown_config_name_exit1(tmp_path, capsys):
    assert cli.main(["run", "--config", "no-such-experiment",
                     "--out", str(tmp_path / "res")]) == 1
    assert "not found" in capsys.readouterr().err


def test_malformed_config_exit1_named_field_no_artifacts(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('kind = "check-kernel"\nseed = 1\n[cov]\nvariant = "nope"\n')
    out = tmp_path / "res"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "config field 'cov.variant'" in err
    assert not any(out.iterdir())


def test_invalid_toml_exit1(tmp_path, capsys):
    cfg = tmp_path / "broken.toml"
    cfg.write_text("kind = [unterminated\n")
    assert cli.main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / "res")]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown experiment kind"):
        cli.run_experiment({"kind": "frobnicate"}, tmp_path / "res")


def test_failing_verdict_exit1(tmp_path, monkeypatch):
    def fake(cfg, rngp, tol_scale):
        return {"check": {"passed": False, "value": 1.0}}, {}, {}

    monkeypatch.setitem(cli._HANDLERS, "check-kernel", fake)
    status = cli.run_experiment({"kind": "check-kernel", "seed": 1}, tmp_path / "res")
    assert status == 1
    assert _read_summary(tmp_path / "res")["status"] == "fail"


def test_inconclusive_exit2(tmp_path, monkeypatch):
    def fake(cfg, rngp, tol_scale):
        return ({"check": {"passed": False, "value": 1.0}},
                {"inconclusive": True}, {})

    monkeypatch.setitem(cli._HANDLERS, "check-kernel", fake)
    status = cli.run_experiment({"kind": "check-kernel", "seed": 1}, tmp_path / "res")
    assert status == 2
    assert _read_summary(tmp_path / "res")["status"] == "inconclusive"


def test_handler_exception_cleans_new_files_only(tmp_path, monkeypatch):
    out = tmp_path / "res"
    out.mkdir()
    keep = out / "preexisting.txt"
    keep.write_text("keep me\n")

    def fake(cfg, rngp, tol_scale):
        (out / "partial.csv").write_text("junk\n")
        raise RuntimeError("boom")

    monkeypatch.setitem(cli._HANDLERS, "check-kernel", fake)
    with pytest.raises(RuntimeError):
        cli.run_experiment({"kind": "check-kernel", "seed": 1}, out)
    assert keep.read_text() == "keep me\n"
    assert not (out / "partial.csv").exists()
    assert not (out / "summary.json").exists()


def test_tolerance_scale_forwarded(tmp_path, monkeypatch):
    seen = {}

    def fake(cfg, rngp, tol_scale):
        seen["scale"] = tol_scale
        return {"check": {"passed": True}}, {}, {}

    monkeypatch.setitem(cli._HANDLERS, "check-kernel", fake)
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('kind = "check-kernel"\nseed = 1\n')
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "res"),
                     "--tolerance-scale", "2.5"]) == 0
    assert seen["scale"] == 2.5
