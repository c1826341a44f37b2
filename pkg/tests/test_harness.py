import json

import jsonschema
import numpy as np
import pytest

from authqka.adversaries import AttackSpec
from authqka.cli import EXIT_CONFIG, EXIT_IO, EXIT_MISMATCH, EXIT_OK, main
from authqka.harness import (
    ScenarioConfig,
    StatSummary,
    build_report,
    dumps_report,
    report_schema,
    run_trials,
    trial_rng,
)
from authqka.identities import IDENTITIES, verify_identities
from authqka.protocol import ProtocolConfig

SMALL = ProtocolConfig(3, 16, 2, 4)


# -- statistics -------------------------------------------------------------


def test_stat_summary_basic():
    s = StatSummary.from_counts(30, 100, oracle=0.25, claimed=0.9)
    assert s.abort_rate == 0.3
    lo, hi = s.wilson_interval_95
    assert lo < 0.3 < hi
    assert s.z_score_vs_oracle == pytest.approx(0.05 / np.sqrt(0.25 * 0.75 / 100))
    assert s.matches_oracle


def test_stat_summary_degenerate_oracle():
    assert StatSummary.from_counts(0, 50, oracle=0.0).z_score_vs_oracle == 0.0
    bad = StatSummary.from_counts(1, 50, oracle=0.0)
    assert bad.z_score_vs_oracle is None and bad.matches_oracle is False
    assert StatSummary.from_counts(3, 10).matches_oracle is None


def test_wilson_contains_rate_at_edges():
    for k in (0, 100):
        lo, hi = StatSummary.from_counts(k, 100).wilson_interval_95
        assert lo <= k / 100 <= hi


def test_trial_streams_independent_and_stable():
    a = trial_rng(7, 0).integers(0, 1 << 62, size=4)
    b = trial_rng(7, 1).integers(0, 1 << 62, size=4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, trial_rng(7, 0).integers(0, 1 << 62, size=4))


# -- scenario config --------------------------------------------------------


def test_scenario_from_dict_roundtrip():
    d = {"protocol": {"m": 3, "n": 8, "delta": 2, "zeta": 4}, "attack": {"kind": "TpProductState"}, "trials": 5, "seed": 3}
    sc = ScenarioConfig.from_dict(d)
    assert sc.protocol.L == 14 and sc.attack.kind.value == "TpProductState"
    assert ScenarioConfig.from_dict(sc.to_dict()).to_dict() == sc.to_dict()


@pytest.mark.parametrize(
    "d,field",
    [
        ({"trials": 0}, "trials"),
        ({"seed": -1}, "seed"),
        ({"protocol": {"m": 1}}, "protocol.m"),
        ({"protocol": {"colour": 1}}, "protocol.colour"),
        ({"protocol": {"m": 3, "n": 8, "delta": 2, "L": 99}}, "protocol.L"),
        ({"attack": {"kind": "Impersonation", "parameters": {"target": 9}}}, "target"),
        ({"bogus": 1}, "bogus"),
    ],
)
def test_scenario_errors_name_field(d, field):
    with pytest.raises(ValueError, match=field.replace(".", r"\.")):
        ScenarioConfig.from_dict(d)


# -- reports ----------------------------------------------------------------


def test_honest_report():
    report = build_report(ScenarioConfig(SMALL, None, trials=100, seed=1))
    assert report["summary"]["aborts"] == 0
    assert report["keys"]["identical_key_runs"] == 100
    assert report["status"] == "ok"
    jsonschema.validate(report, report_schema())


def test_report_deterministic():
    sc = ScenarioConfig(SMALL, AttackSpec("Impersonation"), trials=20, seed=5)
    assert dumps_report(build_report(sc)) == dumps_report(build_report(sc))


def test_workers_do_not_change_counts():
    sc = ScenarioConfig(SMALL, AttackSpec("TpProductState"), trials=12, seed=2)
    one = run_trials(sc, workers=1)
    two = run_trials(sc, workers=2)
    assert (one.aborts, one.key_ones, one.attack) == (two.aborts, two.key_ones, two.attack)


@pytest.mark.parametrize(
    "spec",
    [
        AttackSpec("HashLeakInterceptResend", {"target": 2}),
        AttackSpec("CollusiveParticipants"),
        AttackSpec("TpEntangling", {"overlap": 0.5}),
        AttackSpec("ExternalInterceptResend", {"probability": 0.3}),
    ],
    ids=lambda s: s.kind.value,
)
def test_reports_validate_for_every_kind(spec):
    report = build_report(ScenarioConfig(SMALL, spec, trials=8, seed=9))
    jsonschema.validate(report, report_schema())


def test_collusion_report_checks_bias():
    report = build_report(ScenarioConfig(SMALL, AttackSpec("CollusiveParticipants"), trials=30, seed=4))
    names = {c["name"] for c in report["checks"]}
    assert {"target bit unbiased", "key agreement"} <= names


# -- identities -------------------------------------------------------------


def test_identity_suite_passes():
    checks = verify_identities()
    assert len(checks) == 4 * len(IDENTITIES)
    assert all(c.passed for c in checks)


# -- CLI --------------------------------------------------------------------


def test_cli_run_writes_valid_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["run", "--parties", "3", "--key-len", "8", "--delta", "2", "--zeta", "2",
                 "--trials", "10", "--seed", "1", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    jsonschema.validate(report, report_schema())
    assert "abort rate" in capsys.readouterr().out


def test_cli_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "protocol": {"m": 3, "n": 8, "delta": 2, "zeta": 2},
        "attack": {"kind": "ExternalInterceptResend", "parameters": {"scope": "decoys"}},
        "trials": 5, "seed": 2,
    }))
    out = tmp_path / "r.json"
    assert main(["run", "--config", str(cfg), "--trials", "7", "--param", "probability=0.5", "--out", str(out)]) in (0, 1)
    report = json.loads(out.read_text())
    assert report["scenario"]["trials"] == 7
    assert report["scenario"]["attack"]["parameters"] == {"channels": [1], "probability": 0.5, "scope": "decoys"}


def test_cli_same_seed_same_bytes(tmp_path):
    args = ["run", "--attack", "Impersonation", "--key-len", "8", "--delta", "2", "--zeta", "2", "--trials", "15", "--seed", "11"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--parties", "1"]) == EXIT_CONFIG
    assert main(["run", "--attack", "Impersonation", "--param", "target=7"]) == EXIT_CONFIG
    assert main(["run", "--param", "target=1"]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["run", "--trials", "2", "--key-len", "4", "--delta", "1", "--zeta", "1",
                 "--out", str(tmp_path / "no" / "r.json")]) == EXIT_IO
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_cli_mismatch_exit_code(tmp_path, monkeypatch):
    import authqka.harness as harness

    real = harness.oracle_run_detection

    def skewed(spec, cfg):
        import dataclasses

        return dataclasses.replace(real(spec, cfg), p_abort=0.5)

    monkeypatch.setattr(harness, "oracle_run_detection", skewed)
    code = main(["run", "--key-len", "4", "--delta", "1", "--zeta", "1", "--trials", "50",
                 "--out", str(tmp_path / "r.json")])
    assert code == EXIT_MISMATCH


def test_cli_oracle_table(capsys, tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--attack", "Impersonation", "--delta", "8", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "0.976717" in text and "0.998997" in text
    assert json.loads(out.read_text())["oracle"]["claimed"] == pytest.approx(1 - 0.625**8)


def test_cli_oracle_honest_and_entangling(capsys):
    assert main(["oracle"]) == EXIT_OK
    assert main(["oracle", "--attack", "TpEntangling", "--param", "overlap=1.0"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "0.000000" in lines[1] and "0.000000" in lines[3]


def test_cli_verify_identities(capsys, tmp_path):
    out = tmp_path / "ids.json"
    assert main(["verify-identities", "--out", str(out)]) == EXIT_OK
    assert "FAIL" not in capsys.readouterr().out
    assert all(row["passed"] for row in json.loads(out.read_text()))
