"""Seeded batch execution, statistics and JSON reports."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np
from scipy.stats import binomtest

from .adversaries import AttackKind, AttackSpec, hash_leak_attack
from .oracle import oracle_run_detection
from .protocol import ProtocolConfig, RunReport, run_protocol

REPORT_VERSION = 1
Z_LIMIT = 4.0
MAX_ORACLE_PARTIES = 5


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    attack: AttackSpec | None = None
    trials: int = 1000
    seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValueError(f"trials: must be an integer >= 1, got {self.trials!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed: must be an integer in [0, 2^64), got {self.seed!r}")
        if self.attack is not None:
            try:
                self.attack.check(self.protocol.m)
            except ValueError as exc:
                raise ValueError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.to_dict(),
            "attack": None if self.attack is None else self.attack.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {"protocol", "attack", "trials", "seed", "output_path"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"{unknown[0]}: unknown field")
        proto = dict(d.get("protocol") or {})
        fields = set(ProtocolConfig.__dataclass_fields__) | {"L"}
        for key in proto:
            if key not in fields:
                raise ValueError(f"protocol.{key}: unknown field")
        try:
            protocol = ProtocolConfig.from_dict(proto)
        except ValueError as exc:
            raise ValueError(f"protocol.{exc}") from None
        if "L" in proto and proto["L"] != protocol.L:
            raise ValueError(f"protocol.L: must equal n + m*delta = {protocol.L}")
        attack = d.get("attack")
        attack = None if attack is None else AttackSpec.from_dict(attack)
        return cls(
            protocol=protocol,
            attack=attack,
            trials=d.get("trials", 1000),
            seed=d.get("seed", 0),
            output_path=d.get("output_path"),
        )

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config: not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ValueError("config: top level must be an object")
        return cls.from_dict(data)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index``, derived by spawn key from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


@dataclass(frozen=True)
class StatSummary:
    trials: int
    aborts: int
    abort_rate: float
    standard_error: float
    wilson_interval_95: tuple[float, float]
    oracle_value: float | None
    paper_claim_value: float | None
    z_score_vs_oracle: float | None

    @classmethod
    def from_counts(
        cls, aborts: int, trials: int, oracle: float | None = None, claimed: float | None = None
    ) -> "StatSummary":
        rate = aborts / trials
        ci = binomtest(aborts, trials).proportion_ci(0.95, method="wilson")
        z = None
        if oracle is not None:
            se0 = math.sqrt(oracle * (1 - oracle) / trials)
            if se0 > 0:
                z = (rate - oracle) / se0
            elif rate == oracle:
                z = 0.0
        return cls(
            trials=trials,
            aborts=aborts,
            abort_rate=rate,
            standard_error=math.sqrt(rate * (1 - rate) / trials),
            wilson_interval_95=(float(ci.low), float(ci.high)),
            oracle_value=oracle,
            paper_claim_value=claimed,
            z_score_vs_oracle=z,
        )

    @property
    def matches_oracle(self) -> bool | None:
        """None when there is no oracle; False when |z| >= 4 or the rate is impossible."""
        if self.oracle_value is None:
            return None
        return self.z_score_vs_oracle is not None and abs(self.z_score_vs_oracle) < Z_LIMIT

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "aborts": self.aborts,
            "abort_rate": self.abort_rate,
            "standard_error": self.standard_error,
            "wilson_interval_95": list(self.wilson_interval_95),
            "oracle_value": self.oracle_value,
            "paper_claim_value": self.paper_claim_value,
            "z_score_vs_oracle": self.z_score_vs_oracle,
        }


@dataclass
class Tally:
    """Order-independent counters accumulated over trials."""

    trials: int = 0
    aborts: int = 0
    passed: int = 0
    key_agreement: int = 0
    key_bits: int = 0
    key_ones: int = 0
    first_detection_errors: int = 0
    second_detection_errors: int = 0
    attack: dict = field(default_factory=dict)

    def add_attack(self, key: str, value: int) -> None:
        self.attack[key] = self.attack.get(key, 0) + int(value)

    def merge(self, other: "Tally") -> None:
        for name in ("trials", "aborts", "passed", "key_agreement", "key_bits", "key_ones",
                     "first_detection_errors", "second_detection_errors"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for key, value in other.attack.items():
            self.add_attack(key, value)


def run_trial(scenario: ScenarioConfig, index: int) -> tuple[RunReport, dict]:
    """One seeded run; returns the report and attack-specific counters."""
    rng = trial_rng(scenario.seed, index)
    spec = scenario.attack
    if spec is not None and spec.kind is AttackKind.HASH_LEAK_INTERCEPT_RESEND:
        result = hash_leak_attack(scenario.protocol, int(spec.parameters["target"]), rng)
        hits = result.guesses == result.true_tag
        extra = {
            "tag_bits": hits.size,
            "tag_bits_guessed": int(hits.sum()),
            "informed_bits": int(result.informed.sum()),
            "informed_bits_guessed": int(hits[result.informed].sum()),
        }
        return result.report, extra
    report = run_protocol(scenario.protocol, spec, rng)
    extra = {}
    meta = report.attack or {}
    for key in ("target_hits", "key_bits", "tp_guess_hits"):
        if key in meta:
            extra[key] = meta[key]
    if "tp_guess_matches" in meta:
        extra["tp_guess_matches"] = int(meta["tp_guess_matches"])
    return report, extra


def _tally_range(scenario: ScenarioConfig, start: int, stop: int) -> Tally:
    tally = Tally()
    for i in range(start, stop):
        report, extra = run_trial(scenario, i)
        tally.trials += 1
        tally.first_detection_errors += report.first_detection_errors
        tally.second_detection_errors += report.second_detection_errors
        if report.passed:
            tally.passed += 1
            keys = report.keys
            tally.key_agreement += all(k == keys[0] for k in keys)
            tally.key_bits += len(keys[0])
            tally.key_ones += keys[0].count("1")
        else:
            tally.aborts += 1
        for key, value in extra.items():
            tally.add_attack(key, value)
    return tally


def run_trials(scenario: ScenarioConfig, workers: int = 1) -> Tally:
    """Run every trial; ``workers > 1`` splits the index range over processes."""
    n = scenario.trials
    if workers <= 1:
        return _tally_range(scenario, 0, n)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    total = Tally()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_tally_range, scenario, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            total.merge(fut.result())
    return total


def _frequency_check(hits: int, total: int) -> dict:
    """Frequency of ``hits`` against 1/2 with a 4-sigma band."""
    if total == 0:
        return {"count": 0, "frequency": None, "z_score": None, "ok": True}
    freq = hits / total
    z = (freq - 0.5) / math.sqrt(0.25 / total)
    return {"count": total, "frequency": freq, "z_score": z, "ok": abs(z) < Z_LIMIT}


def build_report(scenario: ScenarioConfig, workers: int = 1) -> dict:
    tally = run_trials(scenario, workers)
    spec = scenario.attack
    oracle = None
    if scenario.protocol.m <= MAX_ORACLE_PARTIES:
        oracle = oracle_run_detection(spec, scenario.protocol)
    summary = StatSummary.from_counts(
        tally.aborts,
        tally.trials,
        None if oracle is None else float(oracle.p_abort),
        None if oracle is None else oracle.claimed,
    )
    checks = []
    if summary.matches_oracle is not None:
        checks.append({"name": "abort rate vs oracle", "ok": summary.matches_oracle})
    colluding = spec is not None and spec.kind in (
        AttackKind.DISHONEST_PARTICIPANT, AttackKind.COLLUSIVE_PARTICIPANTS
    )
    if spec is None or colluding:
        checks.append({"name": "key agreement", "ok": tally.key_agreement == tally.passed})
    keys = {
        "passed_runs": tally.passed,
        "identical_key_runs": tally.key_agreement,
        "bit_balance": _frequency_check(tally.key_ones, tally.key_bits),
    }
    attack_stats = dict(tally.attack)
    if colluding:
        target = _frequency_check(tally.attack.get("target_hits", 0), tally.attack.get("key_bits", 0))
        attack_stats["target_bit_frequency"] = target
        checks.append({"name": "target bit unbiased", "ok": target["ok"]})
    if spec is not None and spec.kind is AttackKind.HASH_LEAK_INTERCEPT_RESEND and tally.attack["tag_bits"]:
        attack_stats["tag_inference_accuracy"] = tally.attack["tag_bits_guessed"] / tally.attack["tag_bits"]
    sample, _ = run_trial(scenario, 0)
    report = {
        "version": REPORT_VERSION,
        "scenario": scenario.to_dict(),
        "summary": summary.to_dict(),
        "oracle": None if oracle is None else oracle.to_dict(),
        "detection_errors": {
            "first": tally.first_detection_errors,
            "second": tally.second_detection_errors,
        },
        "keys": keys,
        "attack_stats": attack_stats,
        "checks": checks,
        "status": "ok" if all(c["ok"] for c in checks) else "mismatch",
        "sample_run": sample.to_dict(),
    }
    validate_report(report)
    return report


def report_schema() -> dict:
    text = resources.files("authqka").joinpath("schemas/report.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, report_schema())


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(report))


def format_summary(report: dict) -> str:
    s = report["summary"]
    scen = report["scenario"]
    p = scen["protocol"]
    kind = scen["attack"]["kind"] if scen["attack"] else "none"

    def num(x):
        return "-" if x is None else f"{x:.6f}"

    rows = [
        ("attack", kind),
        ("m / n / delta / zeta", f"{p['m']} / {p['n']} / {p['delta']} / {p['zeta']}"),
        ("trials", str(s["trials"])),
        ("aborts", str(s["aborts"])),
        ("abort rate (MC)", num(s["abort_rate"])),
        ("wilson 95%", "[{:.6f}, {:.6f}]".format(*s["wilson_interval_95"])),
        ("oracle", num(s["oracle_value"])),
        ("claimed", num(s["paper_claim_value"])),
        ("|z| vs oracle", "-" if s["z_score_vs_oracle"] is None else f"{abs(s['z_score_vs_oracle']):.3f}"),
        ("identical keys", f"{report['keys']['identical_key_runs']}/{report['keys']['passed_runs']}"),
        ("status", report["status"]),
    ]
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)
