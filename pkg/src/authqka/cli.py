"""Command-line entry point: ``authqka run | oracle | verify-identities``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .adversaries import AttackKind, AttackSpec
from .harness import ScenarioConfig, build_report, dumps_report, format_summary
from .identities import format_checks, verify_identities
from .oracle import oracle_run_detection
from .protocol import ProtocolConfig

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_OUT = "authqka-report.json"


class ConfigError(ValueError):
    pass


def _param(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _add_scenario_flags(p: argparse.ArgumentParser, with_trials: bool) -> None:
    p.add_argument("--config", help="JSON scenario file; flags override its fields")
    p.add_argument("--parties", type=int, help="number of participants m")
    p.add_argument("--key-len", type=int, help="raw key length n")
    p.add_argument("--delta", type=int, help="detection particles per participant")
    p.add_argument("--zeta", type=int, help="decoys per channel")
    p.add_argument("--threshold", type=float, help="tolerated error rate per check")
    p.add_argument("--attack", choices=[k.value for k in AttackKind] + ["none"])
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="attack parameter (JSON value), repeatable")
    p.add_argument("--out", help="report path")
    if with_trials:
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="authqka", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="seeded Monte Carlo batch with oracle comparison")
    _add_scenario_flags(run, with_trials=True)
    oracle = sub.add_parser("oracle", help="exact detection probabilities")
    _add_scenario_flags(oracle, with_trials=False)
    verify = sub.add_parser("verify-identities", help="numerical identity suite")
    verify.add_argument("--out", help="optional JSON listing")
    return parser


def scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    """Merge the config file (if any) with command-line overrides."""
    try:
        base = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
        proto = {k: v for k, v in base.protocol.to_dict().items() if k != "L"}
        for flag, name in (("parties", "m"), ("key_len", "n"), ("delta", "delta"),
                           ("zeta", "zeta"), ("threshold", "error_threshold")):
            value = getattr(args, flag)
            if value is not None:
                proto[name] = value
        protocol = ProtocolConfig.from_dict(proto)
        attack = base.attack
        if args.attack is not None:
            if args.attack == "none":
                attack = None
            elif attack is None or attack.kind.value != args.attack:
                attack = AttackSpec(args.attack)
        if args.param:
            if attack is None:
                raise ValueError("--param: no attack selected")
            attack = AttackSpec(attack.kind, {**attack.parameters, **dict(args.param)})
        overrides = {"protocol": protocol, "attack": attack}
        if getattr(args, "trials", None) is not None:
            overrides["trials"] = args.trials
        if getattr(args, "seed", None) is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_path"] = args.out
        return dataclasses.replace(base, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_run(args) -> int:
    scenario = scenario_from_args(args)
    report = build_report(scenario, workers=args.workers)
    _write(scenario.output_path or DEFAULT_OUT, dumps_report(report))
    print(format_summary(report))
    return EXIT_OK if report["status"] == "ok" else EXIT_MISMATCH


def _fmt(x) -> str:
    return "-" if x is None else f"{float(x):.6f}"


def cmd_oracle(args) -> int:
    scenario = scenario_from_args(args)
    cfg = scenario.protocol
    if cfg.m > 5:
        raise ConfigError(f"parties: the oracle supports m <= 5, got {cfg.m}")
    result = oracle_run_detection(scenario.attack, cfg)
    row = result.to_dict()
    claim = result.claimed
    delta = None if claim is None else float(result.p_abort) - claim
    header = ["attack", "m", "delta", "zeta", "p_z", "p_x", "p_particle", "p_decoy", "p_abort", "claimed", "oracle-claimed"]
    values = [row["kind"], str(cfg.m), str(cfg.delta), str(cfg.zeta), _fmt(row["p_detect_z"]),
              _fmt(row["p_detect_x"]), _fmt(row["p_detect"]), _fmt(row["per_decoy_error"]),
              _fmt(row["p_abort"]), _fmt(claim), _fmt(delta)]
    widths = [max(len(h), len(v)) for h, v in zip(header, values)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    print("  ".join(v.ljust(w) for v, w in zip(values, widths)))
    if scenario.output_path:
        out = {"protocol": cfg.to_dict(), "attack": None if scenario.attack is None else scenario.attack.to_dict(),
               "oracle": row, "claimed_minus_oracle": None if delta is None else -delta}
        _write(scenario.output_path, json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_verify_identities(args) -> int:
    checks = verify_identities()
    print(format_checks(checks))
    if args.out:
        _write(args.out, json.dumps([c.to_dict() for c in checks], sort_keys=True, indent=2) + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_MISMATCH


COMMANDS = {"run": cmd_run, "oracle": cmd_oracle, "verify-identities": cmd_verify_identities}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
