"""Simulator and verification harness for authenticated multi-party quantum key agreement."""

from .adversaries import AncillaPair, AttackKind, AttackSpec
from .harness import ScenarioConfig, StatSummary
from .oracle import oracle_per_particle_detection, oracle_run_detection
from .protocol import ProtocolConfig, RunReport, Transcript, run_protocol
from .qsim import Basis, BellKind, GateKind, GhzLabel, StateVector

__all__ = [
    "AncillaPair",
    "AttackKind",
    "AttackSpec",
    "Basis",
    "BellKind",
    "GateKind",
    "GhzLabel",
    "ProtocolConfig",
    "RunReport",
    "ScenarioConfig",
    "StatSummary",
    "StateVector",
    "Transcript",
    "oracle_per_particle_detection",
    "oracle_run_detection",
    "run_protocol",
]
