"""Exact detection probabilities by exhaustive branch enumeration.

The oracle rebuilds each attack's single-position physics from scratch
(TP qubits first, then the parties' qubits, then attacker qubits) and walks
every branch: tag bits, attacker choices, GHZ announcement, detection basis
and detection outcome.  It shares only the state-vector primitives with the
Monte Carlo path, never the protocol or attack code.

Per-run abort probabilities follow from per-position independence:
``p_abort = 1 - prod(P(check passes))`` over the decoy checks and the ``m``
detection rounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy.stats import binom

from . import qsim
from .adversaries import AttackKind, AttackSpec
from .protocol import ProtocolConfig
from .qsim import Basis, StateVector

CONSERVATION_TOL = 1e-12
_SNAP_TOL = 1e-12
_MAX_DENOMINATOR = 1 << 40


def snap(x: float) -> Fraction | float:
    """Return ``x`` as an exact dyadic fraction when it is one to within 1e-12."""
    f = Fraction(x).limit_denominator(_MAX_DENOMINATOR)
    d = f.denominator
    if d & (d - 1) == 0 and abs(float(f) - x) <= _SNAP_TOL:
        return f
    return float(x)


@dataclass(frozen=True)
class Leaf:
    probability: float
    failed: bool
    record: tuple


@dataclass
class BranchTree:
    """Flat list of weighted leaves; interior nodes are folded into each leaf's record."""

    leaves: list[Leaf] = field(default_factory=list)

    def add(self, probability: float, failed: bool, record: tuple) -> None:
        if probability < 0:
            raise ValueError(f"negative branch probability {probability}")
        self.leaves.append(Leaf(float(probability), bool(failed), record))

    def total(self) -> float:
        return math.fsum(leaf.probability for leaf in self.leaves)

    def check_conservation(self) -> None:
        total = self.total()
        if abs(total - 1.0) > CONSERVATION_TOL:
            raise AssertionError(f"leaf probabilities sum to {total!r}, not 1")

    def failure_probability(self, where=None) -> float:
        """P(failed | where); ``where`` filters leaves by record."""
        keep = [leaf for leaf in self.leaves if where is None or where(leaf.record)]
        mass = math.fsum(leaf.probability for leaf in keep)
        if mass == 0:
            return 0.0
        return math.fsum(leaf.probability for leaf in keep if leaf.failed) / mass


@dataclass(frozen=True)
class PerParticleDetection:
    p_detect_z: Fraction | float
    p_detect_x: Fraction | float
    p_detect: Fraction | float


@dataclass(frozen=True)
class RunDetection:
    kind: str
    per_particle: PerParticleDetection
    per_decoy: Fraction | float
    p_pass_decoys: Fraction | float
    p_pass_detection: Fraction | float
    p_abort: Fraction | float
    claimed: float | None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p_detect_z": float(self.per_particle.p_detect_z),
            "p_detect_x": float(self.per_particle.p_detect_x),
            "p_detect": float(self.per_particle.p_detect),
            "per_decoy_error": float(self.per_decoy),
            "p_abort": float(self.p_abort),
            "p_abort_exact": str(self.p_abort) if isinstance(self.p_abort, Fraction) else None,
            "claimed": self.claimed,
        }


# ---------------------------------------------------------------------------
# single-position models, block layout (T1..Tm, P1..Pm, extras)
# ---------------------------------------------------------------------------


@dataclass
class _Scenario:
    weight: float
    state: StateVector
    tp_bits: tuple[int, ...]
    party_bits: tuple[int, ...]
    holders: list[int]
    record: tuple = ()
    # party -> list of (probability, 2x2 gate); None means the honest correction
    corrections: dict[int, list[tuple[float, np.ndarray]]] = field(default_factory=dict)


def _paired(m: int, pair_state: np.ndarray, extra: int = 0) -> StateVector:
    """``pair_state`` on every (T_i, P_i), block layout, extras in ``|0>``."""
    amps = np.zeros(1 << (2 * m + extra), dtype=complex)
    for xs in itertools.product(range(2), repeat=m):
        for ys in itertools.product(range(2), repeat=m):
            coeff = np.prod([pair_state[2 * x + y] for x, y in zip(xs, ys)])
            if coeff:
                idx = int("".join(map(str, xs + ys)), 2) << extra
                amps[idx] = coeff
    return StateVector(amps)


_PHI = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
_ZERO_PAIR = np.array([1, 0, 0, 0], dtype=complex)


def _hh(state: StateVector, m: int, bits) -> StateVector:
    for i, b in enumerate(bits):
        if b:
            state = qsim.apply_gate(state, qsim.GateKind.H, i)
            state = qsim.apply_gate(state, qsim.GateKind.H, m + i)
    return state


def _tags(m: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(2), repeat=m)


def _honest_scenarios(m: int) -> Iterator[_Scenario]:
    base = _paired(m, _PHI)
    for t in _tags(m):
        yield _Scenario(2.0**-m, base, t, t, [m + i for i in range(m)], ("tags", t))


def _tp_product_scenarios(m: int) -> Iterator[_Scenario]:
    base = _paired(m, _ZERO_PAIR)
    for t in _tags(m):
        yield _Scenario(2.0**-m, _hh(base, m, t), t, t, [m + i for i in range(m)], ("tags", t))


def _tp_entangling_scenarios(m: int, spec: AttackSpec) -> Iterator[_Scenario]:
    ancilla = spec.ancilla()
    k = ancilla.num_qubits
    ghz0 = np.zeros(1 << m, dtype=complex)
    ghz0[0] = ghz0[-1] = 1 / np.sqrt(2)
    alpha = np.zeros((1 << m, 1 << k), dtype=complex)
    alpha[0] = ancilla.theta0.amplitudes / np.sqrt(2)
    alpha[-1] = ancilla.theta1.amplitudes / np.sqrt(2)
    base = StateVector(np.kron(ghz0, alpha.reshape(-1)))
    for t in _tags(m):
        yield _Scenario(2.0**-m, _hh(base, m, t), t, t, [m + i for i in range(m)], ("tags", t))


def _impersonation_scenarios(m: int, spec: AttackSpec) -> Iterator[_Scenario]:
    target = int(spec.parameters["target"])
    base = _paired(m, _PHI)
    corrections = {}
    if spec.parameters["correction"] == "random":
        corrections[target] = [(0.5, qsim.I2), (0.5, qsim.X2)]
    for t in _tags(m):
        for guess in range(2):
            party = list(t)
            party[target - 1] = guess
            which = "right" if guess == t[target - 1] else "wrong"
            yield _Scenario(
                2.0**-m / 2, base, t, tuple(party), [m + i for i in range(m)],
                ("guess", which), corrections,
            )


def _bb84(kind: int) -> np.ndarray:
    v = np.eye(2, dtype=complex)[kind % 2]
    return qsim.H2 @ v if kind >= 2 else v


def _hash_leak_scenarios(m: int, spec: AttackSpec) -> Iterator[_Scenario]:
    target = int(spec.parameters["target"])
    base = _paired(m, _PHI)
    holders = [m + i for i in range(m)]
    holders[target - 1] = 2 * m  # fake qubit appended after the parties'
    for fake in range(4):
        state = StateVector(np.kron(base.amplitudes, _bb84(fake)))
        for t in _tags(m):
            yield _Scenario(2.0**-m / 4, state, t, t, holders, ("fake", fake))


def _intercept_scenarios(m: int, spec: AttackSpec) -> Iterator[_Scenario]:
    p = spec.parameters
    q = float(p["probability"]) if p["scope"] == "all" else 0.0
    channels = sorted({int(c) for c in p["channels"]})
    weighted = [(1.0, _paired(m, _PHI))]
    for c in channels:
        nxt = []
        for w, state in weighted:
            if q < 1:
                nxt.append((w * (1 - q), state))
            if q > 0:
                for basis in (Basis.COMPUTATIONAL, Basis.X):
                    for _, prob, post in qsim.outcome_branches(state, [m + c - 1], basis):
                        nxt.append((w * q * 0.5 * prob, post))
        weighted = nxt
    for w, state in weighted:
        for t in _tags(m):
            yield _Scenario(w * 2.0**-m, state, t, t, [m + i for i in range(m)], ("tags", t))


def _scenarios(spec: AttackSpec | None, m: int) -> Iterator[_Scenario]:
    kind = None if spec is None else spec.kind
    if kind is None or kind in (AttackKind.DISHONEST_PARTICIPANT, AttackKind.COLLUSIVE_PARTICIPANTS):
        return _honest_scenarios(m)
    if kind is AttackKind.TP_PRODUCT_STATE:
        return _tp_product_scenarios(m)
    if kind is AttackKind.TP_ENTANGLING:
        return _tp_entangling_scenarios(m, spec)
    if kind is AttackKind.IMPERSONATION:
        return _impersonation_scenarios(m, spec)
    if kind is AttackKind.HASH_LEAK_INTERCEPT_RESEND:
        return _hash_leak_scenarios(m, spec)
    if kind is AttackKind.EXTERNAL_INTERCEPT_RESEND:
        return _intercept_scenarios(m, spec)
    raise ValueError(f"no oracle for attack kind {kind!r}")


def _correction_variants(scenario: _Scenario, label, m: int):
    options = []
    for party in range(1, m + 1):
        if party in scenario.corrections:
            options.append(scenario.corrections[party])
        else:
            bit = label.bits[party - 1]
            gate = (qsim.Z2 if party == 1 else qsim.X2) if bit else qsim.I2
            options.append([(1.0, gate)])
    for combo in itertools.product(*options):
        yield math.prod(w for w, _ in combo), [g for _, g in combo]


def detection_tree(spec: AttackSpec | None, m: int) -> BranchTree:
    """Every branch of one detection particle's life under ``spec``."""
    if not 2 <= m <= 5:
        raise ValueError(f"oracle supports 2 <= m <= 5, got {m}")
    if spec is not None:
        spec.check(m)
    tree = BranchTree()
    tp = list(range(m))
    for sc in _scenarios(spec, m):
        state = sc.state
        for i in range(m):
            if sc.tp_bits[i]:
                state = qsim.apply_gate(state, qsim.GateKind.H, i)
            if sc.party_bits[i]:
                state = qsim.apply_gate(state, qsim.GateKind.H, sc.holders[i])
        for label, p_label, post in qsim.outcome_branches(state, tp, Basis.GHZ):
            for p_corr, gates in _correction_variants(sc, label, m):
                corrected = post
                for q, gate in zip(sc.holders, gates):
                    corrected = qsim.apply_unitary(corrected, gate, [q])
                for basis in (Basis.COMPUTATIONAL, Basis.X):
                    for out, p_out, _ in qsim.outcome_branches(corrected, sc.holders, basis):
                        ones = out.count("1")
                        failed = ones % 2 == 1 if basis is Basis.X else 0 < ones < m
                        prob = sc.weight * p_label * p_corr * 0.5 * p_out
                        tree.add(prob, failed, (basis.value, str(label), out) + sc.record)
    tree.check_conservation()
    return tree


def oracle_per_particle_detection(
    attack: AttackSpec | None, m: int, condition: str | None = None
) -> PerParticleDetection:
    """(p_z, p_x, p) for one detection particle; ``p = (p_z + p_x) / 2``.

    ``condition`` restricts impersonation branches to ``"right"`` or
    ``"wrong"`` guesses of TP's tag bit.
    """
    tree = detection_tree(attack, m)
    if condition is not None:
        if attack is None or attack.kind is not AttackKind.IMPERSONATION:
            raise ValueError("condition applies only to impersonation")
        if condition not in ("right", "wrong"):
            raise ValueError(f"condition must be 'right' or 'wrong', got {condition!r}")

    def where(basis):
        def f(rec):
            if rec[0] != basis:
                return False
            return condition is None or rec[-1] == condition

        return f

    pz = snap(tree.failure_probability(where(Basis.COMPUTATIONAL.value)))
    px = snap(tree.failure_probability(where(Basis.X.value)))
    return PerParticleDetection(pz, px, snap((float(pz) + float(px)) / 2))


def decoy_tree(attack: AttackSpec | None, channel: int) -> BranchTree:
    """Branches of one decoy on ``channel``: state, attacker action, receiver outcome."""
    tree = BranchTree()
    kind = None if attack is None else attack.kind
    for k in range(4):
        prepared = StateVector(_bb84(k))
        basis = Basis.X if k >= 2 else Basis.COMPUTATIONAL
        expected = str(k % 2)
        arrivals: list[tuple[float, StateVector, tuple]] = []
        if kind is AttackKind.EXTERNAL_INTERCEPT_RESEND and channel in {int(c) for c in attack.parameters["channels"]}:
            q = float(attack.parameters["probability"])
            if q < 1:
                arrivals.append((1 - q, prepared, ("untouched",)))
            if q > 0:
                for eve in (Basis.COMPUTATIONAL, Basis.X):
                    for out, p, post in qsim.outcome_branches(prepared, [0], eve):
                        arrivals.append((q * 0.5 * p, post, ("eve", eve.value, out)))
        elif kind is AttackKind.HASH_LEAK_INTERCEPT_RESEND and channel == int(attack.parameters["target"]):
            arrivals = [(0.25, StateVector(_bb84(f)), ("fake", f)) for f in range(4)]
        else:
            arrivals = [(1.0, prepared, ("untouched",))]
        for w, state, rec in arrivals:
            for out, p, _ in qsim.outcome_branches(state, [0], basis):
                tree.add(0.25 * w * p, out != expected, (k,) + rec + (out,))
    tree.check_conservation()
    return tree


def oracle_per_decoy_detection(attack: AttackSpec | None, channel: int = 1) -> Fraction | float:
    return snap(decoy_tree(attack, channel).failure_probability())


def _pass_probability(p_err, checked: int, threshold: float):
    """P(a check over ``checked`` i.i.d. particles does not abort)."""
    if checked == 0:
        return Fraction(1)
    allowed = math.floor(threshold * checked + 1e-9)
    if allowed == 0 and isinstance(p_err, Fraction):
        return (1 - p_err) ** checked
    return snap(float(binom.cdf(allowed, checked, float(p_err))))


def _mul(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    return snap(float(a) * float(b))


def claimed_detection(attack: AttackSpec | None, config: ProtocolConfig) -> float | None:
    """Published detection figure for the two attacks that have one."""
    if attack is None:
        return None
    if attack.kind is AttackKind.TP_PRODUCT_STATE:
        return 1 - 0.25**config.delta
    if attack.kind is AttackKind.IMPERSONATION:
        return 1 - 0.625**config.delta
    return None


def oracle_run_detection(attack: AttackSpec | None, config: ProtocolConfig) -> RunDetection:
    """Exact probability that a whole run aborts under ``attack``."""
    m = config.m
    per_particle = oracle_per_particle_detection(attack, m)
    pass_decoys = Fraction(1)
    per_decoy = Fraction(0)
    if config.first_detection and config.zeta > 0:
        for channel in range(1, m + 1):
            e = oracle_per_decoy_detection(attack, channel)
            if float(e) > float(per_decoy):
                per_decoy = e
            pass_decoys = _mul(pass_decoys, _pass_probability(e, config.zeta, config.error_threshold))
    pass_round = _pass_probability(per_particle.p_detect, config.delta, config.error_threshold)
    pass_detection = Fraction(1)
    for _ in range(m):
        pass_detection = _mul(pass_detection, pass_round)
    total_pass = _mul(pass_decoys, pass_detection)
    p_abort = 1 - total_pass if isinstance(total_pass, Fraction) else snap(1 - float(total_pass))
    return RunDetection(
        kind="none" if attack is None else attack.kind.value,
        per_particle=per_particle,
        per_decoy=per_decoy,
        p_pass_decoys=pass_decoys,
        p_pass_detection=pass_detection,
        p_abort=p_abort,
        claimed=claimed_detection(attack, config),
    )
