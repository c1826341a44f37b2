"""Attack strategies as pluggable :class:`~authqka.protocol.Adversary` hooks.

An :class:`AttackSpec` is the serializable description (kind + parameters)
that scenario files carry; ``spec.build()`` turns it into the hook object
that :func:`~authqka.protocol.run_protocol` drives.  The module-level
functions (``hash_leak_attack``, ``tp_entangling_attack``, ...) are
single-call entry points for each analysed attack.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import qsim
from .auth import derive_auth_tag, parse_hash_function_id
from .protocol import (
    PositionRegister,
    ProtocolConfig,
    RunReport,
    Adversary,
    apply_auth_encoding_register,
    honest_corrections,
    make_identities,
    pair_layout,
    run_protocol,
    tp_prepare_position,
    _PAIR_ENCODINGS,
)
from .qsim import Basis, GhzLabel, StateVector


class AttackKind(str, enum.Enum):
    EXTERNAL_INTERCEPT_RESEND = "ExternalInterceptResend"
    HASH_LEAK_INTERCEPT_RESEND = "HashLeakInterceptResend"
    DISHONEST_PARTICIPANT = "DishonestParticipant"
    COLLUSIVE_PARTICIPANTS = "CollusiveParticipants"
    TP_PRODUCT_STATE = "TpProductState"
    TP_ENTANGLING = "TpEntangling"
    IMPERSONATION = "Impersonation"


_DEFAULTS: dict[AttackKind, dict[str, Any]] = {
    AttackKind.EXTERNAL_INTERCEPT_RESEND: {"channels": [1], "probability": 1.0, "scope": "all"},
    AttackKind.HASH_LEAK_INTERCEPT_RESEND: {"target": 1},
    AttackKind.DISHONEST_PARTICIPANT: {"party": 1, "target_bit": 0},
    AttackKind.COLLUSIVE_PARTICIPANTS: {"parties": [2, 3], "target_bit": 0},
    AttackKind.TP_PRODUCT_STATE: {},
    AttackKind.TP_ENTANGLING: {"overlap": 1.0, "phase": 0.0, "theta0": None, "theta1": None},
    AttackKind.IMPERSONATION: {"target": 1, "correction": "honest"},
}

CHANNEL_KINDS = {AttackKind.EXTERNAL_INTERCEPT_RESEND, AttackKind.HASH_LEAK_INTERCEPT_RESEND}
TP_KINDS = {AttackKind.TP_PRODUCT_STATE, AttackKind.TP_ENTANGLING}


@dataclass(frozen=True)
class AncillaPair:
    """TP's ancilla states attached to the ``|0...0>`` and ``|1...1>`` branches."""

    theta0: StateVector
    theta1: StateVector

    def __post_init__(self):
        if self.theta0.num_qubits != self.theta1.num_qubits:
            raise ValueError("theta0 and theta1 must have the same number of qubits")

    @property
    def overlap(self) -> complex:
        return qsim.inner_product(self.theta0, self.theta1)

    @property
    def num_qubits(self) -> int:
        return self.theta0.num_qubits

    @classmethod
    def from_overlap(cls, overlap: float, phase: float = 0.0) -> "AncillaPair":
        """One-qubit ancillas with ``<theta0|theta1> = overlap * exp(i phase)``."""
        if not 0.0 <= overlap <= 1.0:
            raise ValueError(f"overlap magnitude must lie in [0, 1], got {overlap!r}")
        theta1 = np.array([overlap, np.sqrt(max(0.0, 1.0 - overlap**2))], dtype=complex)
        return cls(qsim.make_basis_state(1, "0"), StateVector(theta1 * np.exp(1j * phase)))


def _complex_list(values) -> np.ndarray:
    out = []
    for v in values:
        out.append(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v))
    return np.array(out, dtype=complex)


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            kind = AttackKind(self.kind)
        except ValueError:
            known = ", ".join(k.value for k in AttackKind)
            raise ValueError(f"attack.kind: unknown attack {self.kind!r} (known: {known})") from None
        params = dict(_DEFAULTS[kind])
        for key, value in (self.parameters or {}).items():
            if key not in params:
                raise ValueError(f"attack.parameters.{key}: not a parameter of {kind.value}")
            params[key] = value
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "parameters", params)
        self._validate_static()

    def _validate_static(self):
        p = self.parameters
        if self.kind is AttackKind.EXTERNAL_INTERCEPT_RESEND:
            if not 0.0 <= float(p["probability"]) <= 1.0:
                raise ValueError("attack.parameters.probability: must lie in [0, 1]")
            if p["scope"] not in ("all", "decoys"):
                raise ValueError("attack.parameters.scope: must be 'all' or 'decoys'")
        if self.kind is AttackKind.IMPERSONATION and p["correction"] not in ("honest", "random"):
            raise ValueError("attack.parameters.correction: must be 'honest' or 'random'")
        if "target_bit" in p and p["target_bit"] not in (0, 1):
            raise ValueError("attack.parameters.target_bit: must be 0 or 1")
        if self.kind is AttackKind.TP_ENTANGLING:
            self.ancilla()

    def check(self, m: int) -> None:
        """Validate party indices against the participant count."""
        p = self.parameters
        indices = {
            "channels": p.get("channels"),
            "parties": p.get("parties"),
            "target": [p["target"]] if "target" in p else None,
            "party": [p["party"]] if "party" in p else None,
        }
        for name, values in indices.items():
            if values is None:
                continue
            if not values or any(not 1 <= int(v) <= m for v in values):
                raise ValueError(f"attack.parameters.{name}: party indices must lie in 1..{m}")

    @property
    def role(self) -> str:
        if self.kind in CHANNEL_KINDS:
            return "channel"
        if self.kind in TP_KINDS:
            return "tp"
        return "party"

    def ancilla(self) -> AncillaPair:
        p = self.parameters
        if p["theta0"] is not None or p["theta1"] is not None:
            if p["theta0"] is None or p["theta1"] is None:
                raise ValueError("attack.parameters.theta0/theta1: give both or neither")
            try:
                return AncillaPair(StateVector(_complex_list(p["theta0"])), StateVector(_complex_list(p["theta1"])))
            except ValueError as exc:
                raise ValueError(f"attack.parameters.theta0/theta1: {exc}") from None
        return AncillaPair.from_overlap(float(p["overlap"]), float(p["phase"]))

    def build(self) -> Adversary:
        p = self.parameters
        k = self.kind
        if k is AttackKind.EXTERNAL_INTERCEPT_RESEND:
            return InterceptResend(self, [int(c) for c in p["channels"]], float(p["probability"]), p["scope"])
        if k is AttackKind.HASH_LEAK_INTERCEPT_RESEND:
            return HashLeak(self, int(p["target"]))
        if k is AttackKind.DISHONEST_PARTICIPANT:
            return MeasureEarly(self, [int(p["party"])], int(p["target_bit"]))
        if k is AttackKind.COLLUSIVE_PARTICIPANTS:
            return MeasureEarly(self, [int(x) for x in p["parties"]], int(p["target_bit"]))
        if k is AttackKind.TP_PRODUCT_STATE:
            return TpProductState(self)
        if k is AttackKind.TP_ENTANGLING:
            return TpEntangling(self, self.ancilla())
        return Impersonation(self, int(p["target"]), p["correction"])

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "parameters": self.parameters}

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        extra = set(d) - {"kind", "parameters"}
        if extra:
            raise ValueError(f"attack.{sorted(extra)[0]}: unknown field")
        if "kind" not in d:
            raise ValueError("attack.kind: missing")
        return cls(d["kind"], dict(d.get("parameters") or {}))


class _SpecAdversary(Adversary):
    def __init__(self, spec: AttackSpec):
        self.spec = spec
        self.kind = spec.kind.value

    def check(self, config: ProtocolConfig) -> None:
        self.spec.check(config.m)


# ---------------------------------------------------------------------------
# channel attacks
# ---------------------------------------------------------------------------


def eve_intercept_resend(
    state: StateVector, rng: np.random.Generator, qubit: int = 0
) -> tuple[StateVector, tuple[Basis, str]]:
    """Measure ``qubit`` in a uniformly random Z/X basis and resend the eigenstate."""
    basis = Basis.X if rng.integers(0, 2) else Basis.COMPUTATIONAL
    record = qsim.measure(state, [qubit], basis, rng)
    return record.post_state, (basis, record.outcome)


class InterceptResend(_SpecAdversary):
    def __init__(self, spec, channels, probability, scope):
        super().__init__(spec)
        self.channels = set(channels)
        self.probability = probability
        self.scope = scope
        self.attacked_decoys = 0
        self.attacked_signals = 0

    def intercept(self, channel, register, record, rng):
        if channel not in self.channels:
            return
        if record is not None:
            hit = rng.random(record.zeta) < self.probability
            if hit.any():
                x_rows = rng.integers(0, 2, size=int(hit.sum())).astype(bool)
                _, record.qubits[hit] = qsim.sample_mixed_bases(record.qubits[hit], (0,), 1, x_rows, rng)
            self.attacked_decoys += int(hit.sum())
        if self.scope == "all":
            rows = np.flatnonzero(rng.random(register.size) < self.probability)
            if rows.size:
                x_rows = rng.integers(0, 2, size=rows.size).astype(bool)
                q = register.party_qubits[channel - 1]
                _, register.amplitudes[rows] = qsim.sample_mixed_bases(
                    register.amplitudes[rows], (q,), register.num_qubits, x_rows, rng
                )
            self.attacked_signals += int(rows.size)

    def finish(self, config, register, transcript, key_positions, keys, rng):
        return {"attacked_decoys": self.attacked_decoys, "attacked_signals": self.attacked_signals}


def _random_bb84(count: int, rng: np.random.Generator) -> np.ndarray:
    kinds = rng.integers(0, 4, size=count)
    amps = np.zeros((count, 2), dtype=complex)
    amps[np.arange(count), kinds % 2] = 1.0
    return qsim.apply_gate_rows(amps, 0, 1, kinds >= 2, qsim.H2)


class HashLeak(_SpecAdversary):
    """Eve keeps the genuine particles of one channel and forwards random fakes.

    At the end she tries to read the target's tag bits off her retained
    qubits, using the GHZ announcements and whatever detection outcomes the
    other parties disclosed.
    """

    FAKE = "F"

    def __init__(self, spec, target):
        super().__init__(spec)
        self.target = target
        self.guesses: np.ndarray | None = None
        self.informed: np.ndarray | None = None

    def extra_qubits(self, config):
        return [self.FAKE]

    def intercept(self, channel, register, record, rng):
        if channel != self.target:
            return
        f = register.qubit(self.FAKE)
        kinds = rng.integers(0, 4, size=register.size)
        register.apply_rows(f, kinds % 2 == 1, qsim.X2)
        register.apply_rows(f, kinds >= 2, qsim.H2)
        register.holders[self.target] = self.FAKE
        if record is not None:
            record.qubits = _random_bb84(record.zeta, rng)

    def finish(self, config, register, transcript, key_positions, keys, rng):
        m, L = config.m, config.L
        guesses = rng.integers(0, 2, size=L)
        informed = np.zeros(L, dtype=bool)
        if transcript.ghz_announcements:
            disclosed = {}
            for check in transcript.detection_disclosures:
                for pos, basis, outcome in zip(check["positions"], check["bases"], check["outcomes"]):
                    disclosed[pos] = (basis, outcome)
            bases = np.empty((L, 2, 2), dtype=complex)
            signs = np.zeros((L, 2))
            cache = {}
            for pos in range(L):
                label = transcript.ghz_announcements[pos]
                basis, outcome = disclosed.get(pos, (None, None))
                others = None if outcome is None else outcome[: self.target - 1] + outcome[self.target :]
                key = (label, basis, others)
                if key not in cache:
                    cache[key] = _helstrom(*(self._hypothesis(m, label, basis, others, t) for t in (0, 1)))
                bases[pos], signs[pos] = cache[key]
            q = register.qubit(f"P{self.target}")
            outcome, _, register.amplitudes = qsim.sample_basis(
                register.amplitudes, (q,), register.num_qubits, rng, bases
            )
            lam = signs[np.arange(L), outcome]
            informed = np.abs(lam) > 1e-12
            guesses = np.where(informed, (lam < 0).astype(int), guesses)
        self.guesses, self.informed = guesses, informed
        return {"target": self.target, "informed_positions": int(informed.sum())}

    def _hypothesis(self, m, label, basis, others, tag_bit) -> np.ndarray:
        """Density matrix of Eve's qubit if the target's tag bit were ``tag_bit``."""
        state = tp_prepare_position(m)
        if tag_bit:
            state = qsim.apply_gate(state, qsim.GateKind.H, 2 * (self.target - 1))
        u = GhzLabel(tuple(int(c) for c in label))
        t = qsim._to_front(state.amplitudes[None, :], [2 * i for i in range(m)], 2 * m)[0]
        party = qsim.ghz_basis_matrix(m)[u.index] @ t.reshape(1 << m, 1 << m)
        amps = party / np.linalg.norm(party)
        # the honest parties corrected their qubits before measuring them
        for j in range(1, m + 1):
            if j != self.target:
                gate, flags = honest_corrections(np.array([u.bits]), j)
                amps = qsim.apply_gate_rows(amps[None, :], j - 1, m, flags, gate)[0]
        if others is not None:
            qubits = [j - 1 for j in range(1, m + 1) if j != self.target]
            bra = np.ones(1, dtype=complex)
            for bit in others:
                v = np.eye(2, dtype=complex)[int(bit)]
                bra = np.kron(bra, qsim.H2 @ v if basis == "X" else v)
            t = qsim._to_front(amps[None, :], qubits + [self.target - 1], m)[0]
            amps = bra.conj() @ t.reshape(1 << (m - 1), 2)
        else:
            return qsim.reduced_density_matrix(StateVector(amps), [self.target - 1])
        norm = np.vdot(amps, amps).real
        if norm < 1e-14:
            return np.eye(2) / 2
        amps = amps / np.sqrt(norm)
        return np.outer(amps, amps.conj())


def _helstrom(rho0: np.ndarray, rho1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal two-outcome measurement: (basis bras, eigenvalue signs of rho0 - rho1)."""
    lam, vecs = np.linalg.eigh(rho0 - rho1)
    return vecs.conj().T, lam


@dataclass
class HashLeakResult:
    report: RunReport
    true_tag: np.ndarray
    guesses: np.ndarray
    informed: np.ndarray

    @property
    def accuracy(self) -> float:
        return float((self.guesses == self.true_tag).mean())

    @property
    def informed_accuracy(self) -> float:
        if not self.informed.any():
            return float("nan")
        return float((self.guesses[self.informed] == self.true_tag[self.informed]).mean())


def hash_leak_attack(
    config: ProtocolConfig, target: int, rng: np.random.Generator
) -> HashLeakResult:
    """One run under the fake-sequence attack; scores Eve's tag inference against the truth."""
    spec = AttackSpec(AttackKind.HASH_LEAK_INTERCEPT_RESEND, {"target": target})
    adversary = spec.build()
    identities = make_identities(config.m, rng)
    report = run_protocol(config, adversary, rng, identities)
    tr = report.transcript
    who = identities[target - 1]
    true_tag = derive_auth_tag(
        who.private_key,
        who.public_id,
        bytes.fromhex(tr.r_parties[target - 1]),
        bytes.fromhex(tr.r_tp),
        config.L,
        parse_hash_function_id(tr.hash_function),
    )
    return HashLeakResult(report, true_tag, adversary.guesses, adversary.informed)


# ---------------------------------------------------------------------------
# internal participants
# ---------------------------------------------------------------------------


class MeasureEarly(_SpecAdversary):
    """Dishonest parties measure their key qubits before anyone else does."""

    def __init__(self, spec, parties, target_bit):
        super().__init__(spec)
        self.parties = parties
        self.target_bit = target_bit

    def key_order(self, m):
        return self.parties + [p for p in range(1, m + 1) if p not in self.parties]

    def finish(self, config, register, transcript, key_positions, keys, rng):
        meta = {"parties": self.parties, "target_bit": self.target_bit}
        if keys is not None:
            first = keys[self.parties[0] - 1]
            meta["key_bits"] = len(first)
            meta["target_hits"] = first.count(str(self.target_bit))
        return meta


def dishonest_measure_early(
    config: ProtocolConfig,
    parties: list[int] | int,
    target_bit: int,
    rng: np.random.Generator,
) -> RunReport:
    if isinstance(parties, int):
        spec = AttackSpec(AttackKind.DISHONEST_PARTICIPANT, {"party": parties, "target_bit": target_bit})
    else:
        spec = AttackSpec(AttackKind.COLLUSIVE_PARTICIPANTS, {"parties": list(parties), "target_bit": target_bit})
    return run_protocol(config, spec, rng)


class Impersonation(_SpecAdversary):
    """An outsider plays party ``target`` without its private key."""

    def __init__(self, spec, target, correction):
        super().__init__(spec)
        self.target = target
        self.correction = correction

    def encoding_bits(self, party, length, rng):
        if party != self.target:
            return None
        return rng.integers(0, 2, size=length).astype(np.uint8)

    def correction_gates(self, party, labels, rng):
        if party != self.target or self.correction == "honest":
            return None
        flips = rng.integers(0, 2, size=labels.shape[0]).astype(bool)
        return np.where(flips[:, None, None], qsim.X2, qsim.I2)

    def finish(self, config, register, transcript, key_positions, keys, rng):
        return {"target": self.target, "correction": self.correction}


def impersonation_attack(
    config: ProtocolConfig,
    target: int,
    rng: np.random.Generator,
    correction: str = "honest",
) -> RunReport:
    spec = AttackSpec(AttackKind.IMPERSONATION, {"target": target, "correction": correction})
    return run_protocol(config, spec, rng)


# ---------------------------------------------------------------------------
# TP attacks
# ---------------------------------------------------------------------------


def _precompensate(register: PositionRegister, tp_tags: np.ndarray) -> None:
    """Apply ``H^{t_i} x H^{t_i}`` on every pair so step 4 undoes it."""
    for i in range(register.m):
        register.amplitudes = qsim.apply_matrix(
            register.amplitudes,
            _PAIR_ENCODINGS[3 * np.asarray(tp_tags[i], dtype=int)],
            (2 * i, 2 * i + 1),
            register.num_qubits,
        )


class TpProductState(_SpecAdversary):
    """TP sends halves of ``|00>`` instead of PhiPlus and predicts an all-zero key."""

    def prepare_register(self, config, tp_tags, rng):
        m = config.m
        amps = np.zeros(1 << (2 * m), dtype=complex)
        amps[0] = 1.0
        register = PositionRegister(
            np.tile(amps, (config.L, 1)), m, pair_layout(m), {i: f"P{i}" for i in range(1, m + 1)}
        )
        _precompensate(register, tp_tags)
        return register

    def finish(self, config, register, transcript, key_positions, keys, rng):
        meta = {"tp_guess": "0" * len(key_positions)}
        if keys is not None:
            meta["tp_guess_matches"] = all(k == meta["tp_guess"] for k in keys)
        return meta


def tp_product_state_attack(config: ProtocolConfig, rng: np.random.Generator) -> RunReport:
    return run_protocol(config, AttackSpec(AttackKind.TP_PRODUCT_STATE), rng)


def entangled_position(m: int, ancilla: AncillaPair) -> np.ndarray:
    """TP qubits in ``phi_0``; parties plus ancilla in ``(|0..0>|t0> + |1..1>|t1>)/sqrt2``.

    Returned amplitudes follow :func:`pair_layout` with the ancilla qubits last.
    """
    k = ancilla.num_qubits
    alpha = np.zeros((1 << m, 1 << k), dtype=complex)
    alpha[0] = ancilla.theta0.amplitudes
    alpha[-1] = ancilla.theta1.amplitudes
    alpha = alpha.reshape(-1) / np.sqrt(2.0)
    full = np.kron(qsim.ghz_state(GhzLabel.zero(m)).amplitudes, alpha)
    # (T1..Tm, P1..Pm, A..) -> (T1, P1, ..., Tm, Pm, A..)
    order = [q for i in range(m) for q in (i, m + i)] + list(range(2 * m, 2 * m + k))
    t = full.reshape((2,) * (2 * m + k)).transpose(order)
    return t.reshape(-1)


class TpEntangling(_SpecAdversary):
    """TP entangles an ancilla with the parties' GHZ branches."""

    def __init__(self, spec, ancilla: AncillaPair):
        super().__init__(spec)
        self.ancilla = ancilla
        self.names = [f"A{j}" for j in range(ancilla.num_qubits)]

    def extra_qubits(self, config):
        return list(self.names)

    def prepare_register(self, config, tp_tags, rng):
        m = config.m
        amps = entangled_position(m, self.ancilla)
        register = PositionRegister(
            np.tile(amps, (config.L, 1)), m, pair_layout(m, self.names), {i: f"P{i}" for i in range(1, m + 1)}
        )
        _precompensate(register, tp_tags)
        return register

    def finish(self, config, register, transcript, key_positions, keys, rng):
        meta = {"overlap": abs(self.ancilla.overlap)}
        if keys is None:
            return meta
        rho0 = np.outer(self.ancilla.theta0.amplitudes, self.ancilla.theta0.amplitudes.conj())
        rho1 = np.outer(self.ancilla.theta1.amplitudes, self.ancilla.theta1.amplitudes.conj())
        bras, lam = _helstrom(rho0, rho1)
        rows = np.asarray(key_positions, dtype=int)
        if rows.size == 0:
            meta.update(tp_guess_hits=0, key_bits=0)
            return meta
        qubits = [register.qubit(a) for a in self.names]
        outcome, _, post = qsim.sample_basis(register.amplitudes[rows], qubits, register.num_qubits, rng, bras)
        register.amplitudes[rows] = post
        sign = lam[outcome]
        coin = rng.integers(0, 2, size=rows.size)
        guess = np.where(np.abs(sign) > 1e-12, (sign < 0).astype(int), coin)
        actual = np.array([int(c) for c in keys[0]])
        meta.update(tp_guess_hits=int((guess == actual).sum()), key_bits=int(rows.size))
        return meta


@dataclass(frozen=True)
class EntanglingResult:
    x_basis_error_rate: float
    z_basis_error_rate: float
    tp_guess_advantage: float


def tp_entangling_attack(ancilla: AncillaPair, config: ProtocolConfig | None = None) -> EntanglingResult:
    """Exact detection and guessing figures for TP's entangling attack.

    Every tag pattern and every GHZ announcement is enumerated; the key bit
    is party 1's Z outcome and TP's advantage is the Helstrom success of
    discriminating the ancilla states conditioned on it, minus 1/2.
    """
    config = config or ProtocolConfig()
    m = config.m
    names = [f"A{j}" for j in range(ancilla.num_qubits)]
    base = entangled_position(m, ancilla)
    x_err = z_err = 0.0
    advantage = 0.0
    patterns = [np.array(list(bits), dtype=int) for bits in np.ndindex(*(2,) * m)]
    for tags in patterns:
        register = PositionRegister(base[None, :].copy(), m, pair_layout(m, names), {i: f"P{i}" for i in range(1, m + 1)})
        _precompensate(register, tags[:, None])
        apply_auth_encoding_register(register, tags[:, None], tags[:, None])
        _, label, weight, post = qsim.branch_basis(
            register.amplitudes, np.ones(1), register.tp_qubits, register.num_qubits, qsim.ghz_basis_matrix(m)
        )
        for u_idx, w, amps in zip(label, weight, post):
            u = np.array([[(u_idx >> (m - 1 - j)) & 1 for j in range(m)]])
            reg = PositionRegister(amps[None, :], m, list(register.names), dict(register.holders))
            for party in range(1, m + 1):
                gate, flags = honest_corrections(u, party)
                reg.apply_rows(reg.party_qubits[party - 1], flags, gate)
            w = w / len(patterns)
            state = reg.state(0)
            pq = reg.party_qubits
            for out, p, _ in qsim.outcome_branches(state, pq, Basis.X):
                if out.count("1") % 2:
                    x_err += w * p
            cond = {0: np.zeros((1 << len(names),) * 2, dtype=complex), 1: None}
            cond[1] = np.zeros_like(cond[0])
            for out, p, post_state in qsim.outcome_branches(state, pq, Basis.COMPUTATIONAL):
                if len(set(out)) > 1:
                    z_err += w * p
                rho = qsim.reduced_density_matrix(post_state, [reg.qubit(a) for a in names])
                cond[int(out[0])] += p * rho
            advantage += w * 0.5 * np.abs(np.linalg.eigvalsh(cond[0] - cond[1])).sum()
    return EntanglingResult(float(x_err), float(z_err), float(advantage))
