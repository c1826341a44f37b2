"""Authenticated m-party key agreement by entanglement swapping.

One run follows the nine protocol steps:

1. public random numbers and hash selection, tag derivation
2. TP prepares ``L`` position states (``m`` Bell pairs each) and sends the
   second halves to the parties, interleaved with decoys
3. decoy check per channel (first eavesdropping detection)
4. I/H encoding driven by the tag bits, by TP and by each party
5. TP measures his ``m`` qubits of every position in the GHZ basis
6. parties correct with ``Z^{u1}`` / ``X^{ui}``
7-8. each party in turn runs a GHZ-correlation check on ``delta`` fresh positions
9. key extraction from the remaining ``n`` positions

Positions never interact, so all ``L`` of them are held in a single
:class:`PositionRegister` and every step acts on the whole batch at once.
Qubit layout inside a position is ``(T1, P1, T2, P2, ..., Tm, Pm, extra...)``
where ``extra`` qubits belong to an adversary (ancillas, fake particles).
TP's qubits leave the register once he has measured them in step 5.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import qsim
from .auth import bits_to_str, derive_auth_tag, hash_function_id
from .qsim import GhzLabel, StateVector

RANDOM_NUMBER_BYTES = 16
PRIVATE_KEY_BYTES = 32

DECOY_STATES = ("0", "1", "+", "-")


@dataclass(frozen=True)
class ProtocolConfig:
    m: int = 3
    n: int = 64
    delta: int = 8
    zeta: int = 16
    error_threshold: float = 0.0
    # Off only for the ablation showing why the decoy check is needed.
    first_detection: bool = True

    def __post_init__(self):
        for name, lo in (("m", 2), ("n", 0), ("delta", 1), ("zeta", 0)):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < lo:
                raise ValueError(f"{name}: must be an integer >= {lo}, got {value!r}")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ValueError(f"error_threshold: must lie in [0, 1], got {self.error_threshold!r}")

    @property
    def L(self) -> int:
        return self.n + self.m * self.delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["L"] = self.L
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        d = {k: v for k, v in d.items() if k != "L"}
        return cls(**d)


@dataclass(frozen=True)
class PartyIdentity:
    party_id: int
    public_id: bytes
    private_key: bytes = field(repr=False)


def make_identities(m: int, rng: np.random.Generator) -> list[PartyIdentity]:
    return [
        PartyIdentity(i, f"P{i}".encode(), rng.bytes(PRIVATE_KEY_BYTES)) for i in range(1, m + 1)
    ]


@dataclass
class DecoyRecord:
    """Decoys inserted into one channel's sequence of ``signal_count + zeta`` slots."""

    channel: int
    positions: np.ndarray
    states: list[str]
    qubits: np.ndarray  # (zeta, 2) amplitudes, in flight until checked
    signal_count: int
    disclosed_half: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def zeta(self) -> int:
        return len(self.states)

    @property
    def slot_count(self) -> int:
        return self.signal_count + self.zeta

    def signal_slots(self) -> np.ndarray:
        """Slot index of each signal particle, in position order."""
        mask = np.ones(self.slot_count, dtype=bool)
        mask[self.positions] = False
        return np.flatnonzero(mask)

    def bases(self) -> np.ndarray:
        """True where the decoy was prepared in the X basis."""
        return np.array([s in "+-" for s in self.states], dtype=bool)


@dataclass
class DetectionCheck:
    initiator: int
    positions: list[int]
    bases: str  # one "Z"/"X" per position
    outcomes: list[str]  # per position, one bit per party in party order
    errors: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Transcript:
    """Everything announced on the public classical channel during a run."""

    hash_function: str
    r_tp: str
    r_parties: list[str]
    public_ids: list[str]
    decoy_disclosures: list[dict] = field(default_factory=list)
    ghz_announcements: list[str] = field(default_factory=list)
    detection_disclosures: list[dict] = field(default_factory=list)
    abort_reason: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class RunReport:
    passed: bool
    keys: list[str] | None
    first_detection_errors: int
    second_detection_errors: int
    transcript: Transcript
    attack: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "passed": self.passed,
            "first_detection_errors": self.first_detection_errors,
            "second_detection_errors": self.second_detection_errors,
            "transcript": self.transcript.to_dict(),
            "attack": self.attack,
        }
        if self.passed:
            d["keys"] = self.keys
        return d


@dataclass
class PositionRegister:
    """All ``L`` position states of a run, one row per position.

    Qubits are named: ``T{i}`` for TP's half of pair ``i``, ``P{i}`` for the
    half sent to party ``i``, anything else belongs to an adversary.
    ``holders`` maps each party to the name of the qubit it actually holds,
    which differs from ``P{i}`` when an attacker swapped in a fake.
    """

    amplitudes: np.ndarray
    m: int
    names: list[str]
    holders: dict[int, str]

    @property
    def num_qubits(self) -> int:
        return len(self.names)

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def qubit(self, name: str) -> int:
        return self.names.index(name)

    @property
    def tp_qubits(self) -> list[int]:
        return [self.qubit(f"T{i}") for i in range(1, self.m + 1)]

    @property
    def party_qubits(self) -> list[int]:
        return [self.qubit(self.holders[i]) for i in range(1, self.m + 1)]

    def state(self, position: int) -> StateVector:
        return StateVector(self.amplitudes[position])

    def apply_rows(self, qubit: int, flags, gate: np.ndarray) -> None:
        self.amplitudes = qsim.apply_gate_rows(
            self.amplitudes, qubit, self.num_qubits, np.asarray(flags, dtype=bool), gate
        )

    def discard(self, names: Sequence[str], amplitudes: np.ndarray) -> None:
        """Replace the register by ``amplitudes`` over the qubits not in ``names``."""
        self.names = [q for q in self.names if q not in names]
        self.amplitudes = amplitudes


def pair_layout(m: int, extra: Sequence[str] = ()) -> list[str]:
    names = []
    for i in range(1, m + 1):
        names += [f"T{i}", f"P{i}"]
    return names + list(extra)


class Adversary:
    """Attack hooks called by :func:`run_protocol`; the base class is honest.

    Hooks only see what the attacker's role could see: in-flight qubits,
    public transcript data and, for TP-role attacks, TP's own tag bits.
    """

    kind = "none"

    def check(self, config: ProtocolConfig) -> None:
        """Raise ``ValueError`` if the attack does not fit ``config``."""

    def extra_qubits(self, config: ProtocolConfig) -> list[str]:
        """Names of attacker-owned qubits appended to every position."""
        return []

    def prepare_register(
        self, config: ProtocolConfig, tp_tags: np.ndarray, rng: np.random.Generator
    ) -> PositionRegister | None:
        """TP-role hook: return a replacement for the honest Bell-pair register."""
        return None

    def intercept(
        self,
        channel: int,
        register: PositionRegister,
        record: DecoyRecord | None,
        rng: np.random.Generator,
    ) -> None:
        """Channel hook: act on the in-flight signal qubits and decoys of ``channel``."""

    def encoding_bits(self, party: int, length: int, rng: np.random.Generator) -> np.ndarray | None:
        """Party-role hook: I/H choices replacing the honest tag bits."""
        return None

    def correction_gates(
        self, party: int, labels: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray | None:
        """Party-role hook: per-position 2x2 corrections replacing the honest ones."""
        return None

    def key_order(self, m: int) -> list[int] | None:
        """Order (party indices from 1) in which parties measure their key qubits."""
        return None

    def finish(
        self,
        config: ProtocolConfig,
        register: PositionRegister,
        transcript: Transcript,
        key_positions: list[int],
        keys: list[str] | None,
        rng: np.random.Generator,
    ) -> dict:
        """Called once at the end of every run; returns attack metadata."""
        return {}


HONEST = Adversary()


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------


_PHI_PLUS = qsim.bell_pair(qsim.BellKind.PHI_PLUS)


def tp_prepare_register(m: int, length: int, extra: Sequence[str] = ()) -> PositionRegister:
    """``length`` copies of ``m`` PhiPlus pairs, plus ``extra`` named qubits in ``|0>``."""
    if m < 2:
        raise ValueError(f"need at least 2 parties, got {m}")
    amps = np.ones(1, dtype=complex)
    for _ in range(m):
        amps = np.kron(amps, _PHI_PLUS.amplitudes)
    if extra:
        tail = np.zeros(1 << len(extra), dtype=complex)
        tail[0] = 1.0
        amps = np.kron(amps, tail)
    return PositionRegister(
        np.tile(amps, (length, 1)),
        m,
        pair_layout(m, extra),
        {i: f"P{i}" for i in range(1, m + 1)},
    )


def tp_prepare_position(m: int, rng: np.random.Generator | None = None) -> StateVector:
    """One position: ``m`` PhiPlus pairs laid out as (T1, P1, ..., Tm, Pm)."""
    return tp_prepare_register(m, 1).state(0)


def transmit_with_decoys(
    channel: int, signal_count: int, zeta: int, rng: np.random.Generator
) -> DecoyRecord:
    if zeta < 1:
        raise ValueError(f"zeta must be >= 1, got {zeta}")
    positions = np.sort(rng.choice(signal_count + zeta, size=zeta, replace=False))
    kinds = rng.integers(0, 4, size=zeta)
    states = [DECOY_STATES[k] for k in kinds]
    qubits = np.zeros((zeta, 2), dtype=complex)
    qubits[np.arange(zeta), kinds % 2] = 1.0
    x_rows = kinds >= 2
    qubits = qsim.apply_gate_rows(qubits, 0, 1, x_rows, qsim.H2)
    return DecoyRecord(channel, positions, states, qubits, signal_count)


def check_decoys(record: DecoyRecord, rng: np.random.Generator) -> tuple[int, int, dict]:
    """Receiver measures every decoy in its announced basis.

    A random half of the receiver's results is announced and compared by TP;
    TP announces the initial states of the other half and the receiver
    compares.  Either way every decoy is checked once.
    """
    x_rows = record.bases()
    outcome, post = qsim.sample_mixed_bases(record.qubits, (0,), 1, x_rows, rng)
    record.qubits = post
    expected = np.array([DECOY_STATES.index(s) % 2 for s in record.states])
    zeta = record.zeta
    half = np.sort(rng.choice(zeta, size=zeta // 2, replace=False))
    record.disclosed_half = half
    rest = np.setdiff1d(np.arange(zeta), half)
    errors = int((outcome != expected).sum())
    disclosure = {
        "channel": record.channel,
        "positions": record.positions.tolist(),
        "bases": "".join("X" if x else "Z" for x in x_rows),
        "receiver_announced": [[int(record.positions[j]), int(outcome[j])] for j in half],
        "tp_announced": [[int(record.positions[j]), record.states[j]] for j in rest],
        "errors": errors,
    }
    return errors, zeta, disclosure


_PAIR_ENCODINGS = np.array(
    [np.kron(a, b) for a in (qsim.I2, qsim.H2) for b in (qsim.I2, qsim.H2)]
)


def apply_auth_encoding_register(
    register: PositionRegister, tp_bits: np.ndarray, party_bits: np.ndarray
) -> None:
    """TP applies ``H^{t_i}`` on ``T_i``; party ``i`` applies its own choice on its qubit."""
    tp_bits = np.asarray(tp_bits, dtype=int)
    party_bits = np.asarray(party_bits, dtype=int)
    for i in range(register.m):
        t, p = register.tp_qubits[i], register.party_qubits[i]
        if p == t + 1:
            per_row = _PAIR_ENCODINGS[2 * tp_bits[i] + party_bits[i]]
            register.amplitudes = qsim.apply_matrix(
                register.amplitudes, per_row, (t, p), register.num_qubits
            )
        else:
            register.apply_rows(t, tp_bits[i], qsim.H2)
            register.apply_rows(p, party_bits[i], qsim.H2)


def apply_auth_encoding(
    position_state: StateVector, tp_bits: Sequence[int], party_bits: Sequence[int]
) -> StateVector:
    m = len(tp_bits)
    if len(party_bits) != m or position_state.num_qubits != 2 * m:
        raise ValueError("need one TP bit and one party bit per pair of a 2m-qubit state")
    reg = _single(position_state, m)
    apply_auth_encoding_register(
        reg, np.asarray(tp_bits, dtype=int)[:, None], np.asarray(party_bits, dtype=int)[:, None]
    )
    return reg.state(0)


def honest_corrections(labels: np.ndarray, party: int) -> tuple[np.ndarray, np.ndarray]:
    """(gate, flags) for party ``party`` (from 1): ``Z^{u1}`` for party 1, ``X^{ui}`` otherwise."""
    gate = qsim.Z2 if party == 1 else qsim.X2
    return gate, labels[:, party - 1].astype(bool)


def swap_and_correct_register(
    register: PositionRegister,
    rng: np.random.Generator,
    adversary: Adversary = HONEST,
) -> np.ndarray:
    """GHZ-measure TP's qubits at every position, then apply the parties' corrections.

    TP's measured qubits are dropped from the register.  Returns the
    announced labels as an ``(L, m)`` bit array.
    """
    m = register.m
    idx, _, rest = qsim.sample_and_discard(
        register.amplitudes, register.tp_qubits, register.num_qubits, rng, qsim.ghz_basis_matrix(m)
    )
    register.discard([f"T{i}" for i in range(1, m + 1)], rest)
    labels = (idx[:, None] >> np.arange(m - 1, -1, -1)) & 1
    for party in range(1, m + 1):
        qubit = register.party_qubits[party - 1]
        override = adversary.correction_gates(party, labels, rng)
        if override is not None:
            register.amplitudes = qsim.apply_matrix(
                register.amplitudes, override, (qubit,), register.num_qubits
            )
        else:
            gate, flags = honest_corrections(labels, party)
            register.apply_rows(qubit, flags, gate)
    return labels


def _single(position_state: StateVector, m: int) -> PositionRegister:
    n = position_state.num_qubits
    if n < 2 * m:
        raise ValueError(f"position state must hold at least {2 * m} qubits")
    extra = [f"E{j}" for j in range(n - 2 * m)]
    return PositionRegister(
        position_state.amplitudes[None, :].copy(),
        m,
        pair_layout(m, extra),
        {i: f"P{i}" for i in range(1, m + 1)},
    )


def swap_and_correct(
    position_state: StateVector, rng: np.random.Generator
) -> tuple[GhzLabel, StateVector]:
    """Single-position version; returns the announcement and the parties' m-qubit state."""
    n = position_state.num_qubits
    if n % 2:
        raise ValueError("position state must hold 2m qubits")
    reg = _single(position_state, n // 2)
    labels = swap_and_correct_register(reg, rng)
    return GhzLabel(tuple(int(b) for b in labels[0])), reg.state(0)


def detection_round(
    initiator: int,
    register: PositionRegister,
    positions: Sequence[int],
    rng: np.random.Generator,
    consumed: set[int] | None = None,
) -> DetectionCheck:
    """GHZ-correlation check on ``positions``, basis chosen per position by ``initiator``.

    Z basis: outcomes must all agree.  X basis: the product of the +/-1
    outcomes must be +1, i.e. an even number of ``-`` results.
    """
    positions = [int(p) for p in positions]
    if consumed is not None:
        reused = consumed.intersection(positions)
        if reused:
            raise ValueError(f"positions already used by an earlier check: {sorted(reused)}")
        consumed.update(positions)
    rows = np.asarray(positions, dtype=int)
    x_rows = rng.integers(0, 2, size=rows.size).astype(bool)
    outcome, post = qsim.sample_mixed_bases(
        register.amplitudes[rows], register.party_qubits, register.num_qubits, x_rows, rng
    )
    register.amplitudes[rows] = post
    m = register.m
    bits = (outcome[:, None] >> np.arange(m - 1, -1, -1)) & 1
    ones = bits.sum(axis=1)
    z_err = (ones != 0) & (ones != m)
    x_err = (ones % 2) == 1
    errors = int(np.where(x_rows, x_err, z_err).sum())
    return DetectionCheck(
        initiator,
        positions,
        "".join("X" if x else "Z" for x in x_rows),
        ["".join(map(str, b)) for b in bits],
        errors,
    )


def extract_key(
    register: PositionRegister,
    positions: Sequence[int],
    rng: np.random.Generator,
    order: Sequence[int] | None = None,
) -> list[str]:
    """Each party measures its qubit of every key position in Z; ``order`` is 1-based."""
    m = register.m
    order = list(order) if order is not None else list(range(1, m + 1))
    if sorted(order) != list(range(1, m + 1)):
        raise ValueError(f"order must be a permutation of 1..{m}, got {order}")
    rows = np.asarray(positions, dtype=int)
    keys = [""] * m
    if rows.size == 0:
        return keys
    amps = register.amplitudes[rows]
    for party in order:
        bits, _, amps = qsim.sample_basis(
            amps, (register.party_qubits[party - 1],), register.num_qubits, rng
        )
        keys[party - 1] = bits_to_str(bits)
    register.amplitudes[rows] = amps
    return keys


def _exceeds(errors: int, checked: int, threshold: float) -> bool:
    return checked > 0 and errors > threshold * checked


def run_protocol(
    config: ProtocolConfig,
    adversary=None,
    rng: np.random.Generator | None = None,
    identities: list[PartyIdentity] | None = None,
) -> RunReport:
    """Execute one full run; ``adversary`` is an :class:`Adversary` or an attack spec."""
    rng = rng if rng is not None else np.random.default_rng()
    if adversary is None:
        adversary = HONEST
    elif not isinstance(adversary, Adversary):
        adversary = adversary.build()
    adversary.check(config)
    m, L = config.m, config.L
    if identities is None:
        identities = make_identities(m, rng)
    if len(identities) != m:
        raise ValueError(f"need {m} identities, got {len(identities)}")

    # Step 1
    r_tp = rng.bytes(RANDOM_NUMBER_BYTES)
    r_parties = [rng.bytes(RANDOM_NUMBER_BYTES) for _ in range(m)]
    selector = int(rng.integers(0, 1 << 63))
    transcript = Transcript(
        hash_function=hash_function_id(selector),
        r_tp=r_tp.hex(),
        r_parties=[r.hex() for r in r_parties],
        public_ids=[p.public_id.decode() for p in identities],
    )
    tp_tags = np.array(
        [derive_auth_tag(p.private_key, p.public_id, r, r_tp, L, selector) for p, r in zip(identities, r_parties)]
    )
    party_tags = []
    for i, (p, r) in enumerate(zip(identities, r_parties)):
        bits = adversary.encoding_bits(i + 1, L, rng)
        if bits is None:
            bits = derive_auth_tag(p.private_key, p.public_id, r, r_tp, L, selector)
        party_tags.append(bits)
    party_tags = np.array(party_tags)

    # Step 2
    register = adversary.prepare_register(config, tp_tags, rng)
    if register is None:
        register = tp_prepare_register(m, L, adversary.extra_qubits(config))
    records = []
    for channel in range(1, m + 1):
        record = transmit_with_decoys(channel, L, config.zeta, rng) if config.zeta else None
        adversary.intercept(channel, register, record, rng)
        records.append(record)

    first_errors = second_errors = 0
    key_positions: list[int] = []
    keys = None

    def finish(passed: bool) -> RunReport:
        meta = adversary.finish(config, register, transcript, key_positions, keys, rng)
        attack = {"kind": adversary.kind, **meta} if adversary is not HONEST else None
        return RunReport(passed, keys if passed else None, first_errors, second_errors, transcript, attack)

    # Step 3
    if config.first_detection:
        for record in records:
            if record is None:
                continue
            errors, checked, disclosure = check_decoys(record, rng)
            transcript.decoy_disclosures.append(disclosure)
            first_errors += errors
            if _exceeds(errors, checked, config.error_threshold):
                transcript.abort_reason = f"first detection failed on channel {record.channel}"
                return finish(False)

    # Steps 4-6
    apply_auth_encoding_register(register, tp_tags, party_tags)
    labels = swap_and_correct_register(register, rng, adversary)
    transcript.ghz_announcements = ["".join(map(str, row)) for row in labels]

    # Steps 7-8
    consumed: set[int] = set()
    for initiator in range(1, m + 1):
        free = np.setdiff1d(np.arange(L), np.fromiter(consumed, dtype=int, count=len(consumed)))
        positions = np.sort(rng.choice(free, size=config.delta, replace=False))
        check = detection_round(initiator, register, positions, rng, consumed)
        transcript.detection_disclosures.append(check.to_dict())
        second_errors += check.errors
        if _exceeds(check.errors, config.delta, config.error_threshold):
            transcript.abort_reason = f"second detection failed in round of party {initiator}"
            return finish(False)

    # Step 9
    key_positions = sorted(set(range(L)) - consumed)
    keys = extract_key(register, key_positions, rng, adversary.key_order(m))
    return finish(True)
