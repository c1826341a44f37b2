"""Dense state-vector simulation for small qubit registers.

Qubit 0 is the leftmost ket symbol, so amplitude index ``i`` of an n-qubit
state is the big-endian reading of the bit string ``|b_0 b_1 ... b_{n-1}>``.

Two layers live here.  The batch kernels (``apply_matrix``, ``sample_basis``,
``branch_basis``) act on arrays of shape ``(B, 2**n)`` holding ``B``
independent states; the protocol simulator uses them to push every key
position of a run through one call.  The single-state API on top of them
(``StateVector``, ``apply_gate``, ``measure``, ...) is what the rest of the
package and the tests talk to.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10
IDENTITY_TOL = 1e-12
# Branches lighter than this are numerically empty and are dropped.
BRANCH_FLOOR = 1e-15

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class Basis(str, enum.Enum):
    COMPUTATIONAL = "computational"
    X = "x_basis"
    GHZ = "ghz_basis"


class GateKind(str, enum.Enum):
    I = "I"
    X = "X"
    Z = "Z"
    IY = "iY"
    H = "H"

    @property
    def matrix(self) -> np.ndarray:
        return _GATES[self]


_GATES = {
    GateKind.I: np.array([[1, 0], [0, 1]], dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    # iY = |0><1| - |1><0|
    GateKind.IY: np.array([[0, 1], [-1, 0]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
}
for _m in _GATES.values():
    _m.setflags(write=False)

I2 = _GATES[GateKind.I]
X2 = _GATES[GateKind.X]
Z2 = _GATES[GateKind.Z]
H2 = _GATES[GateKind.H]


class BellKind(str, enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"


_BELL = {
    BellKind.PHI_PLUS: [1, 0, 0, 1],
    BellKind.PHI_MINUS: [1, 0, 0, -1],
    BellKind.PSI_PLUS: [0, 1, 1, 0],
    BellKind.PSI_MINUS: [0, 1, -1, 0],
}


@dataclass(frozen=True)
class GhzLabel:
    """Label ``(u1, u2, ..., um)`` of an m-qubit GHZ basis state.

    ``u1`` is the relative phase bit, ``u2..um`` flip qubits 2..m relative
    to qubit 1.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) < 2:
            raise ValueError(f"GHZ label needs at least 2 bits, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"GHZ label bits must be 0/1, got {bits}")
        object.__setattr__(self, "bits", bits)

    @property
    def m(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        return int("".join(map(str, self.bits)), 2)

    @classmethod
    def from_index(cls, index: int, m: int) -> "GhzLabel":
        return cls(tuple(int(c) for c in format(index, f"0{m}b")))

    @classmethod
    def zero(cls, m: int) -> "GhzLabel":
        return cls((0,) * m)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits (read-only amplitudes)."""

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or (1 << n) != amps.size:
            raise ValueError(f"amplitude count must be 2**n with n >= 1, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class MeasurementRecord:
    measured_qubits: tuple[int, ...]
    basis: Basis
    outcome: str | GhzLabel
    probability: float
    post_state: StateVector


# ---------------------------------------------------------------------------
# batch kernels
# ---------------------------------------------------------------------------


def check_qubits(qubits: Sequence[int], num_qubits: int) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if not qubits:
        raise ValueError("at least one qubit index is required")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"qubit indices must be distinct, got {qubits}")
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")
    return qubits


def _to_front(amps: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    """View ``(B, 2**n)`` as ``(B, 2**k, 2**(n-k))`` with ``qubits`` leading."""
    batch = amps.shape[0]
    t = amps.reshape((batch,) + (2,) * num_qubits)
    t = np.moveaxis(t, [1 + q for q in qubits], range(1, 1 + len(qubits)))
    return t.reshape(batch, 1 << len(qubits), -1)


def _from_front(t: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    batch = t.shape[0]
    t = t.reshape((batch,) + (2,) * num_qubits)
    t = np.moveaxis(t, range(1, 1 + len(qubits)), [1 + q for q in qubits])
    return t.reshape(batch, -1)


def apply_matrix(
    amps: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], num_qubits: int
) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix to ``qubits`` of every row of ``amps``.

    ``matrix`` is either shared, shape ``(K, K)``, or per row, ``(B, K, K)``.
    Row/column index of the matrix is big-endian over ``qubits`` in the
    order given.
    """
    if len(qubits) == 1:
        return _apply_single(amps, matrix, qubits[0], num_qubits)
    if list(qubits) == list(range(qubits[0], qubits[0] + len(qubits))):
        t = amps.reshape(amps.shape[0], 1 << qubits[0], 1 << len(qubits), -1)
        m = matrix[:, None] if matrix.ndim == 3 else matrix
        return np.matmul(m, t).reshape(amps.shape)
    t = _to_front(amps, qubits, num_qubits)
    return _from_front(np.matmul(matrix, t), qubits, num_qubits)


def _apply_single(amps: np.ndarray, matrix: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    t = amps.reshape(amps.shape[0], 1 << qubit, 2, -1)
    a0, a1 = t[:, :, 0, :], t[:, :, 1, :]
    if matrix.ndim == 3:
        c = matrix[:, :, :, None, None]
        m00, m01, m10, m11 = c[:, 0, 0], c[:, 0, 1], c[:, 1, 0], c[:, 1, 1]
    else:
        (m00, m01), (m10, m11) = matrix
    out = np.empty_like(t)
    out[:, :, 0, :] = m00 * a0 + m01 * a1
    out[:, :, 1, :] = m10 * a0 + m11 * a1
    return out.reshape(amps.shape)


def apply_gate_rows(
    amps: np.ndarray, qubit: int, num_qubits: int, flags: np.ndarray, gate: np.ndarray
) -> np.ndarray:
    """Apply ``gate`` on ``qubit`` to the rows where ``flags`` is set."""
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        return amps
    if flags.all():
        return _apply_single(amps, gate, qubit, num_qubits)
    per_row = np.where(flags[:, None, None], gate, I2)
    return _apply_single(amps, per_row, qubit, num_qubits)


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    idx = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def sample_basis(
    amps: np.ndarray,
    qubits: Sequence[int],
    num_qubits: int,
    rng: np.random.Generator,
    basis: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projectively measure ``qubits`` of every row; return (outcomes, probs, post).

    ``basis`` is a unitary whose rows are the measurement bras (shared or one
    per row).  ``None`` means the computational basis.  Outcome ``j`` is the
    index of the basis vector the row collapsed onto.
    """
    if basis is not None:
        amps = apply_matrix(amps, basis, qubits, num_qubits)
    t = _to_front(amps, qubits, num_qubits)
    probs = np.einsum("bkr,bkr->bk", t, t.conj()).real
    outcome = _sample_rows(probs, rng)
    rows = np.arange(t.shape[0])
    p = probs[rows, outcome]
    post = np.zeros_like(t)
    post[rows, outcome] = t[rows, outcome] / np.sqrt(p)[:, None]
    out = _from_front(post, qubits, num_qubits)
    if basis is not None:
        out = apply_matrix(out, np.conj(np.swapaxes(basis, -1, -2)), qubits, num_qubits)
    return outcome, p, out


def sample_and_discard(
    amps: np.ndarray,
    qubits: Sequence[int],
    num_qubits: int,
    rng: np.random.Generator,
    basis: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Measure ``qubits`` and drop them; return (outcomes, probs, remaining amps).

    After a projective measurement the measured qubits sit in a known basis
    state that is a product with the rest, so discarding them is exact.
    """
    if basis is not None:
        amps = apply_matrix(amps, basis, qubits, num_qubits)
    t = _to_front(amps, qubits, num_qubits)
    probs = np.einsum("bkr,bkr->bk", t, t.conj()).real
    outcome = _sample_rows(probs, rng)
    rows = np.arange(t.shape[0])
    p = probs[rows, outcome]
    return outcome, p, t[rows, outcome] / np.sqrt(p)[:, None]


def sample_mixed_bases(
    amps: np.ndarray,
    qubits: Sequence[int],
    num_qubits: int,
    x_rows: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Measure ``qubits`` per row in X (``x_rows`` set) or Z; return (outcomes, post).

    X-basis rows are H-conjugated, so post-states are X eigenstates there.
    """
    for q in qubits:
        amps = apply_gate_rows(amps, q, num_qubits, x_rows, H2)
    outcome, _, amps = sample_basis(amps, qubits, num_qubits, rng)
    for q in qubits:
        amps = apply_gate_rows(amps, q, num_qubits, x_rows, H2)
    return outcome, amps


def branch_basis(
    amps: np.ndarray,
    weights: np.ndarray,
    qubits: Sequence[int],
    num_qubits: int,
    basis: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Enumerate every outcome of a projective measurement on each row.

    Returns ``(parent_row, outcome, weight, post)`` for all branches whose
    probability exceeds ``BRANCH_FLOOR``; ``weight`` is the parent weight
    times the Born probability.
    """
    if basis is not None:
        amps = apply_matrix(amps, basis, qubits, num_qubits)
    t = _to_front(amps, qubits, num_qubits)
    probs = np.einsum("bkr,bkr->bk", t, t.conj()).real
    parent, outcome = np.nonzero(probs > BRANCH_FLOOR)
    p = probs[parent, outcome]
    post = np.zeros((parent.size,) + t.shape[1:], dtype=complex)
    post[np.arange(parent.size), outcome] = t[parent, outcome] / np.sqrt(p)[:, None]
    out = _from_front(post, qubits, num_qubits)
    if basis is not None:
        if basis.ndim == 3:
            basis = basis[parent]
        out = apply_matrix(out, np.conj(np.swapaxes(basis, -1, -2)), qubits, num_qubits)
    return parent, outcome, np.asarray(weights)[parent] * p, out


@functools.lru_cache(maxsize=None)
def ghz_basis_matrix(m: int) -> np.ndarray:
    """Unitary whose row ``j`` is the bra of the GHZ state with label index ``j``."""
    if m < 2:
        raise ValueError(f"GHZ basis needs m >= 2, got {m}")
    rows = [ghz_state(GhzLabel.from_index(j, m)).amplitudes.conj() for j in range(1 << m)]
    mat = np.array(rows)
    mat.setflags(write=False)
    return mat


@functools.lru_cache(maxsize=None)
def x_basis_matrix(k: int) -> np.ndarray:
    """``H`` tensored ``k`` times; rows are the X-basis bras (``+`` = bit 0)."""
    mat = np.ones((1, 1), dtype=complex)
    for _ in range(k):
        mat = np.kron(mat, H2)
    mat.setflags(write=False)
    return mat


# ---------------------------------------------------------------------------
# single-state API
# ---------------------------------------------------------------------------


def make_basis_state(num_qubits: int, bits: str | Sequence[int]) -> StateVector:
    bits = "".join(str(int(b)) for b in bits)
    if num_qubits < 1 or len(bits) != num_qubits:
        raise ValueError(f"need {num_qubits} bits, got {bits!r}")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def bell_pair(kind: BellKind | str) -> StateVector:
    return StateVector(np.array(_BELL[BellKind(kind)], dtype=complex) * _SQRT_HALF)


def ghz_state(label: GhzLabel | Sequence[int]) -> StateVector:
    """``(|0 u2..um> + (-1)^u1 |1 ~u2..~um>) / sqrt(2)``."""
    if not isinstance(label, GhzLabel):
        label = GhzLabel(tuple(label))
    flips = label.bits[1:]
    lo = int("0" + "".join(map(str, flips)), 2)
    hi = int("1" + "".join(str(1 - b) for b in flips), 2)
    amps = np.zeros(1 << label.m, dtype=complex)
    amps[lo] = _SQRT_HALF
    amps[hi] = _SQRT_HALF * (-1) ** label.bits[0]
    return StateVector(amps)


def tensor(*states: StateVector) -> StateVector:
    amps = np.ones(1, dtype=complex)
    for s in states:
        amps = np.kron(amps, s.amplitudes)
    return StateVector(amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product ``<a|b>``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def same_ray(a: StateVector, b: StateVector, tol: float = IDENTITY_TOL) -> bool:
    """True when ``a`` and ``b`` agree up to a global phase."""
    return abs(abs(inner_product(a, b)) - 1.0) <= tol


def apply_gate(state: StateVector, gate: GateKind | str, qubit: int) -> StateVector:
    (qubit,) = check_qubits([qubit], state.num_qubits)
    out = apply_matrix(state.amplitudes[None, :], GateKind(gate).matrix, (qubit,), state.num_qubits)
    return StateVector(out[0])


def apply_unitary(state: StateVector, matrix: np.ndarray, qubits: Sequence[int]) -> StateVector:
    qubits = check_qubits(qubits, state.num_qubits)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (1 << len(qubits),) * 2:
        raise ValueError(f"matrix shape {matrix.shape} does not fit {len(qubits)} qubits")
    return StateVector(apply_matrix(state.amplitudes[None, :], matrix, qubits, state.num_qubits)[0])


def _basis_unitary(basis: Basis, k: int) -> np.ndarray | None:
    if basis is Basis.COMPUTATIONAL:
        return None
    if basis is Basis.X:
        return x_basis_matrix(k)
    return ghz_basis_matrix(k)


def measure(
    state: StateVector,
    qubits: Sequence[int],
    basis: Basis | str,
    rng: np.random.Generator,
) -> MeasurementRecord:
    """Measure ``qubits`` in the computational or X basis.

    Outcome bits: 0 for ``|0>``/``|+>``, 1 for ``|1>``/``|->``.
    """
    basis = Basis(basis)
    if basis is Basis.GHZ:
        return measure_ghz_basis(state, qubits, rng)
    qubits = check_qubits(qubits, state.num_qubits)
    k = len(qubits)
    outcome, p, post = sample_basis(
        state.amplitudes[None, :], qubits, state.num_qubits, rng, _basis_unitary(basis, k)
    )
    return MeasurementRecord(
        qubits, basis, format(int(outcome[0]), f"0{k}b"), float(p[0]), StateVector(post[0])
    )


def measure_ghz_basis(
    state: StateVector, qubits: Sequence[int], rng: np.random.Generator
) -> MeasurementRecord:
    qubits = check_qubits(qubits, state.num_qubits)
    if len(qubits) < 2:
        raise ValueError("GHZ measurement needs at least 2 qubits")
    outcome, p, post = sample_basis(
        state.amplitudes[None, :], qubits, state.num_qubits, rng, ghz_basis_matrix(len(qubits))
    )
    label = GhzLabel.from_index(int(outcome[0]), len(qubits))
    return MeasurementRecord(qubits, Basis.GHZ, label, float(p[0]), StateVector(post[0]))


def outcome_branches(
    state: StateVector, qubits: Sequence[int], basis: Basis | str
) -> list[tuple[str | GhzLabel, float, StateVector]]:
    """Every outcome of a measurement with its probability and post-state."""
    basis = Basis(basis)
    qubits = check_qubits(qubits, state.num_qubits)
    k = len(qubits)
    _, outcome, prob, post = branch_basis(
        state.amplitudes[None, :], np.ones(1), qubits, state.num_qubits, _basis_unitary(basis, k)
    )
    result = []
    for j, p, amps in zip(outcome, prob, post):
        label = GhzLabel.from_index(int(j), k) if basis is Basis.GHZ else format(int(j), f"0{k}b")
        result.append((label, float(p), StateVector(amps)))
    return result


def ghz_decomposition(
    state: StateVector, first: Sequence[int], second: Sequence[int]
) -> np.ndarray:
    """Coefficients ``<phi_u (first) phi_v (second) | state>`` as a matrix ``[u, v]``.

    ``first`` and ``second`` must together cover every qubit of ``state``.
    """
    first = check_qubits(first, state.num_qubits)
    second = check_qubits(second, state.num_qubits)
    if sorted(first + second) != list(range(state.num_qubits)):
        raise ValueError("first and second must partition the register")
    t = _to_front(state.amplitudes[None, :], first + second, state.num_qubits)
    t = t.reshape(1 << len(first), 1 << len(second))
    return ghz_basis_matrix(len(first)) @ t @ ghz_basis_matrix(len(second)).T


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    keep = check_qubits(keep, state.num_qubits)
    t = _to_front(state.amplitudes[None, :], keep, state.num_qubits)[0]
    return t @ t.conj().T


def all_bitstrings(k: int) -> list[str]:
    return ["".join(bits) for bits in itertools.product("01", repeat=k)]
