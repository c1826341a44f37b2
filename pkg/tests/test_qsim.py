import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from authqka import qsim
from authqka.qsim import Basis, BellKind, GateKind, GhzLabel, StateVector

S = 1 / np.sqrt(2)


def random_state(seed, n):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


# -- construction -----------------------------------------------------------


def test_basis_state_big_endian():
    assert np.allclose(qsim.make_basis_state(1, "0").amplitudes, [1, 0])
    s = qsim.make_basis_state(2, "11")
    assert s.amplitudes[3] == 1 and np.count_nonzero(s.amplitudes) == 1
    assert qsim.make_basis_state(3, "100").amplitudes[4] == 1


def test_basis_state_length_mismatch():
    with pytest.raises(ValueError):
        qsim.make_basis_state(2, "0")


@pytest.mark.parametrize("amps", [[1, 1], [1, 0, 0], [], [0.5, 0.5]])
def test_state_vector_rejects_bad_amplitudes(amps):
    with pytest.raises(ValueError):
        StateVector(np.array(amps, dtype=complex))


def test_state_vector_is_read_only():
    s = qsim.make_basis_state(1, "0")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_bell_pairs():
    assert np.allclose(qsim.bell_pair(BellKind.PHI_PLUS).amplitudes, [S, 0, 0, S])
    assert np.allclose(qsim.bell_pair(BellKind.PSI_MINUS).amplitudes, [0, S, -S, 0])
    gram = np.array([[qsim.inner_product(qsim.bell_pair(a), qsim.bell_pair(b)) for b in BellKind] for a in BellKind])
    assert np.allclose(gram, np.eye(4), atol=1e-10)


def test_ghz_states():
    assert np.allclose(qsim.ghz_state((0, 0, 0)).amplitudes[[0, 7]], [S, S])
    assert np.allclose(qsim.ghz_state((1, 0, 0)).amplitudes[[0, 7]], [S, -S])
    # flip bits: (0,1,0) -> |010> + |101>
    assert np.allclose(qsim.ghz_state((0, 1, 0)).amplitudes[[2, 5]], [S, S])


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_ghz_basis_orthonormal(m):
    vecs = np.array([qsim.ghz_state(GhzLabel.from_index(i, m)).amplitudes for i in range(1 << m)])
    assert np.allclose(vecs.conj() @ vecs.T, np.eye(1 << m), atol=1e-10)


def test_ghz_label_validation():
    with pytest.raises(ValueError):
        GhzLabel((0,))
    with pytest.raises(ValueError):
        GhzLabel((0, 2))
    assert GhzLabel.from_index(5, 3).bits == (1, 0, 1)
    assert GhzLabel((1, 0, 1)).index == 5
    assert str(GhzLabel.zero(4)) == "0000"


def test_tensor_and_inner_product():
    zero = qsim.make_basis_state(1, "0")
    assert np.allclose(qsim.tensor(zero, zero).amplitudes, qsim.make_basis_state(2, "00").amplitudes)
    with pytest.raises(ValueError):
        qsim.inner_product(zero, qsim.tensor(zero, zero))


def test_swap_term_coefficient():
    pairs = qsim.tensor(*[qsim.bell_pair(BellKind.PHI_PLUS)] * 3)
    coeffs = qsim.ghz_decomposition(pairs, [0, 2, 4], [1, 3, 5])
    assert abs(coeffs[0, 0]) ** 2 == pytest.approx(1 / 8, abs=1e-12)


# -- gates ------------------------------------------------------------------


def test_gate_matrices_unitary():
    for g in GateKind:
        m = g.matrix
        assert np.allclose(m @ m.conj().T, np.eye(2))
    assert np.allclose(GateKind.IY.matrix @ GateKind.IY.matrix, -np.eye(2))
    for g in (GateKind.I, GateKind.X, GateKind.Z, GateKind.H):
        assert np.allclose(g.matrix @ g.matrix, np.eye(2))


def test_hadamard_pair_restores_phi_plus():
    phi = qsim.bell_pair(BellKind.PHI_PLUS)
    out = qsim.apply_gate(qsim.apply_gate(phi, GateKind.H, 0), GateKind.H, 1)
    assert np.allclose(out.amplitudes, phi.amplitudes, atol=1e-12)


def test_one_sided_hadamard_example():
    out = qsim.apply_gate(qsim.bell_pair(BellKind.PHI_PLUS), GateKind.H, 1)
    assert np.allclose(out.amplitudes, [0.5, 0.5, 0.5, -0.5])
    expect = (qsim.bell_pair(BellKind.PHI_MINUS).amplitudes + qsim.bell_pair(BellKind.PSI_PLUS).amplitudes) * S
    assert np.allclose(out.amplitudes, expect)


@pytest.mark.parametrize("bits", list(itertools.product(range(2), repeat=3)))
def test_corrections_map_to_zero_label(bits):
    state = qsim.ghz_state(bits)
    for q, b in enumerate(bits):
        if b:
            state = qsim.apply_gate(state, GateKind.Z if q == 0 else GateKind.X, q)
    assert qsim.same_ray(state, qsim.ghz_state(GhzLabel.zero(3)))


def test_apply_gate_bad_index():
    with pytest.raises(ValueError):
        qsim.apply_gate(qsim.make_basis_state(2, "00"), GateKind.X, 2)


def test_apply_matrix_nonadjacent_matches_kron():
    s = random_state(4, 4)
    cnot = np.eye(4)[[0, 1, 3, 2]].astype(complex)
    out = qsim.apply_unitary(s, cnot, [3, 1])
    # build the reference by permuting qubits (3, 1) to the front
    t = s.amplitudes.reshape((2,) * 4).transpose(3, 1, 0, 2).reshape(4, 4)
    ref = (cnot @ t).reshape((2,) * 4).transpose(2, 1, 3, 0).reshape(-1)
    assert np.allclose(out.amplitudes, ref)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), gate=st.sampled_from(list(GateKind)), data=st.data())
def test_gates_preserve_norm_and_invert(seed, n, gate, data):
    s = random_state(seed, n)
    q = data.draw(st.integers(0, n - 1))
    once = qsim.apply_gate(s, gate, q)
    assert abs(np.linalg.norm(once.amplitudes) - 1) < 1e-10
    twice = qsim.apply_gate(once, gate, q)
    phase = -1 if gate is GateKind.IY else 1
    assert np.allclose(twice.amplitudes, phase * s.amplitudes, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5), data=st.data())
def test_batched_rows_match_single_state(seed, n, data):
    q = data.draw(st.integers(0, n - 1))
    rows = np.array([random_state(seed + i, n).amplitudes for i in range(3)])
    flags = np.array([True, False, True])
    out = qsim.apply_gate_rows(rows, q, n, flags, qsim.H2)
    for i in range(3):
        ref = qsim.apply_gate(StateVector(rows[i]), GateKind.H, q) if flags[i] else StateVector(rows[i])
        assert np.allclose(out[i], ref.amplitudes)


# -- measurement ------------------------------------------------------------


def test_measure_ghz_computational():
    rng = np.random.default_rng(0)
    branches = qsim.outcome_branches(qsim.ghz_state(GhzLabel.zero(3)), [0, 1, 2], Basis.COMPUTATIONAL)
    assert {o: p for o, p, _ in branches} == pytest.approx({"000": 0.5, "111": 0.5})
    rec = qsim.measure(qsim.ghz_state(GhzLabel.zero(3)), [0, 1, 2], Basis.COMPUTATIONAL, rng)
    assert rec.outcome in ("000", "111")


def test_measure_ghz_x_basis_even_parity():
    branches = qsim.outcome_branches(qsim.ghz_state(GhzLabel.zero(3)), [0, 1, 2], Basis.X)
    probs = {o: p for o, p, _ in branches}
    assert probs == pytest.approx({"000": 0.25, "011": 0.25, "101": 0.25, "110": 0.25})


def test_measure_eigenstate_and_repeat():
    rng = np.random.default_rng(1)
    rec = qsim.measure(qsim.make_basis_state(1, "0"), [0], Basis.COMPUTATIONAL, rng)
    assert rec.outcome == "0" and rec.probability == pytest.approx(1)
    s = random_state(2, 3)
    for basis in (Basis.COMPUTATIONAL, Basis.X):
        first = qsim.measure(s, [0, 2], basis, rng)
        again = qsim.measure(first.post_state, [0, 2], basis, rng)
        assert again.outcome == first.outcome and again.probability == pytest.approx(1)
        assert abs(np.linalg.norm(first.post_state.amplitudes) - 1) < 1e-10


def test_measure_rejects_duplicate_qubits():
    with pytest.raises(ValueError):
        qsim.measure(qsim.make_basis_state(2, "00"), [0, 0], Basis.COMPUTATIONAL, np.random.default_rng())


def test_swapping_leaves_matching_ghz():
    pairs = qsim.tensor(*[qsim.bell_pair(BellKind.PHI_PLUS)] * 3)
    branches = qsim.outcome_branches(pairs, [0, 2, 4], Basis.GHZ)
    assert len(branches) == 8
    for label, p, post in branches:
        assert p == pytest.approx(1 / 8, abs=1e-12)
        rest = qsim.outcome_branches(post, [0, 2, 4], Basis.GHZ)
        assert len(rest) == 1
        assert qsim.ghz_decomposition(post, [0, 2, 4], [1, 3, 5])[label.index, label.index] == pytest.approx(1)


def test_ghz_measure_eigenstate():
    rec = qsim.measure_ghz_basis(qsim.ghz_state((1, 0, 0)), [0, 1, 2], np.random.default_rng(0))
    assert rec.outcome == GhzLabel((1, 0, 0)) and rec.probability == pytest.approx(1)


def test_ghz_measure_product_state():
    zeros = qsim.make_basis_state(6, "000000")
    branches = qsim.outcome_branches(zeros, [0, 2, 4], Basis.GHZ)
    assert sorted(str(lab) for lab, _, _ in branches) == ["000", "100"]
    for _, p, post in branches:
        assert p == pytest.approx(0.5)
        rest = qsim.outcome_branches(post, [1, 3, 5], Basis.COMPUTATIONAL)
        assert [o for o, _, _ in rest] == ["000"]


def test_born_rule_frequencies():
    rng = np.random.default_rng(123)
    s = random_state(9, 2)
    probs = np.abs(s.amplitudes) ** 2
    rows = np.tile(s.amplitudes, (100_000, 1))
    outcome, _, _ = qsim.sample_basis(rows, (0, 1), 2, rng)
    counts = np.bincount(outcome, minlength=4)
    se = np.sqrt(probs * (1 - probs) / 100_000)
    assert np.all(np.abs(counts / 100_000 - probs) < 4 * se)


def test_ghz_announcements_uniform():
    rng = np.random.default_rng(5)
    pairs = qsim.tensor(*[qsim.bell_pair(BellKind.PHI_PLUS)] * 3)
    rows = np.tile(pairs.amplitudes, (10_000, 1))
    idx, _, _ = qsim.sample_and_discard(rows, [0, 2, 4], 6, rng, qsim.ghz_basis_matrix(3))
    assert chisquare(np.bincount(idx, minlength=8)).pvalue > 1e-4


def test_reduced_density_matrix_of_bell_pair():
    rho = qsim.reduced_density_matrix(qsim.bell_pair(BellKind.PHI_PLUS), [1])
    assert np.allclose(rho, np.eye(2) / 2)
