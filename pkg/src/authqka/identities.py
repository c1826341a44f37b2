"""Numerical checks of the algebraic identities the protocol relies on."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import qsim
from .qsim import BellKind, GhzLabel, StateVector

PARTY_RANGE = (2, 3, 4, 5)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    m: int
    max_deviation: float
    tolerance: float = qsim.IDENTITY_TOL

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "m": self.m, "max_deviation": self.max_deviation, "passed": self.passed}


def _bell_pairs(m: int) -> StateVector:
    """``m`` PhiPlus pairs laid out as (T1, P1, ..., Tm, Pm)."""
    return qsim.tensor(*[qsim.bell_pair(BellKind.PHI_PLUS)] * m)


def _ray_deviation(a: StateVector, b: StateVector) -> float:
    return abs(1.0 - abs(qsim.inner_product(a, b)))


def one_sided_hadamard(m: int) -> float:
    """``(I x H)`` on one pair equals ``(phi-/+ + psi+/-)/sqrt2`` on that pair, for each pair."""
    dev = 0.0
    for plus in (True, False):
        phi = qsim.bell_pair(BellKind.PHI_PLUS if plus else BellKind.PHI_MINUS)
        target = (
            qsim.bell_pair(BellKind.PHI_MINUS if plus else BellKind.PHI_PLUS).amplitudes
            + qsim.bell_pair(BellKind.PSI_PLUS if plus else BellKind.PSI_MINUS).amplitudes
        ) / np.sqrt(2)
        for i in range(m):
            pairs = [phi] * m
            lhs = qsim.apply_gate(qsim.tensor(*pairs), qsim.GateKind.H, 2 * i + 1)
            pairs[i] = StateVector(target)
            dev = max(dev, float(np.max(np.abs(lhs.amplitudes - qsim.tensor(*pairs).amplitudes))))
    return dev


def hadamard_pair_invariance(m: int) -> float:
    """``H x H`` on any subset of pairs leaves the pairs unchanged."""
    base = _bell_pairs(m)
    dev = 0.0
    for mask in itertools.product(range(2), repeat=m):
        state = base
        for i, b in enumerate(mask):
            if b:
                state = qsim.apply_gate(state, qsim.GateKind.H, 2 * i)
                state = qsim.apply_gate(state, qsim.GateKind.H, 2 * i + 1)
        dev = max(dev, float(np.max(np.abs(state.amplitudes - base.amplitudes))))
    return dev


def correction_algebra(m: int) -> float:
    """``Z^{u1} X^{u2} ... X^{um}`` maps every GHZ label back to ``phi_{0...0}``."""
    zero = qsim.ghz_state(GhzLabel.zero(m))
    dev = 0.0
    for idx in range(1 << m):
        label = GhzLabel.from_index(idx, m)
        state = qsim.ghz_state(label)
        for q, bit in enumerate(label.bits):
            if bit:
                state = qsim.apply_gate(state, qsim.GateKind.Z if q == 0 else qsim.GateKind.X, q)
        dev = max(dev, _ray_deviation(state, zero))
    return dev


def entanglement_swapping(m: int) -> float:
    """Bell pairs in the GHZ basis: only matching labels, each with weight ``2^-m``."""
    coeffs = qsim.ghz_decomposition(_bell_pairs(m), list(range(0, 2 * m, 2)), list(range(1, 2 * m, 2)))
    diag = np.diag(coeffs)
    off = coeffs - np.diag(diag)
    return float(max(np.max(np.abs(off)), np.max(np.abs(np.abs(diag) ** 2 - 2.0**-m))))


def ghz_z_correlation(m: int) -> float:
    """``phi_{0...0}`` has computational support only on ``0...0`` and ``1...1``."""
    amps = qsim.ghz_state(GhzLabel.zero(m)).amplitudes
    expect = np.zeros_like(amps)
    expect[0] = expect[-1] = 1 / np.sqrt(2)
    return float(np.max(np.abs(amps - expect)))


def ghz_x_parity(m: int) -> float:
    """In the X basis, odd ``-`` parity amplitudes vanish and even ones share magnitude ``2^{-(m-1)/2}``."""
    amps = qsim.x_basis_matrix(m) @ qsim.ghz_state(GhzLabel.zero(m)).amplitudes
    dev = 0.0
    for idx, a in enumerate(amps):
        expect = 0.0 if bin(idx).count("1") % 2 else 2.0 ** (-(m - 1) / 2)
        dev = max(dev, abs(abs(a) - expect))
    return float(dev)


def product_state_swapping(m: int) -> float:
    """``|0...0>`` on both halves splits into labels ``(a, 0...0)`` x ``(b, 0...0)`` at amplitude 1/2."""
    state = qsim.make_basis_state(2 * m, "0" * (2 * m))
    coeffs = qsim.ghz_decomposition(state, list(range(0, 2 * m, 2)), list(range(1, 2 * m, 2)))
    expect = np.zeros_like(coeffs)
    for a, b in itertools.product(range(2), repeat=2):
        expect[a << (m - 1), b << (m - 1)] = 0.5
    return float(np.max(np.abs(coeffs - expect)))


def one_sided_swapping(m: int) -> float:
    """With ``H`` on the first party's qubit only, each TP label ``u`` pairs with two party labels.

    Party side: ``u`` with the phase bit flipped, plus ``(-1)^{u1}`` times
    ``u`` with every flip bit flipped, both at amplitude ``2^{-(m+1)/2}``.
    """
    state = qsim.apply_gate(_bell_pairs(m), qsim.GateKind.H, 1)
    coeffs = qsim.ghz_decomposition(state, list(range(0, 2 * m, 2)), list(range(1, 2 * m, 2)))
    expect = np.zeros_like(coeffs)
    c = 2.0 ** (-(m + 1) / 2)
    phase = 1 << (m - 1)
    for u in range(1 << m):
        expect[u, u ^ phase] += c
        expect[u, u ^ (phase - 1)] += (-1) ** (u >> (m - 1)) * c
    return float(np.max(np.abs(coeffs - expect)))


IDENTITIES = {
    "one-sided Hadamard": one_sided_hadamard,
    "Hadamard pair invariance": hadamard_pair_invariance,
    "correction algebra": correction_algebra,
    "entanglement swapping": entanglement_swapping,
    "GHZ Z correlation": ghz_z_correlation,
    "GHZ X parity": ghz_x_parity,
    "product-state swapping": product_state_swapping,
    "one-sided swapping": one_sided_swapping,
}


def verify_identities(parties=PARTY_RANGE) -> list[IdentityCheck]:
    return [IdentityCheck(name, m, fn(m)) for name, fn in IDENTITIES.items() for m in parties]


def format_checks(checks: list[IdentityCheck]) -> str:
    width = max(len(c.name) for c in checks)
    return "\n".join(
        f"{'PASS' if c.passed else 'FAIL'}  {c.name.ljust(width)}  m={c.m}  max deviation {c.max_deviation:.3e}"
        for c in checks
    )
