"""Dense statevector engine: gate application, overlaps, measurement circuits.

Public operations return new Statevector values; the evolution hot path
works on raw amplitude buffers through kernels.PackedOps instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation


@dataclass
class Statevector:
    """Flat complex amplitude vector over 2**m basis states."""

    amplitudes: np.ndarray
    qubit_count: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.qubit_count,):
            raise ContractViolation(
                f"amplitude length {self.amplitudes.shape} != 2**{self.qubit_count}"
            )

    @classmethod
    def zero(cls, qubit_count: int) -> "Statevector":
        amps = np.zeros(2**qubit_count, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, qubit_count)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.qubit_count)


def _check_unitary(mat: np.ndarray, dim: int):
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.shape != (dim, dim):
        raise ContractViolation(f"expected {dim}x{dim} matrix, got {mat.shape}")
    if np.max(np.abs(mat @ mat.conj().T - np.eye(dim))) > 1e-10:
        raise ContractViolation("matrix is not unitary within 1e-10")
    return mat


def apply_single_qubit(state: Statevector, qubit_index: int, matrix) -> Statevector:
    """Apply a unitary 2x2 matrix to one qubit; returns a new state."""
    if not 0 <= qubit_index < state.qubit_count:
        raise ContractViolation(f"qubit {qubit_index} out of range")
    mat = _check_unitary(matrix, 2)
    out = state.amplitudes.copy()
    kernels.apply_1q(out, qubit_index, state.qubit_count, mat)
    return Statevector(out, state.qubit_count)


def apply_controlled(state: Statevector, control: int, target: int, matrix) -> Statevector:
    """Apply a 2x2 matrix to target amplitudes where the control bit is 1."""
    m = state.qubit_count
    if control == target:
        raise ValueError("control == target")
    if not (0 <= control < m and 0 <= target < m):
        raise ContractViolation("control/target out of range")
    mat = _check_unitary(matrix, 2)
    out = state.amplitudes.copy()
    kernels.apply_c1q(out, control, target, m, mat)
    return Statevector(out, m)


def apply_two_qubit(state: Statevector, first: int, second: int, matrix) -> Statevector:
    """Apply a unitary 4x4 matrix to the ordered qubit pair (first, second)."""
    m = state.qubit_count
    if first == second:
        raise ValueError("first == second")
    mat = _check_unitary(matrix, 4)
    out = state.amplitudes.copy()
    kernels.apply_2q(out, first, second, m, mat)
    return Statevector(out, m)


def inner_product(bra: Statevector, ket: Statevector) -> complex:
    """<bra|ket> with the bra conjugated."""
    if bra.qubit_count != ket.qubit_count:
        raise ContractViolation("qubit count mismatch in inner product")
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def simulate_hadamard_test(w0, w1, w2, insert1, insert2, observable) -> tuple[float, float]:
    """Ancilla-interference evaluation of (<Z_a x O>, <Z_a x I>).

    w0/w1/w2 are kernels.PackedOps segments on m qubits; insert1/insert2 are
    (2x2 matrix, qubit) pairs applied under ancilla control after w0 and w1.
    The ancilla is added internally as qubit index m, prepared by H, and
    un-rotated by H before measurement, so
    <Z_a x M> = Re <psi_A| M |psi_B> with |psi_A> = W2 W1 W0 |0>,
    |psi_B> = W2 R2 W1 R1 W0 |0>.
    """
    m = w0.qubit_count
    if w1.qubit_count != m or w2.qubit_count != m:
        raise ContractViolation("segment qubit counts differ")
    anc = m
    big = kernels.PackedOps(m + 1)
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    big.add_1q(anc, h)
    _extend(big, w0)
    mat1, q1 = insert1
    big.add_c1q(anc, q1, _check_unitary(mat1, 2))
    _extend(big, w1)
    mat2, q2 = insert2
    big.add_c1q(anc, q2, _check_unitary(mat2, 2))
    _extend(big, w2)
    big.add_1q(anc, h)

    amps = Statevector.zero(m + 1).amplitudes
    big.run(amps)

    za_i = _za_expectation(amps, m, None)
    za_o = sum(_za_expectation(amps, m, t) for t in observable.terms)
    return za_o, za_i


def _extend(big, seg):
    """Copy an m-qubit segment onto an (m+1)-qubit builder (same indices)."""
    big.append_from(seg)


def _za_expectation(amps, m, term):
    """<Z_ancilla x O> on an (m+1)-qubit state; term None means O = I."""
    if term is None:
        axes = "I" * m + "Z"
        coeff = 1.0
    else:
        axes = term.axes + "Z"
        coeff = term.coefficient
    xm, zm, ym, ph0 = kernels.pauli_masks(axes)
    val = kernels.pauli_expect(amps, xm, zm, ym, ph0)
    if abs(val.imag) > 1e-10:
        raise ContractViolation(f"ancilla expectation has imaginary residue {val.imag}")
    return coeff * val.real


def states_equal(a: Statevector, b: Statevector, tol: float = 1e-10) -> bool:
    """True if two normalized states match up to a global phase."""
    return abs(abs(np.vdot(a.amplitudes, b.amplitudes)) - 1.0) < tol
