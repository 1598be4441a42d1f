"""Shared dense-matrix oracles, independent of the package's kernels.

Everything here builds operators by explicit Kronecker embedding and
literal gate matrices so that package results are checked against a
second, structurally different computation path.
"""

import numpy as np
import pytest
import scipy.linalg

from fqsim.gates import Ansatz, GateKind, GateParam, axis_from_angles
from fqsim.pauli import PauliTerm

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

CX_01 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                 dtype=np.complex128)  # control on first tensor factor
CZ_4 = np.diag([1, 1, 1, -1]).astype(np.complex128)


def rot2(theta, axis):
    """cos(t/2) I - i sin(t/2) n.sigma, written out directly."""
    nx, ny, nz = axis
    return (np.cos(theta / 2) * I2
            - 1j * np.sin(theta / 2) * (nx * X + ny * Y + nz * Z))


def embed1(mat, q, m):
    """Qubit 0 is the most significant bit: leftmost Kronecker factor."""
    out = np.eye(1, dtype=np.complex128)
    for k in range(m):
        out = np.kron(out, mat if k == q else I2)
    return out


def embed2(mat4, qa, qb, m):
    """Arbitrary-pair embedding by explicit basis-index bookkeeping."""
    dim = 1 << m
    out = np.zeros((dim, dim), dtype=np.complex128)
    sa, sb = m - 1 - qa, m - 1 - qb
    for col in range(dim):
        a, b = (col >> sa) & 1, (col >> sb) & 1
        base = col & ~(1 << sa) & ~(1 << sb)
        for a2 in (0, 1):
            for b2 in (0, 1):
                row = base | (a2 << sa) | (b2 << sb)
                out[row, col] += mat4[(a2 << 1) | b2, (a << 1) | b]
    return out


# two-qubit primitives in the pair's own 4x4 space (first qubit = MSB)
CX_FIRST_CTRL = CX_01
CX_SECOND_CTRL = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]],
                          dtype=np.complex128)
Z_SECOND = np.kron(I2, Z)

# A, B, C factors of the composite families (operator order: A R B R^dag C)
FAMILY_ABC = {
    "excitation": (CX_SECOND_CTRL, CZ_4, CX_SECOND_CTRL),
    "swap": (CX_SECOND_CTRL, CX_FIRST_CTRL, CX_SECOND_CTRL),
    "hop": (Z_SECOND @ CX_SECOND_CTRL, CZ_4, CX_SECOND_CTRL),
    "rbs": (CX_SECOND_CTRL, CZ_4, CX_SECOND_CTRL @ Z_SECOND @ CZ_4),
}


def composite_oracle(family, theta, axis) -> np.ndarray:
    """A (I(x)R) B (I(x)R^dag) C from literal factor matrices."""
    a, b, c = FAMILY_ABC[family]
    r = np.kron(I2, rot2(theta, axis))
    return a @ r @ b @ r.conj().T @ c


def pauli_string_matrix(axes):
    out = np.eye(1, dtype=np.complex128)
    for ch in axes:
        out = np.kron(out, PAULI[ch])
    return out


def hamiltonian_matrix(h):
    dim = 1 << h.qubit_count
    out = np.zeros((dim, dim), dtype=np.complex128)
    for term in h.terms:
        out += term.coefficient * pauli_string_matrix(term.axes)
    return out


def ansatz_matrix(ansatz: Ansatz) -> np.ndarray:
    """Full circuit unitary from the element list, via dense embeddings."""
    m = ansatz.qubit_count
    out = np.eye(1 << m, dtype=np.complex128)
    slot_index = 0
    for element in ansatz.elements:
        tag = element[0]
        if tag == "slot":
            slot = ansatz.slots[slot_index]
            slot_index += 1
            if slot.kind.tag == "composite":
                g = embed2(composite_oracle(slot.kind.family, slot.param.theta,
                                            slot.param.axis),
                           slot.qubits[0], slot.qubits[1], m)
            else:
                g = embed1(rot2(slot.param.theta, slot.param.axis),
                           slot.qubits[0], m)
        elif tag == "x":
            g = embed1(X, element[1], m)
        elif tag == "cx":
            g = embed2(CX_01, element[1], element[2], m)
        elif tag == "cz":
            g = embed2(CZ_4, element[1], element[2], m)
        else:  # pragma: no cover
            raise AssertionError(f"unknown element {element}")
        out = g @ out
    return out


def dense_state(ansatz: Ansatz) -> np.ndarray:
    vec = np.zeros(1 << ansatz.qubit_count, dtype=np.complex128)
    vec[0] = 1.0
    return ansatz_matrix(ansatz) @ vec


def random_state(rng, m):
    v = rng.standard_normal(1 << m) + 1j * rng.standard_normal(1 << m)
    return v / np.linalg.norm(v)


def random_axis(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def dense_circuit_matrix(ansatz, replace=None):
    """Literal-matrix walk of the element list.

    replace=(d, mat) substitutes `mat` (2x2 or 4x4 in the slot's own space)
    for 1-based slot d's gate, bypassing the package's parameter checks.
    """
    m = ansatz.qubit_count
    out = np.eye(1 << m, dtype=np.complex128)
    slot_index = 0
    for element in ansatz.elements:
        tag = element[0]
        if tag == "slot":
            slot = ansatz.slots[slot_index]
            slot_index += 1
            if replace is not None and slot_index == replace[0]:
                if slot.kind.tag == "composite":
                    g = embed2(replace[1], slot.qubits[0], slot.qubits[1], m)
                else:
                    g = embed1(replace[1], slot.qubits[0], m)
            elif slot.kind.tag == "composite":
                g = embed2(composite_oracle(slot.kind.family, slot.param.theta,
                                            slot.param.axis),
                           slot.qubits[0], slot.qubits[1], m)
            else:
                g = embed1(rot2(slot.param.theta, slot.param.axis),
                           slot.qubits[0], m)
        elif tag == "x":
            g = embed1(X, element[1], m)
        elif tag == "cx":
            g = embed2(CX_01, element[1], element[2], m)
        else:
            g = embed2(CZ_4, element[1], element[2], m)
        out = g @ out
    return out


def dense_vec(ansatz, replace=None):
    v = np.zeros(1 << ansatz.qubit_count, dtype=np.complex128)
    v[0] = 1.0
    return dense_circuit_matrix(ansatz, replace) @ v


def propagator(term, tau_step, kind):
    """e^{-h dt O} (imaginary) or e^{+i h dt O} (real) for the bare string."""
    x = term.coefficient * tau_step
    o = pauli_string_matrix(term.axes)
    return scipy.linalg.expm((-x if kind == "imaginary" else 1j * x) * o)


def dense_objective(ansatz, d, param, term, tau_step, kind):
    """Propagator-weighted overlap with slot d reset to `param`."""
    slot = ansatz.slots[d - 1]
    if slot.kind.tag == "composite":
        mat = composite_oracle(slot.kind.family, param.theta, param.axis)
    else:
        mat = rot2(param.theta, param.axis)
    old = dense_vec(ansatz)
    new = dense_vec(ansatz, replace=(d, mat))
    return float(np.real(np.vdot(old, propagator(term, tau_step, kind) @ new)))


# ---------------------------------------------------------------------------
# randomized circuit instances


def rand_param(kind, rng):
    if kind.tag == "general":
        return GateParam(float(rng.uniform(0, 2 * np.pi)), random_axis(rng))
    if kind.tag == "fraxis":
        return GateParam(np.pi, random_axis(rng))
    if kind.tag == "fixed_axis":
        return GateParam(float(rng.uniform(0, 2 * np.pi)), np.asarray(kind.axis))
    fam = kind.family
    if fam == "swap":
        return GateParam(float(rng.uniform(0, 2 * np.pi)), np.array([0.0, 0.0, 1.0]))
    if fam in ("hop", "rbs"):
        return GateParam(np.pi, axis_from_angles(float(rng.uniform(0, 2 * np.pi)), 0.0))
    return GateParam(np.pi, random_axis(rng))


def randomized(ansatz, rng):
    for i, slot in enumerate(ansatz.slots):
        ansatz.set_param(i, rand_param(slot.kind, rng))
    return ansatz


def mixed_1q(rng, kind, q=1):
    """3-qubit circuit with the probed slot buried mid-circuit; returns (a, d)."""
    g = GateKind.general()
    elements = [
        ("slot", g, (0,)), ("slot", g, (1,)), ("slot", g, (2,)),
        ("cz", 0, 1), ("cx", 1, 2),
        ("slot", kind, (q,)),
        ("x", 0), ("cz", 1, 2),
        ("slot", g, (0,)), ("slot", g, (2,)),
    ]
    return randomized(Ansatz(3, elements), rng), 4


def mixed_2q(rng, family, pair=(1, 2)):
    g = GateKind.general()
    elements = [
        ("slot", g, (0,)), ("slot", g, (1,)), ("slot", g, (2,)), ("slot", g, (3,)),
        ("cz", 0, 1), ("cx", 2, 3),
        ("slot", GateKind.composite(family), pair),
        ("cz", 1, 2),
        ("slot", g, (0,)), ("slot", g, (3,)),
    ]
    return randomized(Ansatz(4, elements), rng), 5


def rand_term(rng, m):
    axes = "".join(str(rng.choice(list("IXYZ"))) for _ in range(m))
    if set(axes) == {"I"}:
        axes = "Z" + axes[1:]
    return PauliTerm(float(rng.uniform(-1.5, 1.5)), axes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
