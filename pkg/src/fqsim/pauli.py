"""Pauli strings, weighted-sum Hamiltonians, and their statevector action.

Conventions fixed package-wide: qubit 0 is the leftmost label of a string
and the most significant bit of a basis index; Y|0> = i|1>, Y|1> = -i|0>.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractViolation, ResourceError

_LABELS = frozenset("IXYZ")

_SINGLE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

ORACLE_QUBIT_CAP = 12


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string h * (s_0 x s_1 x ... x s_{m-1})."""

    coefficient: float
    axes: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ContractViolation(f"non-finite coefficient {self.coefficient}")
        if not self.axes or not set(self.axes) <= _LABELS:
            raise ContractViolation(f"bad pauli string {self.axes!r}")

    @property
    def qubit_count(self) -> int:
        return len(self.axes)

    def masks(self):
        return kernels.pauli_masks(self.axes)


@dataclass(frozen=True)
class Hamiltonian:
    """Ordered weighted sum of Pauli strings; order fixes the Trotter product."""

    terms: tuple[PauliTerm, ...]
    qubit_count: int = field(default=0)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ContractViolation("empty Hamiltonian")
        m = terms[0].qubit_count
        if any(t.qubit_count != m for t in terms):
            raise ContractViolation("terms with mixed qubit counts")
        if self.qubit_count == 0:
            object.__setattr__(self, "qubit_count", m)
        elif self.qubit_count != m:
            raise ContractViolation("qubit_count does not match term length")


def apply_pauli_string(term: PauliTerm, state) -> "Statevector":
    """Return coefficient * (O |state>)."""
    from .state import Statevector

    if term.qubit_count != state.qubit_count:
        raise ContractViolation(
            f"term acts on {term.qubit_count} qubits, state has {state.qubit_count}"
        )
    xm, zm, ym, ph0 = term.masks()
    out = np.empty_like(state.amplitudes)
    kernels.apply_pauli(state.amplitudes, out, xm, zm, ym, ph0 * term.coefficient)
    return Statevector(out, state.qubit_count)


def expectation(term: PauliTerm, state) -> float:
    """coefficient * <state|O|state> for a normalized state."""
    nrm = np.linalg.norm(state.amplitudes)
    if abs(nrm - 1.0) > 1e-10:
        raise ContractViolation(f"expectation on non-normalized state (norm {nrm})")
    xm, zm, ym, ph0 = term.masks()
    val = kernels.pauli_expect(state.amplitudes, xm, zm, ym, ph0)
    if abs(val.imag) > 1e-10:
        raise ContractViolation(f"expectation has imaginary residue {val.imag}")
    return term.coefficient * val.real


def term_matrix(term: PauliTerm) -> np.ndarray:
    """Dense 2^m x 2^m matrix of one weighted Pauli string."""
    if term.qubit_count > ORACLE_QUBIT_CAP:
        raise ResourceError(f"{term.qubit_count} qubits exceeds dense cap {ORACLE_QUBIT_CAP}")
    mat = np.array([[term.coefficient]], dtype=np.complex128)
    for ax in term.axes:
        mat = np.kron(mat, _SINGLE[ax])
    return mat


def dense_matrix(h: Hamiltonian) -> np.ndarray:
    """Dense Hermitian matrix of the full Hamiltonian."""
    if h.qubit_count > ORACLE_QUBIT_CAP:
        raise ResourceError(f"{h.qubit_count} qubits exceeds dense cap {ORACLE_QUBIT_CAP}")
    out = np.zeros((2**h.qubit_count,) * 2, dtype=np.complex128)
    for t in h.terms:
        out += term_matrix(t)
    return out


def hamiltonian_expectation(h: Hamiltonian, state) -> float:
    """<state|H|state> summed term by term."""
    return sum(expectation(t, state) for t in h.terms)


def parse_hamiltonian_text(text: str) -> Hamiltonian:
    """Parse the '<coefficient> <pauli-string>' line format.

    '#' begins a comment, blank lines are skipped, and line order is
    preserved (it defines the Trotter term order).
    """
    terms: list[PauliTerm] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <pauli-string>'")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric coefficient {parts[0]!r}") from None
        axes = parts[1].upper()
        if not set(axes) <= _LABELS:
            raise ValueError(f"line {lineno}: bad pauli label in {parts[1]!r}")
        if width is None:
            width = len(axes)
        elif len(axes) != width:
            raise ValueError(f"line {lineno}: string length {len(axes)} != {width}")
        terms.append(PauliTerm(coeff, axes))
    if not terms:
        raise ValueError("no Hamiltonian terms found (comments/blank lines only)")
    return Hamiltonian(tuple(terms))


def format_hamiltonian(h: Hamiltonian) -> str:
    """Inverse of parse_hamiltonian_text (round-trips terms and order)."""
    return "\n".join(f"{t.coefficient!r} {t.axes}" for t in h.terms) + "\n"


def heisenberg_1d(sites: int = 5, coupling: float = 1.0, field_h: float = 1.0,
                  periodic: bool = True) -> Hamiltonian:
    """1D Heisenberg chain: J * sum_edges (XX+YY+ZZ) + h * sum_i Z_i.

    Terms are emitted per edge as (XX, YY, ZZ) in edge order
    (0,1),(1,2),...,then the wrap edge, then all Z fields.
    """
    if sites < 2:
        raise ValueError("need at least 2 sites")
    edges = [(i, i + 1) for i in range(sites - 1)]
    if periodic:
        edges.append((sites - 1, 0))
    terms = []
    for i, j in edges:
        for ax in "XYZ":
            labels = ["I"] * sites
            labels[i] = ax
            labels[j] = ax
            terms.append(PauliTerm(coupling, "".join(labels)))
    for i in range(sites):
        labels = ["I"] * sites
        labels[i] = "Z"
        terms.append(PauliTerm(field_h, "".join(labels)))
    return Hamiltonian(tuple(terms))
