"""Parameterized gate families and the ansatz/circuit container.

Single-qubit gates are axis-angle rotations R_n(theta) = exp(-i theta/2 n.sigma).
Two-qubit composites have the sandwich form A * (I x R_n(theta)) * B *
(I x R_n(theta))^dag * C with the rotation acting on the second qubit of the
pair; the fixed stages A/B/C are CNOT/CZ/Z words per family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation

TWO_PI = 2.0 * math.pi

_Z2 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_X2 = np.array([[0, 1], [1, 0]], dtype=np.complex128)

FAMILIES = ("excitation", "swap", "hop", "rbs")

# Fixed stages as time-ordered primitive ops on pair-local qubits (0=first,
# 1=second).  Operator products read right to left, so e.g. the hop stage
# A = Z_2 X^c_{2,1} applies the CNOT before the Z.
_FAMILY_STAGES = {
    "excitation": ((("cx", 1, 0),), (("cz", 0, 1),), (("cx", 1, 0),)),
    "swap": ((("cx", 1, 0),), (("cx", 0, 1),), (("cx", 1, 0),)),
    "hop": ((("cx", 1, 0), ("1q", 1, _Z2)), (("cz", 0, 1),), (("cx", 1, 0),)),
    "rbs": ((("cx", 1, 0),), (("cz", 0, 1),), (("cz", 0, 1), ("1q", 1, _Z2), ("cx", 1, 0))),
}


def wrap_angle(theta: float) -> float:
    """Map an angle into [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    return t + TWO_PI if t < 0 else t


def normalize_axis(axis) -> np.ndarray:
    v = np.asarray(axis, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if n < 1e-14:
        raise ContractViolation("zero axis cannot be normalized")
    return v / n


@dataclass(frozen=True)
class GateParam:
    """Axis-angle parameter (theta, n) with theta in [0, 2pi] and |n| = 1."""

    theta: float
    axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=np.float64).reshape(3))
        if not (-1e-12 <= self.theta <= TWO_PI + 1e-12):
            raise ContractViolation(f"theta {self.theta} outside [0, 2pi]")
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise ContractViolation(f"axis {self.axis} is not unit length")


def make_param(theta: float, axis) -> GateParam:
    """GateParam with the angle wrapped and the axis renormalized."""
    return GateParam(wrap_angle(theta), normalize_axis(axis))


@dataclass(frozen=True)
class GateKind:
    """Gate family tag plus frozen structure (fixed axis / composite family)."""

    tag: str  # "general" | "fixed_axis" | "fraxis" | "composite"
    axis: tuple[float, float, float] | None = None
    family: str | None = None

    @classmethod
    def general(cls) -> "GateKind":
        return cls("general")

    @classmethod
    def fixed_axis(cls, axis) -> "GateKind":
        return cls("fixed_axis", axis=tuple(normalize_axis(axis)))

    @classmethod
    def fraxis(cls) -> "GateKind":
        return cls("fraxis")

    @classmethod
    def composite(cls, family: str) -> "GateKind":
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        return cls("composite", family=family)

    @property
    def free_parameters(self) -> int:
        if self.tag == "general":
            return 3
        if self.tag == "fraxis":
            return 2
        if self.tag == "composite":
            return 2 if self.family == "excitation" else 1
        return 1

    @property
    def qubits_needed(self) -> int:
        return 2 if self.tag == "composite" else 1


def check_kind_param(kind: GateKind, p: GateParam):
    """Raise if p violates the kind's frozen-structure invariants."""
    if kind.tag == "fixed_axis":
        if np.max(np.abs(p.axis - np.asarray(kind.axis))) > 1e-12:
            raise ContractViolation("fixed-axis gate with a different axis")
    elif kind.tag == "fraxis":
        if abs(p.theta - math.pi) > 1e-12:
            raise ContractViolation("fraxis gate requires theta = pi")
    elif kind.tag == "composite":
        fam = kind.family
        if fam == "swap":
            if np.max(np.abs(p.axis - np.array([0.0, 0.0, 1.0]))) > 1e-12:
                raise ContractViolation("swap gate requires axis (0,0,1)")
        else:
            if abs(p.theta - math.pi) > 1e-12:
                raise ContractViolation(f"{fam} gate requires theta = pi")
            if fam in ("hop", "rbs") and abs(p.axis[1]) > 1e-12:
                raise ContractViolation(f"{fam} gate requires the axis in the XZ plane")


def rotation_matrix(p: GateParam) -> np.ndarray:
    """R_n(theta) = cos(theta/2) I - i sin(theta/2) n.sigma."""
    c = math.cos(p.theta / 2.0)
    s = math.sin(p.theta / 2.0)
    nx, ny, nz = p.axis
    return np.array(
        [
            [c - 1j * s * nz, -s * ny - 1j * s * nx],
            [s * ny - 1j * s * nx, c + 1j * s * nz],
        ],
        dtype=np.complex128,
    )


def axis_from_angles(psi: float, phi: float) -> np.ndarray:
    """n(psi, phi) = (sin(psi/2)cos(phi), sin(psi/2)sin(phi), cos(psi/2))."""
    s = math.sin(psi / 2.0)
    return np.array([s * math.cos(phi), s * math.sin(phi), math.cos(psi / 2.0)])


def angles_from_axis(axis) -> tuple[float, float]:
    """Inverse of axis_from_angles with psi in [0, 2pi], phi in [0, 2pi)."""
    nx, ny, nz = normalize_axis(axis)
    psi = 2.0 * math.atan2(math.hypot(nx, ny), nz)
    phi = wrap_angle(math.atan2(ny, nx)) if math.hypot(nx, ny) > 1e-14 else 0.0
    return psi, phi


def family_stage_ops(family: str, first: int, second: int):
    """(a_ops, b_ops, c_ops) as time-ordered op tuples on actual qubit indices."""
    remap = {0: first, 1: second}

    def conv(stage):
        out = []
        for op in stage:
            if op[0] == "1q":
                out.append(("1q", remap[op[1]], op[2]))
            else:
                out.append((op[0], remap[op[1]], remap[op[2]]))
        return tuple(out)

    a, b, c = _FAMILY_STAGES[family]
    return conv(a), conv(b), conv(c)


def append_ops(builder: kernels.PackedOps, ops) -> list[int]:
    """Append generic op tuples to a PackedOps builder; returns op indices."""
    idx = []
    for op in ops:
        if op[0] == "1q":
            idx.append(builder.add_1q(op[1], op[2]))
        elif op[0] == "cx":
            idx.append(builder.add_cx(op[1], op[2]))
        elif op[0] == "cz":
            idx.append(builder.add_cz(op[1], op[2]))
        else:
            raise ValueError(f"unknown op {op[0]!r}")
    return idx


def composite_matrix(family: str, p: GateParam) -> np.ndarray:
    """4x4 matrix of A (IxR) B (IxR)^dag C on basis |q_first q_second>."""
    kind = GateKind.composite(family)
    check_kind_param(kind, p)
    a_ops, b_ops, c_ops = family_stage_ops(family, 0, 1)
    r = rotation_matrix(p)
    seq = kernels.PackedOps(2)
    append_ops(seq, c_ops)
    seq.add_1q(1, r.conj().T)
    append_ops(seq, b_ops)
    seq.add_1q(1, r)
    append_ops(seq, a_ops)
    out = np.empty((4, 4), dtype=np.complex128)
    for j in range(4):
        col = np.zeros(4, dtype=np.complex128)
        col[j] = 1.0
        seq.run(col)
        out[:, j] = col
    return out


def blocks_preserved(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """True if a 4x4 matrix maps each Hamming-weight subspace to itself."""
    blocks = ((0,), (1, 2), (3,))
    group = {}
    for g, idxs in enumerate(blocks):
        for i in idxs:
            group[i] = g
    for i in range(4):
        for j in range(4):
            if group[i] != group[j] and abs(matrix[i, j]) > tol:
                return False
    return True


def preservation_check(family: str, p: GateParam) -> bool:
    """True iff the family's composite keeps Hamming-weight blocks intact."""
    return blocks_preserved(composite_matrix(family, p))


GARD_OFFSET = 1.5 * math.pi


def gard_full_ops(p: GateParam, first: int, second: int):
    """Time-ordered CNOT/R_z/R_y realization of the excitation composite.

    N(psi, phi) = X^c_{2,1} R_z(phi) R_y(psi + 3pi/2) X^c_{1,2}
                  R_y(psi + 3pi/2)^dag R_z(phi)^dag X^c_{2,1},
    rotations on the second qubit.
    """
    psi, phi = angles_from_axis(p.axis)
    g = psi + GARD_OFFSET
    ry = rotation_matrix(make_param(wrap_angle(g), (0, 1, 0)))
    rz = rotation_matrix(make_param(wrap_angle(phi), (0, 0, 1)))
    return (
        ("cx", second, first),
        ("1q", second, rz.conj().T),
        ("1q", second, ry.conj().T),
        ("cx", first, second),
        ("1q", second, ry),
        ("1q", second, rz),
        ("cx", second, first),
    )


def gard_update_stages(p: GateParam, first: int, second: int, sub: str):
    """Effective (a_ops, b_ops, c_ops, axis, angle) for one decomposed update.

    sub="psi" exposes the R_y pair (angle psi + 3pi/2, axis y); sub="phi"
    exposes the R_z pair (angle phi, axis z).  The returned stages are
    time-ordered op tuples; the exposed rotation acts on the second qubit.
    """
    psi, phi = angles_from_axis(p.axis)
    if sub == "psi":
        rz = rotation_matrix(make_param(wrap_angle(phi), (0, 0, 1)))
        c_ops = (("cx", second, first), ("1q", second, rz.conj().T))
        b_ops = (("cx", first, second),)
        a_ops = (("1q", second, rz), ("cx", second, first))
        return a_ops, b_ops, c_ops, np.array([0.0, 1.0, 0.0]), wrap_angle(psi + GARD_OFFSET)
    if sub == "phi":
        g = wrap_angle(psi + GARD_OFFSET)
        ry = rotation_matrix(make_param(g, (0, 1, 0)))
        c_ops = (("cx", second, first),)
        b_ops = (("1q", second, ry.conj().T), ("cx", first, second), ("1q", second, ry))
        a_ops = (("cx", second, first),)
        return a_ops, b_ops, c_ops, np.array([0.0, 0.0, 1.0]), wrap_angle(phi)
    raise ValueError(f"unknown sub-parameter {sub!r}")


def gard_install(p: GateParam, sub: str, theta_star: float) -> GateParam:
    """New composite param after optimizing one decomposed angle."""
    psi, phi = angles_from_axis(p.axis)
    if sub == "psi":
        psi = wrap_angle(theta_star - GARD_OFFSET)
    elif sub == "phi":
        phi = wrap_angle(theta_star)
    else:
        raise ValueError(f"unknown sub-parameter {sub!r}")
    return GateParam(math.pi, axis_from_angles(psi, phi))


@dataclass
class Slot:
    """One parameterized position in the circuit."""

    kind: GateKind
    qubits: tuple[int, ...]
    param: GateParam


class Ansatz:
    """Ordered parameterized slots and fixed gates over one packed circuit."""

    def __init__(self, qubit_count: int, elements):
        """elements: sequence of ("slot", GateKind, qubits) and fixed ops
        ("x", q) / ("cx", c, t) / ("cz", a, b), in time order."""
        self.qubit_count = qubit_count
        self.slots: list[Slot] = []
        self.slot_ops: list[int] = []
        self.packed = kernels.PackedOps(qubit_count)
        normalized = []
        for el in elements:
            if el[0] == "slot":
                kind, qubits = el[1], tuple(el[2])
                if len(qubits) != kind.qubits_needed:
                    raise ContractViolation(f"{kind.tag} slot takes {kind.qubits_needed} qubits")
                if any(not 0 <= q < qubit_count for q in qubits) or len(set(qubits)) != len(qubits):
                    raise ContractViolation(f"bad slot qubits {qubits}")
                param = _default_param(kind)
                self.slots.append(Slot(kind, qubits, param))
                if kind.tag == "composite":
                    op = self.packed.add_2q(qubits[0], qubits[1],
                                            composite_matrix(kind.family, param))
                else:
                    op = self.packed.add_1q(qubits[0], rotation_matrix(param))
                self.slot_ops.append(op)
                normalized.append(("slot", kind, qubits))
            elif el[0] == "x":
                self.packed.add_1q(el[1], _X2)
                normalized.append(tuple(el))
            elif el[0] == "cx":
                self.packed.add_cx(el[1], el[2])
                normalized.append(tuple(el))
            elif el[0] == "cz":
                self.packed.add_cz(el[1], el[2])
                normalized.append(tuple(el))
            else:
                raise ValueError(f"unknown element {el[0]!r}")
        self.elements = tuple(normalized)

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    def set_param(self, i: int, p: GateParam):
        """Install a new parameter at slot i (wrapped/normalized upstream)."""
        slot = self.slots[i]
        check_kind_param(slot.kind, p)
        slot.param = p
        if slot.kind.tag == "composite":
            self.packed.set_2q(self.slot_ops[i], composite_matrix(slot.kind.family, p))
        else:
            self.packed.set_1q(self.slot_ops[i], rotation_matrix(p))

    def params(self) -> list[GateParam]:
        return [s.param for s in self.slots]

    def set_params(self, params):
        for i, p in enumerate(params):
            self.set_param(i, p)

    def state(self):
        """Full-circuit state applied to |0...0>."""
        from .state import Statevector

        amps = np.zeros(2**self.qubit_count, dtype=np.complex128)
        amps[0] = 1.0
        self.packed.run(amps)
        return Statevector(amps, self.qubit_count)

    def copy(self) -> "Ansatz":
        new = Ansatz.__new__(Ansatz)
        new.qubit_count = self.qubit_count
        new.slots = [Slot(s.kind, s.qubits, s.param) for s in self.slots]
        new.slot_ops = list(self.slot_ops)
        new.packed = self.packed.clone()
        new.elements = self.elements
        return new


@dataclass(frozen=True)
class SplitCircuit:
    """Op ranges before/after one slot: V1 = [0, op), V2 = [op+1, n)."""

    v1: tuple[int, int]
    slot: Slot
    op_index: int
    v2: tuple[int, int]


def split_at(ansatz: Ansatz, d: int) -> SplitCircuit:
    """Split around 1-based slot d into (V1 segment, slot, V2 segment)."""
    if not 1 <= d <= ansatz.slot_count:
        raise IndexError(f"slot {d} out of range 1..{ansatz.slot_count}")
    op = ansatz.slot_ops[d - 1]
    return SplitCircuit((0, op), ansatz.slots[d - 1], op, (op + 1, ansatz.packed.n))


def _default_param(kind: GateKind) -> GateParam:
    if kind.tag == "fixed_axis":
        return GateParam(0.0, np.asarray(kind.axis))
    if kind.tag == "composite" and kind.family == "swap":
        return GateParam(0.0, np.array([0.0, 0.0, 1.0]))
    if kind.tag == "composite":
        return GateParam(math.pi, np.array([0.0, 0.0, 1.0]))
    return GateParam(math.pi, np.array([0.0, 1.0, 0.0]))


def _ladder_layer(qubits: int):
    return [("cz", q, q + 1) for q in range(qubits - 1)]


def build_preset(name: str, qubits: int | None = None, layers: int = 2) -> Ansatz:
    """Named ansatz presets.

    fig3-*: one single-qubit gate per qubit, a CZ ladder after each of the
    `layers` repetitions, and a final gate layer (no wrap-around entangler).
    fig7-excitation: X on qubits 0 and 2, then excitation-conserving
    composites on pairs (0,1), (2,3), (1,2), (0,1), (2,3).
    """
    if name == "fig7-excitation":
        m = 4 if qubits is None else qubits
        if m != 4:
            raise ValueError("fig7-excitation is a 4-qubit ansatz")
        kind = GateKind.composite("excitation")
        elements = [("x", 0), ("x", 2)]
        for pair in ((0, 1), (2, 3), (1, 2), (0, 1), (2, 3)):
            elements.append(("slot", kind, pair))
        return Ansatz(m, elements)

    m = 5 if qubits is None else qubits
    if name == "fig3-general":
        kinds = [GateKind.general()]
    elif name == "fig3-ry":
        kinds = [GateKind.fixed_axis((0, 1, 0))]
    elif name == "fig3-fraxis":
        kinds = [GateKind.fraxis()]
    elif name == "fig3-rzryrz":
        kinds = [
            GateKind.fixed_axis((0, 0, 1)),
            GateKind.fixed_axis((0, 1, 0)),
            GateKind.fixed_axis((0, 0, 1)),
        ]
    else:
        raise ValueError(f"unknown preset {name!r}")

    elements = []
    for _ in range(layers):
        for q in range(m):
            for kind in kinds:
                elements.append(("slot", kind, (q,)))
        elements.extend(_ladder_layer(m))
    for q in range(m):
        for kind in kinds:
            elements.append(("slot", kind, (q,)))
    return Ansatz(m, elements)


def zyz_decompose(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (phi, psi, lam) with R_z(phi) R_y(psi) R_z(lam) = u up to phase.

    For special-unitary u the equality is exact; otherwise the global phase
    is divided out first.
    """
    u = np.asarray(u, dtype=np.complex128)
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    u = u / np.sqrt(det)
    a, b = u[0, 0], u[1, 0]
    psi = 2.0 * math.atan2(abs(b), abs(a))
    if abs(b) < 1e-12:
        return wrap_angle(-2.0 * np.angle(a)), psi, 0.0
    if abs(a) < 1e-12:
        return wrap_angle(2.0 * np.angle(b)), psi, 0.0
    mu = np.angle(a)
    nu = np.angle(b)
    return wrap_angle(nu - mu), psi, wrap_angle(-nu - mu)
