"""Closed-form coordinate updates for axis-angle gates.

Restricted to one gate, each evolution substep objective is linear in
(cos(theta/2), n sin(theta/2)) with coefficients (g0, g) — evaluated here
from a handful of modified-circuit expectations — and, for pi-angle
two-qubit composites, quadratic in the axis with a symmetric coefficient
matrix S.  The solvers return the exact restricted maximizer.

Evaluator modes: "exact" contracts statevectors directly; "circuit" builds
the corresponding measurement circuits (expectation sampling with inserted
quarter-turns, or ancilla interference tests) and must agree with "exact"
to numerical precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation
from .gates import (
    Ansatz,
    GateParam,
    append_ops,
    family_stage_ops,
    gard_update_stages,
    rotation_matrix,
    split_at,
    wrap_angle,
)
from .pauli import Hamiltonian, PauliTerm

_I2 = np.eye(2, dtype=np.complex128)
_X2 = np.array([[0, 1], [1, 0]], dtype=np.complex128)

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

# Sigma_mu = (I, -i sx, -i sy, -i sz): the gate-replacement operators whose
# span contains every axis-angle rotation with real coefficients.
CAP_SIGMA = (_I2, -1j * SIGMA[0], -1j * SIGMA[1], -1j * SIGMA[2])

_MU_INDEX = {0: 0, 1: 1, 2: 2, 3: 3, "0": 0, "x": 1, "y": 2, "z": 3}

_AXIS_NAME = "xyz"


def _mu(mu) -> int:
    try:
        return _MU_INDEX[mu]
    except KeyError:
        raise ValueError(f"mu must be one of 0/x/y/z, got {mu!r}") from None


# ---------------------------------------------------------------------------
# coefficient containers


@dataclass
class GVector:
    """Linear objective coefficients: F = g0 cos(theta/2) + (n.g) sin(theta/2)."""

    g0: float
    g: np.ndarray


@dataclass
class QSet:
    """The seven insertion expectations: plain, and quarter-turns about x/y/z."""

    q_plus_0: float
    q_plus: np.ndarray
    q_minus: np.ndarray


@dataclass
class AlphaBeta:
    """Axis-angle form of Sigma_mu R_n'(theta')^dag (always a rotation)."""

    alpha: float
    beta: np.ndarray


@dataclass
class GMatrix:
    """Axis-response matrix g and its symmetrization s = (g + g^T)/2."""

    g: np.ndarray
    s: np.ndarray


@dataclass
class HVector:
    """Sinusoid data for one-parameter composites:
    F(theta) = (h0+h3)/2 + ((h0-h3)/2) cos(theta) + ((h1+h2)/2) sin(theta)."""

    h0: float
    h1: float
    h2: float
    h3: float


class MeasurementSession:
    """Tracks distinct measurement configurations per gate update."""

    def __init__(self):
        self.updates: list[tuple[str, frozenset]] = []
        self._label = None
        self._keys = None

    def begin_update(self, label: str):
        if self._label is not None:
            raise ContractViolation("previous update still open")
        self._label = label
        self._keys = set()

    def record(self, key: str):
        if self._keys is not None:
            self._keys.add(key)

    def end_update(self):
        if self._label is None:
            raise ContractViolation("no update open")
        self.updates.append((self._label, frozenset(self._keys)))
        self._label = None
        self._keys = None


def measurement_counter(session: MeasurementSession) -> list[tuple[str, int]]:
    """(label, distinct measurement configurations) per recorded update."""
    return [(label, len(keys)) for label, keys in session.updates]


def _record(session, key):
    if session is not None:
        session.record(key)


# ---------------------------------------------------------------------------
# analytic pieces


def first_term(mu, prev: GateParam) -> float:
    """Overlap of the Sigma_mu-replaced circuit with the unmodified one.

    Closed form in the previous parameter alone: cos(theta'/2) for mu=0,
    n'_mu sin(theta'/2) otherwise.
    """
    i = _mu(mu)
    if i == 0:
        return math.cos(prev.theta / 2.0)
    return float(prev.axis[i - 1]) * math.sin(prev.theta / 2.0)


def _rotation_parts(a: float, v: np.ndarray, fallback: np.ndarray) -> AlphaBeta:
    """AlphaBeta for the unitary a*I - i v.sigma (requires a^2 + |v|^2 = 1)."""
    nv = float(np.linalg.norm(v))
    alpha = 2.0 * math.atan2(nv, a)
    if nv < 1e-14:
        # rotation is +-identity: any axis works, keep the gate's own
        return AlphaBeta(alpha, np.array(fallback, dtype=np.float64, copy=True))
    return AlphaBeta(alpha, v / nv)


def alpha_beta(mu, prev: GateParam) -> AlphaBeta:
    """Axis-angle (alpha, beta) with R_beta(alpha) = Sigma_mu R_n'(theta')^dag."""
    i = _mu(mu)
    if i == 0:
        return AlphaBeta(-prev.theta, np.array(prev.axis, dtype=np.float64, copy=True))
    c = math.cos(prev.theta / 2.0)
    s = math.sin(prev.theta / 2.0)
    u = np.zeros(3)
    u[i - 1] = 1.0
    a = s * float(prev.axis[i - 1])
    v = c * u - s * np.cross(u, prev.axis)
    return _rotation_parts(a, v, prev.axis)


def generator(qset: QSet, ab: AlphaBeta) -> float:
    """Expectation of the conjugated observable under the (alpha, beta) turn:
    cos(alpha/2) Q+0 + sin(alpha/2) sum_p beta_p (Q+p - Q-p)/2."""
    half = ab.alpha / 2.0
    diff = (qset.q_plus - qset.q_minus) / 2.0
    return math.cos(half) * qset.q_plus_0 + math.sin(half) * float(np.dot(ab.beta, diff))


def assemble_g(mu, prev: GateParam, qset, coeff_h: float, tau_step: float,
               time_kind: str = "imaginary") -> float:
    """One g-vector component from measured expectations.

    imaginary: cosh(h dt) first_term - sinh(h dt) generator(qset, alpha_beta).
    real: the propagator is unitary, the coefficients become cos/sin, and the
    measured carrier is the 3-vector Re<O' sigma_p> passed in place of the
    QSet: cos(h dt) first_term + sin(h dt) sin(alpha/2) (beta . carrier).
    """
    x = coeff_h * tau_step
    ft = first_term(mu, prev)
    if time_kind == "imaginary":
        return math.cosh(x) * ft - math.sinh(x) * generator(qset, alpha_beta(mu, prev))
    if time_kind == "real":
        carrier = np.asarray(qset, dtype=np.float64).reshape(3)
        ab = alpha_beta(mu, prev)
        return math.cos(x) * ft + math.sin(x) * math.sin(ab.alpha / 2.0) * float(
            np.dot(ab.beta, carrier)
        )
    raise ValueError(f"unknown time kind {time_kind!r}")


# ---------------------------------------------------------------------------
# statevector plumbing


def _zero_amps(m: int) -> np.ndarray:
    amps = np.zeros(2**m, dtype=np.complex128)
    amps[0] = 1.0
    return amps


def _apply_tuples(amps, m, ops):
    for op in ops:
        if op[0] == "1q":
            kernels.apply_1q(amps, op[1], m, op[2])
        elif op[0] == "cx":
            kernels.apply_c1q(amps, op[1], op[2], m, _X2)
        elif op[0] == "cz":
            kernels.apply_cz(amps, op[1], op[2], m)
        else:
            raise ValueError(f"unknown op {op[0]!r}")


def _quarter_turn(axis_index: int, sign: int) -> np.ndarray:
    """R about a coordinate axis by +-pi/2."""
    c = math.sqrt(0.5)
    return c * _I2 - 1j * (sign * c) * SIGMA[axis_index]


def _require_single_qubit(slot):
    if slot.kind.tag == "composite":
        raise ContractViolation("single-qubit slot required")


def _require_composite(slot):
    if slot.kind.tag != "composite":
        raise ContractViolation("two-qubit composite slot required")


def _expect_bare(amps, term: PauliTerm) -> float:
    """<O> for the unweighted Pauli string of a term."""
    xm, zm, ym, ph0 = term.masks()
    val = kernels.pauli_expect(amps, xm, zm, ym, ph0)
    if abs(val.imag) > 1e-10:
        raise ContractViolation(f"expectation has imaginary residue {val.imag}")
    return val.real


def _apply_bare(amps, term: PauliTerm) -> np.ndarray:
    """O |amps> for the unweighted Pauli string (fresh buffer)."""
    out = np.empty_like(amps)
    xm, zm, ym, ph0 = term.masks()
    kernels.apply_pauli(amps, out, xm, zm, ym, ph0)
    return out


def _rebuilt_circuit(ansatz: Ansatz, cut: int, insert_mat, insert_qubit: int,
                     replace: bool) -> np.ndarray:
    """Run a fresh full circuit with a gate inserted at (or substituted for)
    op position `cut`; returns the final amplitudes."""
    m = ansatz.qubit_count
    seq = kernels.PackedOps(m)
    seq.append_from(ansatz.packed, 0, cut)
    if insert_mat is not None:
        seq.add_1q(insert_qubit, insert_mat)
    seq.append_from(ansatz.packed, cut + 1 if replace else cut, ansatz.packed.n)
    return seq.run(_zero_amps(m))


# ---------------------------------------------------------------------------
# single-qubit evaluators


def eval_qset(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
              mode: str = "exact", session: MeasurementSession | None = None) -> QSet:
    """Seven insertion expectations for slot d against one Pauli string.

    A quarter-turn about each coordinate axis (both signs) is inserted right
    after the gate; the plain circuit supplies the seventh value.  tau_step
    is accepted for signature symmetry with the two-qubit evaluators — the
    expectations themselves do not depend on it.
    """
    del tau_step
    split = split_at(ansatz, d)
    _require_single_qubit(split.slot)
    q = split.slot.qubits[0]
    m = ansatz.qubit_count

    def measure(ins_mat, key):
        _record(session, key)
        if mode == "exact":
            amps = phi.copy()
            if ins_mat is not None:
                kernels.apply_1q(amps, q, m, ins_mat)
            ansatz.packed.run(amps, split.v2[0], split.v2[1])
        elif mode == "circuit":
            amps = _rebuilt_circuit(ansatz, split.op_index + 1, ins_mat, q, replace=False)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return _expect_bare(amps, term)

    phi = None
    if mode == "exact":
        phi = _zero_amps(m)
        ansatz.packed.run(phi, 0, split.op_index + 1)

    q_plus_0 = measure(None, "ins:0")
    q_plus = np.empty(3)
    q_minus = np.empty(3)
    for p in range(3):
        q_plus[p] = measure(_quarter_turn(p, +1), f"ins:+{_AXIS_NAME[p]}")
        q_minus[p] = measure(_quarter_turn(p, -1), f"ins:-{_AXIS_NAME[p]}")
    return QSet(q_plus_0, q_plus, q_minus)


def eval_axis_quadrature(ansatz: Ansatz, d: int, term: PauliTerm,
                         mode: str = "exact",
                         session: MeasurementSession | None = None) -> np.ndarray:
    """The 3-vector Re<psi_out| O |psi_p> with |psi_p> = V2 sigma_p R V1|0>.

    This is the real-part counterpart of the quarter-turn differences (which
    give imaginary parts) and carries the unitary-propagator g components.
    """
    split = split_at(ansatz, d)
    _require_single_qubit(split.slot)
    q = split.slot.qubits[0]
    m = ansatz.qubit_count
    out = np.empty(3)
    if mode == "exact":
        phi = _zero_amps(m)
        ansatz.packed.run(phi, 0, split.op_index + 1)
        psi_out = phi.copy()
        ansatz.packed.run(psi_out, split.v2[0], split.v2[1])
        obs = _apply_bare(psi_out, term)
        for p in range(3):
            _record(session, f"re:{_AXIS_NAME[p]}")
            amps = phi.copy()
            kernels.apply_1q(amps, q, m, SIGMA[p])
            ansatz.packed.run(amps, split.v2[0], split.v2[1])
            out[p] = np.vdot(obs, amps).real
    elif mode == "circuit":
        from .state import simulate_hadamard_test

        w0 = kernels.PackedOps(m)
        w0.append_from(ansatz.packed, 0, split.op_index + 1)
        w1 = kernels.PackedOps(m)
        w2 = kernels.PackedOps(m)
        w2.append_from(ansatz.packed, split.v2[0], split.v2[1])
        bare = Hamiltonian((PauliTerm(1.0, term.axes),))
        for p in range(3):
            _record(session, f"re:{_AXIS_NAME[p]}")
            za_o, _ = simulate_hadamard_test(w0, w1, w2, (SIGMA[p], q), (_I2, q), bare)
            out[p] = za_o
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def eval_axis_response(ansatz: Ansatz, d: int, term: PauliTerm,
                       mode: str = "exact",
                       session: MeasurementSession | None = None) -> np.ndarray:
    """Symmetric 3x3 matrix M_qp = Re<phi| sigma_q O' sigma_p |phi> for a
    pi-angle slot, from six gate-replacement expectations.

    Replacing the gate by R_u(pi) measures u^T M u; the three coordinate
    axes give the diagonal and three diagonal directions fill in the
    off-diagonal entries.
    """
    split = split_at(ansatz, d)
    _require_single_qubit(split.slot)
    q = split.slot.qubits[0]
    m = ansatz.qubit_count

    def measure(u, key):
        _record(session, key)
        # R_u(pi) = -i u.sigma; the phase drops out of the expectation
        mat = -1j * (u[0] * SIGMA[0] + u[1] * SIGMA[1] + u[2] * SIGMA[2])
        if mode == "exact":
            amps = phi.copy()
            kernels.apply_1q(amps, q, m, mat)
            ansatz.packed.run(amps, split.v2[0], split.v2[1])
        elif mode == "circuit":
            amps = _rebuilt_circuit(ansatz, split.op_index, mat, q, replace=True)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return _expect_bare(amps, term)

    phi = None
    if mode == "exact":
        phi = _zero_amps(m)
        ansatz.packed.run(phi, 0, split.v1[1])  # prefix without the gate

    out = np.empty((3, 3))
    for p in range(3):
        e = np.zeros(3)
        e[p] = 1.0
        out[p, p] = measure(e, f"rep:{_AXIS_NAME[p]}")
    for p, r in ((0, 1), (1, 2), (2, 0)):
        u = np.zeros(3)
        u[p] = u[r] = math.sqrt(0.5)
        mixed = measure(u, f"rep:{_AXIS_NAME[p]}{_AXIS_NAME[r]}")
        out[p, r] = out[r, p] = mixed - (out[p, p] + out[r, r]) / 2.0
    return out


def _nft_qs(ansatz: Ansatz, d: int, term: PauliTerm, mode: str,
            session: MeasurementSession | None) -> tuple[float, float, float]:
    """Plain expectation and the two insertions about the gate's own axis."""
    split = split_at(ansatz, d)
    _require_single_qubit(split.slot)
    q = split.slot.qubits[0]
    m = ansatz.qubit_count
    axis = split.slot.param.axis
    c = math.sqrt(0.5)

    def measure(ins_mat, key):
        _record(session, key)
        if mode == "exact":
            amps = phi.copy()
            if ins_mat is not None:
                kernels.apply_1q(amps, q, m, ins_mat)
            ansatz.packed.run(amps, split.v2[0], split.v2[1])
        elif mode == "circuit":
            amps = _rebuilt_circuit(ansatz, split.op_index + 1, ins_mat, q, replace=False)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return _expect_bare(amps, term)

    phi = None
    if mode == "exact":
        phi = _zero_amps(m)
        ansatz.packed.run(phi, 0, split.op_index + 1)

    sig_u = axis[0] * SIGMA[0] + axis[1] * SIGMA[1] + axis[2] * SIGMA[2]
    q0 = measure(None, "ins:0")
    qp = measure(c * _I2 - 1j * c * sig_u, "ins:+u")
    qm = measure(c * _I2 + 1j * c * sig_u, "ins:-u")
    return q0, qp, qm


# ---------------------------------------------------------------------------
# g-vector builders per optimizer flavor


def eval_g_vector(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                  time_kind: str = "imaginary", mode: str = "exact",
                  session: MeasurementSession | None = None) -> GVector:
    """Full (g0, g) for a three-parameter single-qubit slot."""
    prev = split_at(ansatz, d).slot.param
    if time_kind == "imaginary":
        carrier = eval_qset(ansatz, d, term, tau_step, mode, session)
    elif time_kind == "real":
        carrier = eval_axis_quadrature(ansatz, d, term, mode, session)
    else:
        raise ValueError(f"unknown time kind {time_kind!r}")
    h = term.coefficient
    g0 = assemble_g(0, prev, carrier, h, tau_step, time_kind)
    g = np.array([assemble_g(p, prev, carrier, h, tau_step, time_kind) for p in (1, 2, 3)])
    return GVector(g0, g)


def eval_g_fraxis(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                  time_kind: str = "imaginary", mode: str = "exact",
                  session: MeasurementSession | None = None) -> GVector:
    """Axis-only g for a pi-angle slot (g0 unused: cos(pi/2) = 0)."""
    prev = split_at(ansatz, d).slot.param
    x = term.coefficient * tau_step
    if time_kind == "imaginary":
        mat = eval_axis_response(ansatz, d, term, mode, session)
        g = math.cosh(x) * prev.axis - math.sinh(x) * (mat @ prev.axis)
    elif time_kind == "real":
        carrier = eval_axis_quadrature(ansatz, d, term, mode, session)
        g = np.array([assemble_g(p, prev, carrier, term.coefficient, tau_step, "real")
                      for p in (1, 2, 3)])
    else:
        raise ValueError(f"unknown time kind {time_kind!r}")
    return GVector(0.0, g)


def eval_g_nft(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
               time_kind: str = "imaginary", mode: str = "exact",
               session: MeasurementSession | None = None) -> tuple[float, float]:
    """(g0, gd) for a fixed-axis slot from three measurement configurations."""
    prev = split_at(ansatz, d).slot.param
    x = term.coefficient * tau_step
    c = math.cos(prev.theta / 2.0)
    s = math.sin(prev.theta / 2.0)
    if time_kind == "imaginary":
        q0, qp, qm = _nft_qs(ansatz, d, term, mode, session)
        half_diff = (qp - qm) / 2.0
        g0 = math.cosh(x) * c - math.sinh(x) * (c * q0 - s * half_diff)
        gd = math.cosh(x) * s - math.sinh(x) * (s * q0 + c * half_diff)
    elif time_kind == "real":
        carrier = eval_axis_quadrature(ansatz, d, term, mode, session)
        proj = float(np.dot(prev.axis, carrier))
        g0 = math.cos(x) * c - math.sin(x) * s * proj
        gd = math.cos(x) * s + math.sin(x) * c * proj
    else:
        raise ValueError(f"unknown time kind {time_kind!r}")
    return g0, gd


# ---------------------------------------------------------------------------
# two-qubit evaluators


def _pair_rotations(prev: GateParam):
    """2x2 products Sigma_u R^dag (left) and R Sigma_u (right) for u = x,y,z.

    Both are exact rotations: a*I - i v.sigma with a = +-sin(theta'/2)(u.n')
    and v = cos(theta'/2) u - sin(theta'/2) (u x n').
    """
    c = math.cos(prev.theta / 2.0)
    s = math.sin(prev.theta / 2.0)
    lefts, rights = [], []
    for p in range(3):
        u = np.zeros(3)
        u[p] = 1.0
        a = s * float(np.dot(u, prev.axis))
        v = c * u - s * np.cross(u, prev.axis)
        vs = v[0] * SIGMA[0] + v[1] * SIGMA[1] + v[2] * SIGMA[2]
        lefts.append(a * _I2 - 1j * vs)
        rights.append(-a * _I2 - 1j * vs)
    return lefts, rights


class _PairEvaluator:
    """Shared machinery for overlap words W2 . L . (R B R^dag) . P . W0."""

    def __init__(self, ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                 time_kind: str, mode: str,
                 stages=None, rot: np.ndarray | None = None):
        split = split_at(ansatz, d)
        _require_composite(split.slot)
        self.ansatz = ansatz
        self.split = split
        self.term = term
        self.time_kind = time_kind
        self.mode = mode
        self.qa, self.qb = split.slot.qubits
        if stages is None:
            stages = family_stage_ops(split.slot.kind.family, self.qa, self.qb)
        self.a_ops, self.b_ops, self.c_ops = stages
        self.rot = rotation_matrix(split.slot.param) if rot is None else rot
        self.rot_dag = self.rot.conj().T
        self.x = term.coefficient * tau_step
        if time_kind not in ("imaginary", "real"):
            raise ValueError(f"unknown time kind {time_kind!r}")
        if mode == "circuit" and time_kind == "real":
            raise ValueError("circuit mode covers the imaginary kind only")

        m = ansatz.qubit_count
        if mode == "exact":
            bra0 = _zero_amps(m)
            ansatz.packed.run(bra0)
            self.bra0 = bra0
            self.bra1 = _apply_bare(bra0, term)
        elif mode == "circuit":
            self.w0 = kernels.PackedOps(m)
            self.w0.append_from(ansatz.packed, 0, split.v1[1])
            append_ops(self.w0, self.c_ops)
            self.w1 = kernels.PackedOps(m)
            self.w1.add_1q(self.qb, self.rot_dag)
            append_ops(self.w1, self.b_ops)
            self.w1.add_1q(self.qb, self.rot)
            self.w2 = kernels.PackedOps(m)
            append_ops(self.w2, self.a_ops)
            self.w2.append_from(ansatz.packed, split.v2[0], split.v2[1])
            self.bare = Hamiltonian((PauliTerm(1.0, term.axes),))
        else:
            raise ValueError(f"unknown mode {mode!r}")

    def overlap(self, left_mat: np.ndarray, right_mat: np.ndarray) -> float:
        """cosh/cos-weighted combination of the plain and observable overlaps
        for the word with the given pre/post rotations on the slot's second
        qubit."""
        if self.mode == "circuit":
            from .state import simulate_hadamard_test

            za_o, za_i = simulate_hadamard_test(
                self.w0, self.w1, self.w2,
                (right_mat, self.qb), (left_mat, self.qb), self.bare,
            )
            return math.cosh(self.x) * za_i - math.sinh(self.x) * za_o

        m = self.ansatz.qubit_count
        amps = _zero_amps(m)
        self.ansatz.packed.run(amps, 0, self.split.v1[1])
        _apply_tuples(amps, m, self.c_ops)
        kernels.apply_1q(amps, self.qb, m, right_mat)
        kernels.apply_1q(amps, self.qb, m, self.rot_dag)
        _apply_tuples(amps, m, self.b_ops)
        kernels.apply_1q(amps, self.qb, m, self.rot)
        kernels.apply_1q(amps, self.qb, m, left_mat)
        _apply_tuples(amps, m, self.a_ops)
        self.ansatz.packed.run(amps, self.split.v2[0], self.split.v2[1])
        ip0 = np.vdot(self.bra0, amps)
        ip1 = np.vdot(self.bra1, amps)
        if self.time_kind == "imaginary":
            return math.cosh(self.x) * ip0.real - math.sinh(self.x) * ip1.real
        return math.cos(self.x) * ip0.real - math.sin(self.x) * ip1.imag


def eval_gmatrix(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                 mode: str = "exact", time_kind: str = "imaginary",
                 session: MeasurementSession | None = None) -> GMatrix:
    """Axis-response matrix for a two-parameter composite slot.

    G[p, q] is the propagator-weighted overlap of the circuit with sigma_q
    inserted between the A and B stages and sigma_p between B and C; both
    insertions are carried as exact rotations combined with the current
    gate.  For the excitation-conserving family G_yx = -G_xy, so that entry
    is filled in classically and only eight configurations are measured.
    """
    ev = _PairEvaluator(ansatz, d, term, tau_step, time_kind, mode)
    prev = ev.split.slot.param
    lefts, rights = _pair_rotations(prev)
    skip_yx = ev.split.slot.kind.family == "excitation"
    g = np.empty((3, 3))
    for p in range(3):
        for q in range(3):
            if skip_yx and (p, q) == (1, 0):
                continue
            _record(session, f"pair:{_AXIS_NAME[p]}{_AXIS_NAME[q]}")
            # sigma = i Sigma on both slots: the two factors of i contribute -1
            g[p, q] = -ev.overlap(lefts[q], rights[p])
    if skip_yx:
        g[1, 0] = -g[0, 1]
    return GMatrix(g, (g + g.T) / 2.0)


def eval_hvector(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                 mode: str = "exact", time_kind: str = "imaginary",
                 sub: str | None = None,
                 session: MeasurementSession | None = None) -> HVector:
    """Sinusoid coefficients for a one-parameter composite update.

    swap slots and decomposed excitation sub-updates (sub="psi"/"phi") use
    the four insertion words about the exposed rotation's fixed axis;
    hop/rbs slots, whose free parameter moves the axis in the xz plane, read
    the same four numbers from the z/x entries of the axis-response matrix.
    """
    split = split_at(ansatz, d)
    _require_composite(split.slot)
    family = split.slot.kind.family
    prev = split.slot.param

    if sub is not None:
        if family != "excitation":
            raise ContractViolation("sub-updates exist only for excitation slots")
        a_ops, b_ops, c_ops, axis, angle = gard_update_stages(
            prev, split.slot.qubits[0], split.slot.qubits[1], sub)
        rot = rotation_matrix(GateParam(angle, axis))
        ev = _PairEvaluator(ansatz, d, term, tau_step, time_kind, mode,
                            stages=(a_ops, b_ops, c_ops), rot=rot)
        return _h_from_words(ev, axis, session)

    if family == "swap":
        ev = _PairEvaluator(ansatz, d, term, tau_step, time_kind, mode)
        return _h_from_words(ev, np.array([0.0, 0.0, 1.0]), session)

    if family in ("hop", "rbs"):
        ev = _PairEvaluator(ansatz, d, term, tau_step, time_kind, mode)
        lefts, rights = _pair_rotations(prev)
        z, x = 2, 0
        vals = {}
        for p, q in ((z, z), (z, x), (x, z), (x, x)):
            _record(session, f"pair:{_AXIS_NAME[p]}{_AXIS_NAME[q]}")
            vals[(p, q)] = -ev.overlap(lefts[q], rights[p])
        return HVector(vals[(z, z)], vals[(z, x)], vals[(x, z)], vals[(x, x)])

    raise ContractViolation("excitation slots take the two-parameter update")


def _h_from_words(ev: _PairEvaluator, axis: np.ndarray,
                  session: MeasurementSession | None) -> HVector:
    """h components from the four left/right insertion words about `axis`."""
    sig = axis[0] * SIGMA[0] + axis[1] * SIGMA[1] + axis[2] * SIGMA[2]
    cap = -1j * sig
    plain_l, plain_r = ev.rot_dag, ev.rot
    ins_l, ins_r = cap @ ev.rot_dag, ev.rot @ cap
    _record(session, "blk:00")
    h0 = ev.overlap(plain_l, plain_r)
    _record(session, "blk:u0")
    h1 = ev.overlap(ins_l, plain_r)
    _record(session, "blk:0u")
    h2 = -ev.overlap(plain_l, ins_r)
    _record(session, "blk:uu")
    h3 = -ev.overlap(ins_l, ins_r)
    return HVector(h0, h1, h2, h3)


# ---------------------------------------------------------------------------
# closed-form solvers


FLAT_TOL = 1e-15


def solve_1q_3p(gv: GVector, fallback_axis=(0.0, 0.0, 1.0)) -> GateParam | None:
    """Global maximizer of g0 cos(theta/2) + (n.g) sin(theta/2).

    None signals a flat objective (caller keeps its parameter).  When only
    the axis part vanishes the angle is still determined and the axis is
    taken from fallback_axis.
    """
    gn = float(np.linalg.norm(gv.g))
    if gn < FLAT_TOL and abs(gv.g0) < FLAT_TOL:
        return None
    if gn < FLAT_TOL:
        axis = np.asarray(fallback_axis, dtype=np.float64)
        theta = solve_1q_1p(gv.g0, 0.0)
    else:
        axis = gv.g / gn
        theta = math.pi - 2.0 * math.atan2(gv.g0, gn)  # interior of [0, 2pi]
    return GateParam(theta, axis)


def solve_1q_2p(gv: GVector) -> np.ndarray | None:
    """Maximizing axis of n.g: the normalized g (None if flat)."""
    gn = float(np.linalg.norm(gv.g))
    if gn < FLAT_TOL:
        return None
    return gv.g / gn


def solve_1q_1p(g0: float, gd: float) -> float | None:
    """Maximizing angle of g0 cos(theta/2) + gd sin(theta/2) over [0, 2pi].

    The objective's half-angle period is 4pi, so the stationary point can
    land outside the admissible interval (only when gd < 0); a modular
    wrap there would flip the gate's sign and hand back the minimum.  The
    interior then holds only the minimum, so the maximum sits on a
    boundary: theta = 0 (value g0) or theta = 2pi (value -g0).
    """
    if abs(g0) < FLAT_TOL and abs(gd) < FLAT_TOL:
        return None
    theta = math.pi - 2.0 * math.atan2(g0, gd)
    if 0.0 <= theta <= 2.0 * math.pi:
        return theta
    return 0.0 if g0 >= 0.0 else 2.0 * math.pi


def _jacobi3(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric 3x3 by cyclic Jacobi rotations.

    Returns (eigenvalues, column eigenvectors); off-diagonal norm is driven
    below 1e-12 (at most 50 sweeps needed for any conditioned input).
    """
    a = np.array(s, dtype=np.float64, copy=True)
    v = np.eye(3)
    for _ in range(50):
        off = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off < 1e-12:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            if abs(a[p, q]) < 1e-18:
                continue
            phi = 0.5 * math.atan2(2.0 * a[p, q], a[q, q] - a[p, p])
            c, sn = math.cos(phi), math.sin(phi)
            for k in range(3):
                akp, akq = a[k, p], a[k, q]
                a[k, p] = c * akp - sn * akq
                a[k, q] = sn * akp + c * akq
            for k in range(3):
                apk, aqk = a[p, k], a[q, k]
                a[p, k] = c * apk - sn * aqk
                a[q, k] = sn * apk + c * aqk
            for k in range(3):
                vkp, vkq = v[k, p], v[k, q]
                v[k, p] = c * vkp - sn * vkq
                v[k, q] = sn * vkp + c * vkq
    return np.diag(a).copy(), v


def solve_2q_2p(gm: GMatrix) -> np.ndarray:
    """Top eigenvector of S, the exact maximizer of n^T S n over unit axes.

    Tie-break on a degenerate top eigenvalue: the candidate maximizing
    lexicographic (|n_x|, |n_y|, |n_z|); sign fixed so the first component
    of largest magnitude is positive.
    """
    vals, vecs = _jacobi3(gm.s)
    top = float(np.max(vals))
    candidates = [i for i in range(3) if vals[i] > top - 1e-10]
    best = max(candidates, key=lambda i: tuple(np.abs(vecs[:, i])))
    n = vecs[:, best].copy()
    n /= np.linalg.norm(n)
    lead = int(np.argmax(np.abs(n)))
    if n[lead] < 0:
        n = -n
    return n


def solve_2q_1p(hv: HVector) -> float | None:
    """Maximizing angle of the one-parameter composite sinusoid in [0, 2pi)."""
    dc = hv.h0 - hv.h3
    ds = hv.h1 + hv.h2
    if abs(dc) < FLAT_TOL and abs(ds) < FLAT_TOL:
        return None
    return wrap_angle(math.pi / 2.0 - math.atan2(dc, ds))


# ---------------------------------------------------------------------------
# objective values (used for the monotone-improvement guarantee)


def objective_1q(gv: GVector, theta: float, axis) -> float:
    return gv.g0 * math.cos(theta / 2.0) + float(np.dot(axis, gv.g)) * math.sin(theta / 2.0)


def objective_2q_2p(gm: GMatrix, axis) -> float:
    n = np.asarray(axis, dtype=np.float64)
    return float(n @ gm.s @ n)


def objective_2q_1p(hv: HVector, theta: float) -> float:
    return ((hv.h0 + hv.h3) / 2.0
            + ((hv.h0 - hv.h3) / 2.0) * math.cos(theta)
            + ((hv.h1 + hv.h2) / 2.0) * math.sin(theta))
