"""Trotterized evolution by coordinate-wise closed-form gate updates.

Each propagator term e^{-h O dt} is absorbed one fractional slice at a
time: every gate update re-optimizes its slot against e^{-h O dt/D}
referenced to the current circuit state, so a full sweep over the D
updates applies the whole term.  The same loop drives unitary (real-time)
slices with the hyperbolic weights replaced by trigonometric ones.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import core, oracle
from .errors import ContractViolation
from .gates import (
    Ansatz,
    GateKind,
    GateParam,
    axis_from_angles,
    gard_install,
    gard_update_stages,
    rotation_matrix,
    zyz_decompose,
)
from .pauli import ORACLE_QUBIT_CAP, Hamiltonian, PauliTerm, hamiltonian_expectation

logger = logging.getLogger("fqsim")

OPTIMIZERS = ("fqs-1q3p", "fraxis", "nft", "rzryrz-nft", "fqs-2q2p", "fqs-2q1p")

IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class TrotterPlan:
    """Full term schedule: K terms per step, N steps, in Hamiltonian order."""

    entries: tuple[tuple[PauliTerm, float], ...]
    steps: int
    step_size: float
    kind: str

    def __post_init__(self):
        if self.kind not in ("imaginary", "real"):
            raise ValueError(f"unknown evolution kind {self.kind!r}")
        if self.steps > 0 and not self.step_size > 0:
            raise ValueError("step size must be positive")

    @property
    def terms_per_step(self) -> int:
        return len(self.entries) // self.steps if self.steps else 0


def trotterize(h: Hamiltonian, total_time: float, steps: int,
               kind: str = "imaginary") -> TrotterPlan:
    """First-order product schedule: N repetitions of the K terms in order."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = total_time / steps
    entries = tuple((t, dt) for _ in range(steps) for t in h.terms)
    return TrotterPlan(entries, steps, dt, kind)


@dataclass
class SweepConfig:
    """How one propagator term is swept over the ansatz slots."""

    optimizer: str
    sweeps_per_term: int = 1
    update_order: str = "left_to_right"
    effective_step_divisor: int | None = None
    time_kind: str = "imaginary"
    eval_mode: str = "exact"
    session: core.MeasurementSession | None = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.sweeps_per_term < 1:
            raise ValueError("sweeps_per_term must be >= 1")
        if self.update_order != "left_to_right":
            raise ValueError("only left_to_right update order is supported")

    def updates_per_sweep(self, ansatz: Ansatz) -> int:
        """Parameterized-gate updates in one pass (decomposed slots count 2)."""
        n = 0
        for slot in ansatz.slots:
            if self.optimizer == "fqs-2q1p" and slot.kind.family == "excitation":
                n += 2
            else:
                n += 1
        return n

    def resolved_divisor(self, ansatz: Ansatz) -> int:
        """Fractional-propagator divisor: one slice per update, so a full
        term sweep (all updates x all sweeps) applies the whole step."""
        if self.effective_step_divisor is not None:
            return self.effective_step_divisor
        return self.updates_per_sweep(ansatz) * self.sweeps_per_term


@dataclass
class TrajectoryRow:
    step: int
    tau: float
    energy: float
    fidelity_exact: float | None
    fidelity_ground: float | None
    digest: str


@dataclass
class TrajectoryRecord:
    rows: list[TrajectoryRow] = field(default_factory=list)
    improvement_violations: int = 0
    flat_events: int = 0
    update_count: int = 0


def _params_digest(ansatz: Ansatz) -> str:
    buf = np.concatenate([[s.param.theta, *s.param.axis] for s in ansatz.slots]) \
        if ansatz.slots else np.zeros(0)
    return hashlib.sha256(np.asarray(buf, dtype=np.float64).tobytes()).hexdigest()[:16]


def _check_compatible(ansatz: Ansatz, optimizer: str):
    want = {
        "fqs-1q3p": ("general",),
        "fraxis": ("fraxis",),
        "nft": ("fixed_axis",),
        "rzryrz-nft": ("fixed_axis",),
        "fqs-2q2p": ("composite",),
        "fqs-2q1p": ("composite",),
    }[optimizer]
    for i, slot in enumerate(ansatz.slots):
        if slot.kind.tag not in want:
            raise ContractViolation(
                f"slot {i + 1} has kind {slot.kind.tag!r}, incompatible with {optimizer!r}")
        if optimizer == "fqs-2q2p" and slot.kind.family != "excitation":
            raise ContractViolation("fqs-2q2p updates excitation-conserving slots only")


def _hop_like_angle(axis) -> float:
    """Angle chart for xz-plane axes; n and -n give the same pi-angle gate."""
    a = np.asarray(axis, dtype=np.float64)
    if a[0] < 0:
        a = -a
    return 2.0 * math.atan2(a[0], a[2])


def _update_slot(ansatz: Ansatz, d: int, term: PauliTerm, tau_step: float,
                 config: SweepConfig, trace: list):
    """One closed-form update of slot d; appends (f_old, f_new) to trace."""
    slot = ansatz.slots[d - 1]
    prev = slot.param
    opt = config.optimizer
    ses = config.session
    kind = config.time_kind
    mode = config.eval_mode

    def begin():
        if ses is not None:
            ses.begin_update(opt)

    def end():
        if ses is not None:
            ses.end_update()

    if opt == "fqs-1q3p":
        begin()
        gv = core.eval_g_vector(ansatz, d, term, tau_step, kind, mode, ses)
        end()
        f_old = core.objective_1q(gv, prev.theta, prev.axis)
        sol = core.solve_1q_3p(gv, fallback_axis=prev.axis)
        if sol is None:
            trace.append((f_old, f_old, True))
            return
        ansatz.set_param(d - 1, sol)
        trace.append((f_old, core.objective_1q(gv, sol.theta, sol.axis), False))

    elif opt == "fraxis":
        begin()
        gv = core.eval_g_fraxis(ansatz, d, term, tau_step, kind, mode, ses)
        end()
        f_old = float(np.dot(prev.axis, gv.g))
        axis = core.solve_1q_2p(gv)
        if axis is None:
            trace.append((f_old, f_old, True))
            return
        ansatz.set_param(d - 1, GateParam(math.pi, axis))
        trace.append((f_old, float(np.dot(axis, gv.g)), False))

    elif opt in ("nft", "rzryrz-nft"):
        begin()
        g0, gd = core.eval_g_nft(ansatz, d, term, tau_step, kind, mode, ses)
        end()
        half = prev.theta / 2.0
        f_old = g0 * math.cos(half) + gd * math.sin(half)
        theta = core.solve_1q_1p(g0, gd)
        if theta is None:
            trace.append((f_old, f_old, True))
            return
        ansatz.set_param(d - 1, GateParam(theta, prev.axis))
        trace.append((f_old, g0 * math.cos(theta / 2) + gd * math.sin(theta / 2), False))

    elif opt == "fqs-2q2p":
        begin()
        gm = core.eval_gmatrix(ansatz, d, term, tau_step, mode, kind, ses)
        end()
        f_old = core.objective_2q_2p(gm, prev.axis)
        axis = core.solve_2q_2p(gm)
        ansatz.set_param(d - 1, GateParam(math.pi, axis))
        trace.append((f_old, core.objective_2q_2p(gm, axis), False))

    elif opt == "fqs-2q1p":
        family = slot.kind.family
        if family == "excitation":
            for sub in ("psi", "phi"):
                prev = ansatz.slots[d - 1].param
                begin()
                hv = core.eval_hvector(ansatz, d, term, tau_step, mode, kind, sub, ses)
                end()
                cur = gard_update_stages(prev, *slot.qubits, sub)[4]
                f_old = core.objective_2q_1p(hv, cur)
                theta = core.solve_2q_1p(hv)
                if theta is None:
                    trace.append((f_old, f_old, True))
                    continue
                ansatz.set_param(d - 1, gard_install(prev, sub, theta))
                trace.append((f_old, core.objective_2q_1p(hv, theta), False))
        else:
            begin()
            hv = core.eval_hvector(ansatz, d, term, tau_step, mode, kind, None, ses)
            end()
            cur = prev.theta if family == "swap" else _hop_like_angle(prev.axis)
            f_old = core.objective_2q_1p(hv, cur)
            theta = core.solve_2q_1p(hv)
            if theta is None:
                trace.append((f_old, f_old, True))
                return
            if family == "swap":
                ansatz.set_param(d - 1, GateParam(theta, np.array([0.0, 0.0, 1.0])))
            else:
                ansatz.set_param(d - 1, GateParam(math.pi, axis_from_angles(theta, 0.0)))
            trace.append((f_old, core.objective_2q_1p(hv, theta), False))

    else:  # pragma: no cover - guarded by SweepConfig validation
        raise ValueError(f"unknown optimizer {opt!r}")


def sweep_term(ansatz: Ansatz, term: PauliTerm, step: float,
               config: SweepConfig) -> list[tuple[float, float, bool]]:
    """Sweep every slot (sweeps_per_term times) against one term's slice.

    Returns the objective trace: (value at old parameter, value at new
    parameter, flat-objective flag) per update, evaluated on the same
    reference state the update saw.
    """
    _check_compatible(ansatz, config.optimizer)
    tau_step = step / config.resolved_divisor(ansatz)
    trace: list[tuple[float, float, bool]] = []
    for _ in range(config.sweeps_per_term):
        for d in range(1, ansatz.slot_count + 1):
            _update_slot(ansatz, d, term, tau_step, config, trace)
    return trace


def evolve(h: Hamiltonian, ansatz: Ansatz, plan: TrotterPlan, config: SweepConfig,
           checkpoints: int = 1) -> TrajectoryRecord:
    """Run the full plan, recording energy/fidelities every `checkpoints`
    steps (plus the initial state and the final step)."""
    if plan.kind != config.time_kind:
        raise ContractViolation("plan kind and sweep-config kind differ")
    if h.qubit_count != ansatz.qubit_count:
        raise ContractViolation("Hamiltonian and ansatz qubit counts differ")
    if checkpoints < 1:
        raise ValueError("checkpoint cadence must be >= 1")

    record = TrajectoryRecord()
    k = plan.terms_per_step

    track_fidelity = h.qubit_count <= ORACLE_QUBIT_CAP
    exact_states = ground_result = None
    if track_fidelity:
        psi0 = ansatz.state()
        checkpoint_steps = [0] + [s for s in range(1, plan.steps + 1)
                                  if s % checkpoints == 0 or s == plan.steps]
        times = [s * plan.step_size for s in checkpoint_steps]
        exact_states = dict(zip(checkpoint_steps,
                                oracle.exact_evolve(h, psi0, times, plan.kind)))
        ground_result = oracle.ground(h)
    else:
        logger.warning("qubit count %d exceeds the oracle cap; "
                       "fidelity columns omitted", h.qubit_count)

    def snapshot(step_index: int):
        state = ansatz.state()
        energy = hamiltonian_expectation(h, state)
        fid_e = fid_g = None
        if track_fidelity:
            fid_e = oracle.fidelity(state, exact_states[step_index])
            fid_g = oracle.ground_weight(ground_result, state)
            for f in (fid_e, fid_g):
                if not -1e-9 <= f <= 1 + 1e-9:
                    raise ContractViolation(f"fidelity {f} outside [0, 1]")
        record.rows.append(TrajectoryRow(
            step_index, step_index * plan.step_size, energy, fid_e, fid_g,
            _params_digest(ansatz)))

    snapshot(0)
    for s in range(1, plan.steps + 1):
        for term, dt in plan.entries[(s - 1) * k: s * k]:
            trace = sweep_term(ansatz, term, dt, config)
            record.update_count += len(trace)
            for f_old, f_new, flat in trace:
                if flat:
                    record.flat_events += 1
                if f_new < f_old - IMPROVEMENT_TOL:
                    record.improvement_violations += 1
                    logger.warning("objective decreased at step %d: %.3e -> %.3e",
                                   s, f_old, f_new)
        if s % checkpoints == 0 or s == plan.steps:
            snapshot(s)
    return record


# ---------------------------------------------------------------------------
# parameter initialization


def _random_axis(rng) -> np.ndarray:
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def _draw_param(kind, policy, sigma, rng, shared_angle) -> GateParam:
    tag = kind.tag
    if policy == "random_axis_fixed_angle_pi":
        if tag in ("general", "fraxis") or (tag == "composite" and kind.family == "excitation"):
            return GateParam(math.pi, _random_axis(rng))
        raise ValueError(f"policy {policy!r} cannot set a {tag}/{kind.family} slot")
    if policy == "random_angle_axis_y_perturbed":
        if tag != "general":
            raise ValueError(f"policy {policy!r} applies to general slots only")
        axis = np.array([0.0, 1.0, 0.0]) + sigma * rng.standard_normal(3)
        return GateParam(shared_angle, axis / np.linalg.norm(axis))
    if policy == "random_all":
        if tag == "general":
            return GateParam(rng.uniform(0.0, 2.0 * math.pi), _random_axis(rng))
        if tag == "fraxis":
            return GateParam(math.pi, _random_axis(rng))
        if tag == "fixed_axis":
            return GateParam(rng.uniform(0.0, 2.0 * math.pi), np.asarray(kind.axis))
        if kind.family == "excitation":
            return GateParam(math.pi, _random_axis(rng))
        if kind.family == "swap":
            return GateParam(rng.uniform(0.0, 2.0 * math.pi), np.array([0.0, 0.0, 1.0]))
        # hop/rbs: the free parameter is an angle in the xz plane
        return GateParam(math.pi, axis_from_angles(rng.uniform(0.0, 2.0 * math.pi), 0.0))
    raise ValueError(f"unknown policy {policy!r}")


def init_parameters(ansatz: Ansatz, policy, seed: int | None = None,
                    sigma: float = 0.05) -> Ansatz:
    """Install initial parameters drawn per `policy`, in slot order.

    policy: "random_axis_fixed_angle_pi" | "random_angle_axis_y_perturbed"
    (shared random angle drawn first, then per-slot perturbed-y axes) |
    "random_all" | ("fixed", [GateParam, ...]).  Deterministic per seed.
    """
    if isinstance(policy, tuple) and policy and policy[0] == "fixed":
        params = list(policy[1])
        if len(params) != ansatz.slot_count:
            raise ValueError(f"fixed policy got {len(params)} parameters "
                             f"for {ansatz.slot_count} slots")
        ansatz.set_params(params)
        return ansatz
    rng = np.random.default_rng(seed)
    shared_angle = None
    if policy == "random_angle_axis_y_perturbed":
        shared_angle = rng.uniform(0.0, 2.0 * math.pi)
    for i, slot in enumerate(ansatz.slots):
        ansatz.set_param(i, _draw_param(slot.kind, policy, sigma, rng, shared_angle))
    return ansatz


def init_parameters_rzryrz(ansatz: Ansatz, policy, seed: int | None = None,
                           sigma: float = 0.05) -> Ansatz:
    """Seed-matched initialization for an axis-decomposed ansatz.

    Draws the parameters a general-gate ansatz would receive under the same
    (policy, seed) — consuming the generator identically — and installs the
    z/y/z angle triple of each drawn rotation into the corresponding three
    fixed-axis slots (time order: lambda, psi, phi).
    """
    if ansatz.slot_count % 3:
        raise ContractViolation("decomposed ansatz must have slots in triples")
    rng = np.random.default_rng(seed)
    shared_angle = None
    if policy == "random_angle_axis_y_perturbed":
        shared_angle = rng.uniform(0.0, 2.0 * math.pi)
    general = GateKind.general()
    for j in range(ansatz.slot_count // 3):
        drawn = _draw_param(general, policy, sigma, rng, shared_angle)
        phi, psi, lam = zyz_decompose(rotation_matrix(drawn))
        for offset, angle in ((0, lam), (1, psi), (2, phi)):
            slot = ansatz.slots[3 * j + offset]
            ansatz.set_param(3 * j + offset, GateParam(angle, np.asarray(slot.kind.axis)))
    return ansatz
