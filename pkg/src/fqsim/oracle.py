"""Dense-matrix references: exact evolution, ground states, metrics, grids.

Everything here goes through a full 2^m x 2^m matrix and is capped at
ORACLE_QUBIT_CAP qubits; it exists to check the circuit-level machinery,
not to scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .pauli import Hamiltonian, dense_matrix
from .state import Statevector


@dataclass(frozen=True)
class OracleResult:
    ground_energy: float
    ground_state: Statevector
    evolved_states: tuple[Statevector, ...] = ()
    ground_space: tuple[Statevector, ...] = ()


DEGENERACY_TOL = 1e-8


def ground(h: Hamiltonian) -> OracleResult:
    """Minimal eigenpair plus the full (possibly degenerate) ground space."""
    mat = dense_matrix(h)
    vals, vecs = np.linalg.eigh(mat)
    energy = float(vals[0])
    vec = np.ascontiguousarray(vecs[:, 0])
    residual = np.linalg.norm(mat @ vec - energy * vec)
    if residual > 1e-9:
        raise ContractViolation(f"eigenpair residual {residual:.3e} exceeds 1e-9")
    cutoff = energy + DEGENERACY_TOL * max(1.0, abs(energy))
    space = tuple(Statevector(np.ascontiguousarray(vecs[:, i]), h.qubit_count)
                  for i in range(len(vals)) if vals[i] <= cutoff)
    return OracleResult(energy, Statevector(vec, h.qubit_count), ground_space=space)


def ground_weight(result: OracleResult, state: Statevector) -> float:
    """Population of the ground manifold: sum of |<v_i|psi>|^2 over the
    degenerate multiplet.  Equals fidelity(ground_state, psi) when the
    ground level is unique; unlike it, converges to 1 under imaginary-time
    flow even when the minimum is degenerate."""
    space = result.ground_space or (result.ground_state,)
    return float(sum(fidelity(v, state) for v in space))


def exact_evolve(h: Hamiltonian, psi0: Statevector, times, kind: str = "imaginary"):
    """Exact evolved states at the given times (scalar or sequence).

    imaginary: normalized e^{-H tau} |psi0>; real: e^{-i H t} |psi0>.
    Returns a list of Statevector aligned with the times.
    """
    if kind not in ("imaginary", "real"):
        raise ValueError(f"unknown evolution kind {kind!r}")
    time_list = [float(times)] if np.isscalar(times) else [float(t) for t in times]
    mat = dense_matrix(h)
    vals, vecs = np.linalg.eigh(mat)
    coef0 = vecs.conj().T @ psi0.amplitudes
    out = []
    for t in time_list:
        if kind == "imaginary":
            # Spectrum shifted by the minimum eigenvalue: the normalized state
            # is unchanged and e^{-(E-E0) tau} cannot overflow for tau >= 0.
            weights = np.exp(-(vals - vals[0]) * t)
            amps = vecs @ (weights * coef0)
            norm = np.linalg.norm(amps)
            if norm < 1e-150:
                raise ContractViolation("evolved state has no numerical support")
            amps = amps / norm
        else:
            amps = vecs @ (np.exp(-1j * vals * t) * coef0)
        out.append(Statevector(amps, h.qubit_count))
    return out


def fidelity(a: Statevector, b: Statevector) -> float:
    """|<a|b>|^2 for normalized states."""
    for s in (a, b):
        if abs(s.norm() - 1.0) > 1e-8:
            raise ContractViolation(f"fidelity input has norm {s.norm()}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def energy(h: Hamiltonian, state: Statevector) -> float:
    """<state| H |state> via the dense matrix (reference path)."""
    mat = dense_matrix(h)
    v = state.amplitudes
    val = np.vdot(v, mat @ v)
    return float(val.real)


# --- brute-force grids (test support) ---------------------------------------


def angle_grid(points: int) -> np.ndarray:
    """Uniform grid over [0, 2pi) with the given number of points."""
    return np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)


def sphere_grid(n_polar: int, n_azim: int) -> np.ndarray:
    """(n_polar * n_azim, 3) unit vectors on a polar-azimuthal product grid."""
    polar = np.linspace(0.0, math.pi, n_polar)
    azim = np.linspace(0.0, 2.0 * math.pi, n_azim, endpoint=False)
    pp, aa = np.meshgrid(polar, azim, indexing="ij")
    sp = np.sin(pp)
    return np.stack([sp * np.cos(aa), sp * np.sin(aa), np.cos(pp)], axis=-1).reshape(-1, 3)


def fibonacci_sphere(n: int) -> np.ndarray:
    """(n, 3) near-uniform unit vectors from the golden-angle spiral."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def grid_argmax(values: np.ndarray) -> tuple[int, float]:
    """Index and value of the maximum over a precomputed value grid."""
    idx = int(np.argmax(values))
    return idx, float(values.flat[idx])
