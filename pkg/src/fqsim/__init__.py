"""Statevector simulation and closed-form gate optimization for
Trotterized imaginary- and real-time evolution."""

from .core import (
    AlphaBeta,
    GMatrix,
    GVector,
    HVector,
    MeasurementSession,
    QSet,
    alpha_beta,
    assemble_g,
    eval_axis_quadrature,
    eval_axis_response,
    eval_g_fraxis,
    eval_g_nft,
    eval_g_vector,
    eval_gmatrix,
    eval_hvector,
    eval_qset,
    first_term,
    generator,
    measurement_counter,
    objective_1q,
    objective_2q_1p,
    objective_2q_2p,
    solve_1q_1p,
    solve_1q_2p,
    solve_1q_3p,
    solve_2q_1p,
    solve_2q_2p,
)
from .driver import (
    SweepConfig,
    TrajectoryRecord,
    TrajectoryRow,
    TrotterPlan,
    evolve,
    init_parameters,
    init_parameters_rzryrz,
    sweep_term,
    trotterize,
)
from .errors import ContractViolation, ResourceError
from .gates import (
    Ansatz,
    GateKind,
    GateParam,
    Slot,
    SplitCircuit,
    angles_from_axis,
    axis_from_angles,
    build_preset,
    composite_matrix,
    make_param,
    preservation_check,
    rotation_matrix,
    split_at,
    wrap_angle,
    zyz_decompose,
)
from .oracle import OracleResult, exact_evolve, fidelity, ground
from .pauli import (
    Hamiltonian,
    PauliTerm,
    expectation,
    format_hamiltonian,
    hamiltonian_expectation,
    heisenberg_1d,
    parse_hamiltonian_text,
)
from .state import Statevector, inner_product, simulate_hadamard_test

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
