"""Evaluators and closed-form solvers against dense propagator oracles.

Independent route throughout: literal-matrix circuit walks plus
scipy.linalg.expm for the per-term propagator.  The package's cosh/sinh
(cos/sin) assemblies must reproduce those overlaps, and every solver must
beat a brute-force grid.
"""

import math

import numpy as np
import pytest
from fqsim import core
from fqsim.core import (
    CAP_SIGMA,
    GMatrix,
    GVector,
    HVector,
    MeasurementSession,
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
from fqsim.errors import ContractViolation
from fqsim.gates import (
    GateKind,
    GateParam,
    axis_from_angles,
    gard_install,
    gard_update_stages,
)
from fqsim.oracle import angle_grid, fibonacci_sphere

from conftest import (
    FAMILY_ABC,
    I2,
    X,
    Y,
    Z,
    dense_objective,
    dense_vec,
    mixed_1q,
    mixed_2q,
    pauli_string_matrix,
    propagator,
    rand_term,
    random_axis,
    rot2,
)

SIG = (X, Y, Z)


# ---------------------------------------------------------------------------
# analytic pieces


def test_first_term_matches_dense_overlap(rng):
    for _ in range(5):
        a, d = mixed_1q(rng, GateKind.general())
        prev = a.slots[d - 1].param
        psi = dense_vec(a)
        for mu in range(4):
            psi_mu = dense_vec(a, replace=(d, CAP_SIGMA[mu]))
            want = float(np.real(np.vdot(psi, psi_mu)))
            assert abs(first_term(mu, prev) - want) < 1e-12


def test_first_term_name_aliases(rng):
    prev = GateParam(1.3, random_axis(rng))
    for name, idx in (("0", 0), ("x", 1), ("y", 2), ("z", 3)):
        assert first_term(name, prev) == first_term(idx, prev)
    with pytest.raises(ValueError):
        first_term("w", prev)


def test_alpha_beta_reconstructs_product(rng):
    for _ in range(100):
        prev = GateParam(float(rng.uniform(0, 2 * np.pi)), random_axis(rng))
        for mu in range(4):
            ab = alpha_beta(mu, prev)
            assert abs(np.linalg.norm(ab.beta) - 1.0) < 1e-12
            lhs = rot2(ab.alpha, ab.beta)
            rhs = CAP_SIGMA[mu] @ rot2(prev.theta, prev.axis).conj().T
            assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_alpha_beta_degenerate_axes():
    # theta' = pi about a coordinate axis makes Sigma_mu R^dag = +-identity
    # for mu along that axis; the axis is then arbitrary and must fall back
    for p in range(3):
        axis = np.zeros(3)
        axis[p] = 1.0
        prev = GateParam(np.pi, axis)
        ab = alpha_beta(p + 1, prev)
        assert np.allclose(ab.beta, axis)
        lhs = rot2(ab.alpha, ab.beta)
        rhs = CAP_SIGMA[p + 1] @ rot2(prev.theta, prev.axis).conj().T
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_assemble_g_rejects_unknown_kind(rng):
    prev = GateParam(1.0, random_axis(rng))
    with pytest.raises(ValueError):
        assemble_g(0, prev, np.zeros(3), 1.0, 0.1, time_kind="thermal")


# ---------------------------------------------------------------------------
# single-qubit evaluators vs dense insertions


def test_qset_matches_dense_insertions(rng):
    for _ in range(5):
        a, d = mixed_1q(rng, GateKind.general())
        term = rand_term(rng, 3)
        prev = a.slots[d - 1].param
        qs = eval_qset(a, d, term, 0.1)
        p_mat = pauli_string_matrix(term.axes)
        r = rot2(prev.theta, prev.axis)

        def dense_expect(ins):
            phi = dense_vec(a, replace=(d, ins @ r))
            return float(np.real(np.vdot(phi, p_mat @ phi)))

        assert abs(qs.q_plus_0 - dense_expect(I2)) < 1e-12
        for p in range(3):
            e = np.zeros(3)
            e[p] = 1.0
            assert abs(qs.q_plus[p] - dense_expect(rot2(np.pi / 2, e))) < 1e-12
            assert abs(qs.q_minus[p] - dense_expect(rot2(-np.pi / 2, e))) < 1e-12


def test_qset_modes_agree(rng):
    a, d = mixed_1q(rng, GateKind.general())
    term = rand_term(rng, 3)
    qa = eval_qset(a, d, term, 0.1, mode="exact")
    qb = eval_qset(a, d, term, 0.1, mode="circuit")
    assert abs(qa.q_plus_0 - qb.q_plus_0) < 1e-12
    assert np.max(np.abs(qa.q_plus - qb.q_plus)) < 1e-12
    assert np.max(np.abs(qa.q_minus - qb.q_minus)) < 1e-12
    with pytest.raises(ValueError):
        eval_qset(a, d, term, 0.1, mode="sampled")


def test_axis_quadrature_modes_agree(rng):
    a, d = mixed_1q(rng, GateKind.general())
    term = rand_term(rng, 3)
    qa = eval_axis_quadrature(a, d, term, mode="exact")
    qb = eval_axis_quadrature(a, d, term, mode="circuit")
    assert np.max(np.abs(qa - qb)) < 1e-12


def test_axis_response_matches_dense_replacements(rng):
    a, d = mixed_1q(rng, GateKind.fraxis())
    term = rand_term(rng, 3)
    mat = eval_axis_response(a, d, term)
    assert np.max(np.abs(mat - mat.T)) < 1e-14
    p_mat = pauli_string_matrix(term.axes)
    for p in range(3):
        for q in range(3):
            # M_qp = Re<phi| s_q O' s_p |phi> via two replaced circuits
            left = dense_vec(a, replace=(d, SIG[q]))
            right = dense_vec(a, replace=(d, SIG[p]))
            want = float(np.real(np.vdot(left, p_mat @ right)))
            assert abs(mat[q, p] - want) < 1e-12
    mb = eval_axis_response(a, d, term, mode="circuit")
    assert np.max(np.abs(mat - mb)) < 1e-12


def test_single_qubit_evaluators_reject_composite(rng):
    a, d = mixed_2q(rng, "excitation")
    term = rand_term(rng, 4)
    for fn in (lambda: eval_qset(a, d, term, 0.1),
               lambda: eval_axis_quadrature(a, d, term),
               lambda: eval_axis_response(a, d, term),
               lambda: eval_g_nft(a, d, term, 0.1)):
        with pytest.raises(ContractViolation):
            fn()


# ---------------------------------------------------------------------------
# g vectors vs propagator overlaps


def test_g_vector_imaginary_matches_propagator_overlap(rng):
    for _ in range(10):
        a, d = mixed_1q(rng, GateKind.general())
        term = rand_term(rng, 3)
        tau = float(rng.uniform(0.05, 0.6))
        gv = eval_g_vector(a, d, term, tau)
        psi = dense_vec(a)
        prop = propagator(term, tau, "imaginary")
        for mu in range(4):
            psi_mu = dense_vec(a, replace=(d, CAP_SIGMA[mu]))
            want = float(np.real(np.vdot(psi, prop @ psi_mu)))
            got = gv.g0 if mu == 0 else gv.g[mu - 1]
            assert abs(got - want) < 1e-10


def test_g_vector_real_matches_propagator_overlap(rng):
    for _ in range(10):
        a, d = mixed_1q(rng, GateKind.general())
        term = rand_term(rng, 3)
        dt = float(rng.uniform(0.05, 0.6))
        gv = eval_g_vector(a, d, term, dt, time_kind="real")
        psi = dense_vec(a)
        prop = propagator(term, dt, "real")
        for mu in range(4):
            psi_mu = dense_vec(a, replace=(d, CAP_SIGMA[mu]))
            want = float(np.real(np.vdot(psi, prop @ psi_mu)))
            got = gv.g0 if mu == 0 else gv.g[mu - 1]
            assert abs(got - want) < 1e-10


def test_g_vector_predicts_full_landscape(rng):
    for kind in ("imaginary", "real"):
        a, d = mixed_1q(rng, GateKind.general())
        term = rand_term(rng, 3)
        tau = 0.3
        gv = eval_g_vector(a, d, term, tau, time_kind=kind)
        for _ in range(10):
            theta = float(rng.uniform(0, 2 * np.pi))
            axis = random_axis(rng)
            pred = objective_1q(gv, theta, axis)
            want = dense_objective(a, d, GateParam(theta, axis), term, tau, kind)
            assert abs(pred - want) < 1e-10


def test_g_fraxis_agrees_with_insertion_route_and_dense(rng):
    for _ in range(5):
        a, d = mixed_1q(rng, GateKind.fraxis())
        term = rand_term(rng, 3)
        tau = float(rng.uniform(0.05, 0.6))
        gf = eval_g_fraxis(a, d, term, tau)
        gv = eval_g_vector(a, d, term, tau)
        # replacement route and insertion route measure the same vector
        assert np.max(np.abs(gf.g - gv.g)) < 1e-12
        psi = dense_vec(a)
        prop = propagator(term, tau, "imaginary")
        for p in range(3):
            psi_p = dense_vec(a, replace=(d, CAP_SIGMA[p + 1]))
            want = float(np.real(np.vdot(psi, prop @ psi_p)))
            assert abs(gf.g[p] - want) < 1e-10


def test_g_fraxis_predicts_axis_landscape(rng):
    for kind in ("imaginary", "real"):
        a, d = mixed_1q(rng, GateKind.fraxis())
        term = rand_term(rng, 3)
        gf = eval_g_fraxis(a, d, term, 0.25, time_kind=kind)
        for _ in range(8):
            n = random_axis(rng)
            pred = float(np.dot(n, gf.g))
            want = dense_objective(a, d, GateParam(np.pi, n), term, 0.25, kind)
            assert abs(pred - want) < 1e-10


def test_g_nft_predicts_fixed_axis_sinusoid(rng):
    axis = random_axis(rng)
    for kind in ("imaginary", "real"):
        a, d = mixed_1q(rng, GateKind.fixed_axis(axis))
        term = rand_term(rng, 3)
        g0, gd = eval_g_nft(a, d, term, 0.35, time_kind=kind)
        for theta in angle_grid(16):
            pred = g0 * math.cos(theta / 2) + gd * math.sin(theta / 2)
            want = dense_objective(a, d, GateParam(float(theta), axis), term, 0.35, kind)
            assert abs(pred - want) < 1e-10


def test_g_nft_specializes_g_vector(rng):
    a, d = mixed_1q(rng, GateKind.fixed_axis((0.0, 1.0, 0.0)))
    term = rand_term(rng, 3)
    g0, gd = eval_g_nft(a, d, term, 0.2)
    gv = eval_g_vector(a, d, term, 0.2)
    assert abs(g0 - gv.g0) < 1e-12
    assert abs(gd - float(np.dot(a.slots[d - 1].param.axis, gv.g))) < 1e-12
    c0, cd = eval_g_nft(a, d, term, 0.2, mode="circuit")
    assert abs(g0 - c0) < 1e-12 and abs(gd - cd) < 1e-12


# ---------------------------------------------------------------------------
# two-qubit evaluators


def test_gmatrix_matches_dense_words(rng):
    for family, pair in (("excitation", (1, 2)), ("hop", (1, 2)),
                         ("excitation", (2, 0))):
        a, d = mixed_2q(rng, family, pair)
        term = rand_term(rng, 4)
        tau = float(rng.uniform(0.05, 0.5))
        gm = eval_gmatrix(a, d, term, tau)
        assert np.max(np.abs(gm.s - (gm.g + gm.g.T) / 2)) < 1e-14
        av, bv, cv = FAMILY_ABC[family]
        psi = dense_vec(a)
        prop = propagator(term, tau, "imaginary")
        for p in range(3):
            for q in range(3):
                word = av @ np.kron(I2, SIG[q]) @ bv @ np.kron(I2, SIG[p]) @ cv
                want = float(np.real(np.vdot(psi, prop @ dense_vec(a, replace=(d, word)))))
                assert abs(gm.g[p, q] - want) < 1e-10
        if family == "excitation":
            # the classically filled entry really is the measured negative
            assert abs(gm.g[1, 0] + gm.g[0, 1]) < 1e-10


def test_gmatrix_quadratic_landscape(rng):
    for family in ("excitation", "hop"):
        a, d = mixed_2q(rng, family)
        term = rand_term(rng, 4)
        gm = eval_gmatrix(a, d, term, 0.3)
        for _ in range(10):
            n = random_axis(rng)
            pred = objective_2q_2p(gm, n)
            want = dense_objective(a, d, GateParam(np.pi, n), term, 0.3, "imaginary")
            assert abs(pred - want) < 1e-10


def test_gmatrix_modes_agree(rng):
    for family in ("excitation", "hop"):
        a, d = mixed_2q(rng, family)
        term = rand_term(rng, 4)
        ga = eval_gmatrix(a, d, term, 0.2, mode="exact")
        gb = eval_gmatrix(a, d, term, 0.2, mode="circuit")
        assert np.max(np.abs(ga.g - gb.g)) < 1e-12
    with pytest.raises(ValueError):
        eval_gmatrix(a, d, term, 0.2, mode="circuit", time_kind="real")


def test_hvector_swap_sinusoid(rng):
    a, d = mixed_2q(rng, "swap")
    term = rand_term(rng, 4)
    hv = eval_hvector(a, d, term, 0.3)
    z = np.array([0.0, 0.0, 1.0])
    for theta in angle_grid(12):
        pred = objective_2q_1p(hv, float(theta))
        want = dense_objective(a, d, GateParam(float(theta), z), term, 0.3, "imaginary")
        assert abs(pred - want) < 1e-10
    hb = eval_hvector(a, d, term, 0.3, mode="circuit")
    for field in ("h0", "h1", "h2", "h3"):
        assert abs(getattr(hv, field) - getattr(hb, field)) < 1e-12


def test_hvector_hop_rbs_sinusoid(rng):
    for family in ("hop", "rbs"):
        a, d = mixed_2q(rng, family)
        term = rand_term(rng, 4)
        hv = eval_hvector(a, d, term, 0.25)
        for psi in angle_grid(12):
            pred = objective_2q_1p(hv, float(psi))
            param = GateParam(np.pi, axis_from_angles(float(psi), 0.0))
            want = dense_objective(a, d, param, term, 0.25, "imaginary")
            assert abs(pred - want) < 1e-10


def test_hvector_gard_subupdates(rng):
    a, d = mixed_2q(rng, "excitation")
    term = rand_term(rng, 4)
    prev = a.slots[d - 1].param
    for sub in ("psi", "phi"):
        hv = eval_hvector(a, d, term, 0.3, sub=sub)
        cur = gard_update_stages(prev, *a.slots[d - 1].qubits, sub)[4]
        # at the current exposed angle the word reduces to the unmodified gate
        want_cur = dense_objective(a, d, prev, term, 0.3, "imaginary")
        assert abs(objective_2q_1p(hv, cur) - want_cur) < 1e-10
        for theta in angle_grid(12):
            pred = objective_2q_1p(hv, float(theta))
            moved = gard_install(prev, sub, float(theta))
            want = dense_objective(a, d, moved, term, 0.3, "imaginary")
            assert abs(pred - want) < 1e-10


def test_hvector_structure_errors(rng):
    a, d = mixed_2q(rng, "swap")
    term = rand_term(rng, 4)
    with pytest.raises(ContractViolation):
        eval_hvector(a, d, term, 0.1, sub="psi")
    ae, de = mixed_2q(rng, "excitation")
    with pytest.raises(ContractViolation):
        eval_hvector(ae, de, term, 0.1)
    a1, d1 = mixed_1q(rng, GateKind.general())
    with pytest.raises(ContractViolation):
        eval_hvector(a1, d1, rand_term(rng, 3), 0.1)
    with pytest.raises(ContractViolation):
        eval_gmatrix(a1, d1, rand_term(rng, 3), 0.1)


# ---------------------------------------------------------------------------
# solvers vs grids


def test_solve_1q_3p_matches_grid(rng):
    thetas = angle_grid(80)
    axes = fibonacci_sphere(300)
    for _ in range(30):
        gv = GVector(float(rng.normal()), rng.normal(size=3))
        sol = solve_1q_3p(gv)
        best = objective_1q(gv, sol.theta, sol.axis)
        peak = math.hypot(gv.g0, float(np.linalg.norm(gv.g)))
        assert abs(best - peak) < 1e-12
        grid = np.max(np.cos(thetas / 2)[:, None] * gv.g0
                      + np.sin(thetas / 2)[:, None] * (axes @ gv.g)[None, :])
        assert best >= grid - 1e-10


def test_solve_1q_3p_flat_and_fallback():
    assert solve_1q_3p(GVector(0.0, np.zeros(3))) is None
    up = solve_1q_3p(GVector(0.7, np.zeros(3)), fallback_axis=(1.0, 0.0, 0.0))
    assert np.allclose(up.axis, [1.0, 0.0, 0.0])
    assert abs(objective_1q(GVector(0.7, np.zeros(3)), up.theta, up.axis) - 0.7) < 1e-12
    down = solve_1q_3p(GVector(-0.7, np.zeros(3)))
    assert abs(objective_1q(GVector(-0.7, np.zeros(3)), down.theta, down.axis) - 0.7) < 1e-12


def test_solve_1q_1p_interior_and_boundary(rng):
    grid = np.linspace(0.0, 2 * np.pi, 100001)
    for g0, gd in ((0.5, 0.8), (1.0, -0.3), (-1.0, -0.3), (-0.2, 0.9),
                   (0.0, -1.0), (1e-3, -1.0)):
        theta = solve_1q_1p(g0, gd)
        vals = g0 * np.cos(grid / 2) + gd * np.sin(grid / 2)
        got = g0 * math.cos(theta / 2) + gd * math.sin(theta / 2)
        assert got >= float(vals.max()) - 1e-9
        assert 0.0 <= theta <= 2 * np.pi
    # interior stationary point reaches the unconstrained peak
    for _ in range(50):
        g0, gd = float(rng.normal()), float(abs(rng.normal()) + 1e-6)
        theta = solve_1q_1p(g0, gd)
        got = g0 * math.cos(theta / 2) + gd * math.sin(theta / 2)
        assert abs(got - math.hypot(g0, gd)) < 1e-12
    assert solve_1q_1p(0.0, 0.0) is None


def test_solver_specializations_consistent(rng):
    for _ in range(50):
        gv = GVector(float(rng.normal()), rng.normal(size=3))
        sol = solve_1q_3p(gv)
        axis = solve_1q_2p(gv)
        theta = solve_1q_1p(gv.g0, float(np.linalg.norm(gv.g)))
        assert np.max(np.abs(sol.axis - axis)) < 1e-12
        assert abs(sol.theta - theta) < 1e-12
    assert solve_1q_2p(GVector(1.0, np.zeros(3))) is None


def test_solve_2q_2p_matches_eigh_and_grid(rng):
    axes = fibonacci_sphere(2000)
    for _ in range(30):
        s = rng.normal(size=(3, 3))
        s = (s + s.T) / 2
        gm = GMatrix(s, s)
        n = solve_2q_2p(gm)
        assert abs(np.linalg.norm(n) - 1.0) < 1e-12
        top = float(np.linalg.eigvalsh(s)[-1])
        assert abs(objective_2q_2p(gm, n) - top) < 1e-9
        grid = float(np.max(np.einsum("ip,pq,iq->i", axes, s, axes)))
        assert objective_2q_2p(gm, n) >= grid - 1e-9
        assert n[int(np.argmax(np.abs(n)))] > 0


def test_solve_2q_2p_degenerate_tie_break():
    eye = np.eye(3)
    assert np.allclose(solve_2q_2p(GMatrix(eye, eye)), [1.0, 0.0, 0.0])
    d = np.diag([3.0, 2.0, 1.0])
    assert np.allclose(solve_2q_2p(GMatrix(d, d)), [1.0, 0.0, 0.0])
    d = np.diag([1.0, 2.0, 3.0])
    assert np.allclose(solve_2q_2p(GMatrix(d, d)), [0.0, 0.0, 1.0])


def test_jacobi_matches_eigh(rng):
    for _ in range(50):
        s = rng.normal(size=(3, 3))
        s = (s + s.T) / 2
        vals, vecs = core._jacobi3(s)
        assert np.max(np.abs(np.sort(vals) - np.linalg.eigvalsh(s))) < 1e-10
        for i in range(3):
            assert np.linalg.norm(s @ vecs[:, i] - vals[i] * vecs[:, i]) < 1e-10


def test_solve_2q_1p_matches_grid(rng):
    grid = angle_grid(4096)
    for _ in range(30):
        hv = HVector(*(float(rng.normal()) for _ in range(4)))
        theta = solve_2q_1p(hv)
        assert 0.0 <= theta < 2 * np.pi
        mean = (hv.h0 + hv.h3) / 2
        amp = math.hypot((hv.h0 - hv.h3) / 2, (hv.h1 + hv.h2) / 2)
        assert abs(objective_2q_1p(hv, theta) - (mean + amp)) < 1e-12
        vals = (mean + ((hv.h0 - hv.h3) / 2) * np.cos(grid)
                + ((hv.h1 + hv.h2) / 2) * np.sin(grid))
        assert objective_2q_1p(hv, theta) >= float(np.max(vals)) - 1e-10
    assert solve_2q_1p(HVector(1.0, 0.0, 0.0, 1.0)) is None


# ---------------------------------------------------------------------------
# measurement bookkeeping


def test_measurement_counts_per_update(rng):
    session = MeasurementSession()
    term3, term4 = rand_term(rng, 3), rand_term(rng, 4)

    a, d = mixed_1q(rng, GateKind.general())
    session.begin_update("general")
    eval_g_vector(a, d, term3, 0.1, session=session)
    session.end_update()

    a, d = mixed_1q(rng, GateKind.fraxis())
    session.begin_update("fraxis")
    eval_g_fraxis(a, d, term3, 0.1, session=session)
    session.end_update()

    a, d = mixed_1q(rng, GateKind.fixed_axis((0.0, 0.0, 1.0)))
    session.begin_update("nft")
    eval_g_nft(a, d, term3, 0.1, session=session)
    session.end_update()

    a, d = mixed_2q(rng, "excitation")
    session.begin_update("pair-2p")
    eval_gmatrix(a, d, term4, 0.1, session=session)
    session.end_update()

    session.begin_update("pair-psi")
    eval_hvector(a, d, term4, 0.1, sub="psi", session=session)
    session.end_update()

    a, d = mixed_2q(rng, "swap")
    session.begin_update("swap")
    eval_hvector(a, d, term4, 0.1, session=session)
    session.end_update()

    a, d = mixed_2q(rng, "hop")
    session.begin_update("hop")
    eval_hvector(a, d, term4, 0.1, session=session)
    session.end_update()

    a, d = mixed_1q(rng, GateKind.general())
    session.begin_update("general-real")
    eval_g_vector(a, d, term3, 0.1, time_kind="real", session=session)
    session.end_update()

    assert measurement_counter(session) == [
        ("general", 7), ("fraxis", 6), ("nft", 3), ("pair-2p", 8),
        ("pair-psi", 4), ("swap", 4), ("hop", 4), ("general-real", 3),
    ]


def test_gmatrix_without_symmetry_shortcut_measures_nine(rng):
    a, d = mixed_2q(rng, "hop")
    session = MeasurementSession()
    session.begin_update("hop-2p")
    eval_gmatrix(a, d, rand_term(rng, 4), 0.1, session=session)
    session.end_update()
    assert measurement_counter(session) == [("hop-2p", 9)]


def test_measurement_session_misuse():
    session = MeasurementSession()
    with pytest.raises(ContractViolation):
        session.end_update()
    session.begin_update("a")
    with pytest.raises(ContractViolation):
        session.begin_update("b")
