#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Every dispatched kernel runs on identical inputs through both paths; the
results must agree to near machine precision before any timing is
reported.  Timings are medians over --repeats calls, taken after a
warmup call that also absorbs JIT compilation.  The module-level
FQSIM_NO_NUMBA switch is bypassed here on purpose: this script's whole
point is to exercise both paths in one process.

    python3 benchmarks/bench_kernels.py [--qubits 8 10 12] [--repeats 9]
"""

import argparse
import statistics
import time

import numpy as np

from fqsim import driver, kernels
from fqsim.gates import build_preset
from fqsim.pauli import heisenberg_1d


def timed(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def random_state(rng, m):
    v = rng.standard_normal(1 << m) + 1j * rng.standard_normal(1 << m)
    return (v / np.linalg.norm(v)).astype(np.complex128)


def random_unitary(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d)).conj()


def layered_circuit(rng, m, layers=4):
    """Packed circuit touching every op kind the dispatcher knows."""
    ops = kernels.PackedOps(m)
    for _ in range(layers):
        for q in range(m):
            ops.add_1q(q, random_unitary(rng, 2))
        for q in range(0, m - 1, 2):
            ops.add_cx(q, q + 1)
        for q in range(1, m - 1, 2):
            ops.add_cz(q, q + 1)
        ops.add_2q(0, m - 1, random_unitary(rng, 4))
        ops.add_c1q(m - 1, 0, random_unitary(rng, 2))
    return ops


def both_paths(run, repeats):
    """(numba_time, numpy_time, max_difference) for a state-producing call."""
    results = {}
    times = {}
    for label, flag in (("numba", True), ("numpy", False)):
        if flag and not kernels.HAS_NUMBA:
            continue
        kernels.USE_NUMBA = flag
        results[label] = run()  # warmup + correctness sample (JIT on first numba call)
        times[label] = timed(run, repeats)
    if "numba" not in results:
        return None, times["numpy"], 0.0
    diff = float(np.max(np.abs(np.asarray(results["numba"]) - np.asarray(results["numpy"]))))
    return times["numba"], times["numpy"], diff


def report(name, m, t_nb, t_np, diff):
    if t_nb is None:
        print(f"{name:>14}  m={m:<3d} numpy {t_np * 1e3:8.3f} ms   (numba unavailable)")
        return
    print(f"{name:>14}  m={m:<3d} numba {t_nb * 1e3:8.3f} ms   numpy {t_np * 1e3:8.3f} ms"
          f"   speedup {t_np / t_nb:6.2f}x   max|diff| {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, nargs="+", default=[8, 10, 12])
    parser.add_argument("--repeats", type=int, default=9)
    args = parser.parse_args()

    rng = np.random.default_rng(2024)
    saved = kernels.USE_NUMBA
    try:
        for m in args.qubits:
            psi0 = random_state(rng, m)
            circuit = layered_circuit(rng, m)
            report("run_ops", m,
                   *both_paths(lambda: circuit.run(psi0.copy()), args.repeats))

            xm, zm, ym, ph = kernels.pauli_masks("XZ" * (m // 2) + "Y" * (m % 2))
            report("pauli_expect", m,
                   *both_paths(lambda: kernels.pauli_expect(psi0, xm, zm, ym, ph),
                               args.repeats))

            out = np.empty_like(psi0)
            report("apply_pauli", m,
                   *both_paths(lambda: kernels.apply_pauli(psi0, out, xm, zm, ym, ph)
                               or out.copy(), args.repeats))

        # one driver-level sweep: a full coordinate pass of one Trotter slice
        m = max(args.qubits)
        h = heisenberg_1d(m, periodic=False)
        config = driver.SweepConfig(optimizer="fqs-1q3p")

        def macro():
            a = build_preset("fig3-general", qubits=m, layers=2)
            driver.init_parameters(a, "random_axis_fixed_angle_pi", seed=0)
            driver.sweep_term(a, h.terms[0], 0.5, config)
            return a.state().amplitudes.copy()

        report("sweep_term", m, *both_paths(macro, max(3, args.repeats // 3)))
    finally:
        kernels.USE_NUMBA = saved


if __name__ == "__main__":
    main()
