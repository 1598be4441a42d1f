"""Command-line surface: config-driven ensemble runs and CSV emission.

Subcommands: `evolve --config`, `oracle --hamiltonian`, `compare <csv...>`,
`landscape --config --slot`.  Exit codes: 0 success, 1 usage/config error,
2 numerical-contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, core, driver, oracle
from .errors import ContractViolation, ResourceError
from .gates import Ansatz, build_preset
from .pauli import Hamiltonian, heisenberg_1d, parse_hamiltonian_text

CSV_HEADER = ["step", "tau", "energy", "fidelity_exact", "fidelity_ground"]

OUTPUT_DIR_ENV = "FQSIM_OUTPUT_DIR"


@dataclass
class ExperimentConfig:
    """One ensemble run: Hamiltonian, ansatz, optimizer, schedule, seeds."""

    hamiltonian: dict
    ansatz: dict
    optimizer: str
    dtau: float
    steps: int
    seeds: list[int]
    kind: str = "imaginary"
    sweeps_per_term: int = 1
    init: dict = field(default_factory=lambda: {"policy": "random_axis_fixed_angle_pi"})
    checkpoints: int = 1
    eval_mode: str = "exact"
    output_dir: str | None = None

    _KEYS = ("hamiltonian", "ansatz", "optimizer", "dtau", "steps", "seeds",
             "kind", "sweeps_per_term", "init", "checkpoints", "eval_mode",
             "output_dir")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls._KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("hamiltonian", "ansatz", "optimizer", "dtau", "steps", "seeds"):
            if key not in data:
                raise ValueError(f"config is missing required key {key!r}")
        cfg = cls(**data)
        if cfg.optimizer not in driver.OPTIMIZERS:
            raise ValueError(f"unknown optimizer {cfg.optimizer!r}")
        if cfg.steps < 0:
            raise ValueError("steps must be >= 0")
        if not cfg.seeds:
            raise ValueError("seeds list must be non-empty")
        if cfg.dtau <= 0:
            raise ValueError("dtau must be positive")
        return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data)


def parse_hamiltonian_file(path: str) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_hamiltonian_text(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def resolve_hamiltonian(source: dict | str) -> Hamiltonian:
    """Builtin spec ({"builtin": "heisenberg1d", ...}) or a terms file."""
    if isinstance(source, str):
        if source == "heisenberg1d":
            return heisenberg_1d()
        return parse_hamiltonian_file(source)
    if "file" in source:
        return parse_hamiltonian_file(source["file"])
    if source.get("builtin") != "heisenberg1d":
        raise ValueError(f"unknown builtin Hamiltonian {source.get('builtin')!r}")
    return heisenberg_1d(sites=source.get("sites", 5),
                         coupling=source.get("coupling", 1.0),
                         field_h=source.get("field", 1.0),
                         periodic=source.get("periodic", True))


def build_ansatz(spec: dict | str, qubit_count: int) -> Ansatz:
    if isinstance(spec, str):
        spec = {"preset": spec}
    name = spec.get("preset")
    if name is None:
        raise ValueError("ansatz spec needs a 'preset' name")
    return build_preset(name, qubits=qubit_count, layers=spec.get("layers", 2))


def _init_ansatz(ansatz: Ansatz, config: ExperimentConfig, seed: int):
    policy = config.init.get("policy", "random_axis_fixed_angle_pi")
    sigma = config.init.get("sigma", 0.05)
    if config.optimizer == "rzryrz-nft":
        driver.init_parameters_rzryrz(ansatz, policy, seed, sigma)
    else:
        driver.init_parameters(ansatz, policy, seed, sigma)


def _build_plan(h: Hamiltonian, config: ExperimentConfig) -> driver.TrotterPlan:
    if config.steps == 0:
        return driver.TrotterPlan((), 0, config.dtau, config.kind)
    return driver.trotterize(h, config.dtau * config.steps, config.steps, config.kind)


def _sweep_config(config: ExperimentConfig,
                  session: core.MeasurementSession | None = None) -> driver.SweepConfig:
    return driver.SweepConfig(optimizer=config.optimizer,
                              sweeps_per_term=config.sweeps_per_term,
                              time_kind=config.kind,
                              eval_mode=config.eval_mode,
                              session=session)


def _format(value) -> str:
    if value is None:
        return ""
    return format(float(value), ".12g")


def write_trajectory_csv(path: str, record: driver.TrajectoryRecord):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in record.rows:
            writer.writerow([row.step, _format(row.tau), _format(row.energy),
                             _format(row.fidelity_exact), _format(row.fidelity_ground)])


def _probe_measurement_counts(h: Hamiltonian, config: ExperimentConfig) -> dict[str, int]:
    """Count evaluation configurations per update type on a throwaway sweep."""
    if config.steps == 0 or not h.terms:
        return {}
    ansatz = build_ansatz(config.ansatz, h.qubit_count)
    _init_ansatz(ansatz, config, config.seeds[0])
    session = core.MeasurementSession()
    sweep = _sweep_config(config, session)
    driver.sweep_term(ansatz, h.terms[0], config.dtau, sweep)
    counts: dict[str, int] = {}
    for label, n in core.measurement_counter(session):
        if counts.setdefault(label, n) != n:
            # gard sub-updates share a label but agree; anything else is a bug
            raise ContractViolation(f"inconsistent configuration count for {label!r}")
    return counts


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every seed (concurrently), write per-seed CSVs and metadata.json."""
    h = resolve_hamiltonian(config.hamiltonian)
    out_dir = config.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    plan = _build_plan(h, config)
    counts = _probe_measurement_counts(h, config)

    probe = build_ansatz(config.ansatz, h.qubit_count)
    divisor = _sweep_config(config).resolved_divisor(probe)

    def one_seed(seed: int):
        ansatz = build_ansatz(config.ansatz, h.qubit_count)
        _init_ansatz(ansatz, config, seed)
        record = driver.evolve(h, ansatz, plan, _sweep_config(config),
                               config.checkpoints)
        path = os.path.join(out_dir, f"run_seed{seed}.csv")
        write_trajectory_csv(path, record)
        return path, record

    with ThreadPoolExecutor(max_workers=min(len(config.seeds), os.cpu_count() or 1)) as pool:
        results = list(pool.map(one_seed, config.seeds))

    metadata = {
        "version": __version__,
        "config": asdict(config),
        "seeds": list(config.seeds),
        "sigma": config.init.get("sigma", 0.05),
        "qubit_count": h.qubit_count,
        "trotter_terms": len(h.terms),
        "slot_count": probe.slot_count,
        "effective_step_divisor": divisor,
        "measurement_counts": counts,
        "files": [os.path.basename(p) for p, _ in results],
        "improvement_violations": {str(s): r.improvement_violations
                                   for s, (_, r) in zip(config.seeds, results)},
        "flat_events": {str(s): r.flat_events for s, (_, r) in zip(config.seeds, results)},
    }
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    metadata["metadata_path"] = meta_path
    return metadata


def _read_trajectory(path: str) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        cols = {name: [] for name in CSV_HEADER}
        for row in reader:
            for name, cell in zip(CSV_HEADER, row):
                cols[name].append(None if cell == "" else float(cell))
    return cols


QUANTILE_LABELS = ("min", "q25", "median", "q75", "max")


def compare_report(paths: list[str], out=sys.stdout):
    """Per-checkpoint five-number summary of energy/fidelities across runs."""
    if not paths:
        raise ValueError("compare needs at least one CSV")
    runs = [_read_trajectory(p) for p in paths]
    grid = [(s, t) for s, t in zip(runs[0]["step"], runs[0]["tau"])]
    for p, run in zip(paths[1:], runs[1:]):
        if [(s, t) for s, t in zip(run["step"], run["tau"])] != grid:
            raise ValueError(f"{p}: checkpoint grid differs from {paths[0]}")
    writer = csv.writer(out)
    writer.writerow(["step", "tau", "stat", "energy", "fidelity_exact",
                     "fidelity_ground"])
    for i, (step, tau) in enumerate(grid):
        stats = {}
        for col in ("energy", "fidelity_exact", "fidelity_ground"):
            vals = [run[col][i] for run in runs]
            if any(v is None for v in vals):
                stats[col] = [None] * 5
            else:
                stats[col] = np.percentile(vals, [0, 25, 50, 75, 100])
        for j, label in enumerate(QUANTILE_LABELS):
            writer.writerow([int(step), _format(tau), label,
                             _format(stats["energy"][j]),
                             _format(stats["fidelity_exact"][j]),
                             _format(stats["fidelity_ground"][j])])


def landscape_dump(config: ExperimentConfig, slot: int, points: int = 64,
                   out=sys.stdout):
    """Sample the slot's update objective for the first term's slice.

    One-parameter slots get a theta grid; excitation-conserving two-qubit
    slots get a Fibonacci axis grid (value = n^T S n).
    """
    h = resolve_hamiltonian(config.hamiltonian)
    ansatz = build_ansatz(config.ansatz, h.qubit_count)
    _init_ansatz(ansatz, config, config.seeds[0])
    if not 1 <= slot <= ansatz.slot_count:
        raise IndexError(f"slot {slot} out of range 1..{ansatz.slot_count}")
    if not h.terms:
        raise ValueError("Hamiltonian has no terms")
    term = h.terms[0]
    tau = config.dtau / _sweep_config(config).resolved_divisor(ansatz)
    kind_tag = ansatz.slots[slot - 1].kind.tag
    writer = csv.writer(out)
    if kind_tag == "composite" and ansatz.slots[slot - 1].kind.family == "excitation":
        gm = core.eval_gmatrix(ansatz, slot, term, tau, config.eval_mode, config.kind)
        writer.writerow(["nx", "ny", "nz", "value"])
        for axis in oracle.fibonacci_sphere(points):
            writer.writerow([_format(axis[0]), _format(axis[1]), _format(axis[2]),
                             _format(core.objective_2q_2p(gm, axis))])
    elif kind_tag == "composite":
        hv = core.eval_hvector(ansatz, slot, term, tau, config.eval_mode, config.kind)
        writer.writerow(["theta", "value"])
        for theta in oracle.angle_grid(points):
            writer.writerow([_format(theta), _format(core.objective_2q_1p(hv, theta))])
    else:
        gv = core.eval_g_vector(ansatz, slot, term, tau, config.kind, config.eval_mode)
        axis = ansatz.slots[slot - 1].param.axis
        writer.writerow(["theta", "value"])
        for theta in oracle.angle_grid(points):
            writer.writerow([_format(theta), _format(core.objective_1q(gv, theta, axis))])


def _cmd_evolve(args) -> int:
    config = load_config(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    metadata = run_experiment(config)
    print(f"wrote {len(metadata['files'])} trajectory file(s) and metadata.json "
          f"to {os.path.dirname(metadata['metadata_path']) or '.'}")
    return 0


def _cmd_oracle(args) -> int:
    if args.hamiltonian == "heisenberg1d":
        h = heisenberg_1d(sites=args.sites, coupling=args.coupling,
                          field_h=args.field, periodic=not args.open)
    else:
        h = parse_hamiltonian_file(args.hamiltonian)
    result = oracle.ground(h)
    print(f"qubits {h.qubit_count}")
    print(f"terms {len(h.terms)}")
    print(f"ground_energy {result.ground_energy:.12f}")
    return 0


def _cmd_compare(args) -> int:
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            compare_report(args.csvs, fh)
    else:
        compare_report(args.csvs)
    return 0


def _cmd_landscape(args) -> int:
    config = load_config(args.config)
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            landscape_dump(config, args.slot, args.points, fh)
    else:
        landscape_dump(config, args.slot, args.points)
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1 (2 is reserved for numerical violations)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="fqsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fqsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run a seeded ensemble from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("oracle", help="exact ground state of a Hamiltonian")
    p.add_argument("--hamiltonian", required=True,
                   help="'heisenberg1d' or a terms file")
    p.add_argument("--sites", type=int, default=5)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--field", type=float, default=1.0)
    p.add_argument("--open", action="store_true", help="open boundary")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("compare", help="quantile summary across trajectory CSVs")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("landscape", help="sample one slot's update objective")
    p.add_argument("--config", required=True)
    p.add_argument("--slot", type=int, required=True)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_landscape)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ContractViolation, ResourceError) as exc:
        print(f"fqsim: numerical contract violation: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, IndexError, TypeError, KeyError) as exc:
        print(f"fqsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
