"""Experiment harness: random transversal circuits, depth sweeps of
post-selected infidelity and sampling cost across gadget schedules, and
CSV/JSON emission.

Grid points are independent jobs run on a bounded worker pool; rows are
always emitted in grid order with seeds derived from (master seed, circuit
index), so identical configurations produce byte-identical output files
regardless of thread count.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .codes import StabilizerCode, build_code
from .density import (
    DensityMatrix,
    NoiseModel,
    apply_depolarizing,
    apply_unitary,
    depolarize_all,
    derived_seed,
)
from .exact import (
    CircuitSpec,
    GadgetSchedule,
    detection_map,
    initial_state,
    noisy_gadget_map,
    vqed_sampling_cost,
)
from .pauli import PauliString

GADGET_NOISE_MODES = ("off", "system_gadget", "ancilla_only")
DEFAULT_SCHEDULES = ("none", "last_gate", "every_20", "every_10", "every_gate")
PHYSICAL_LABEL = "physical"
THREADS_ENV_VAR = "VQED_THREADS"

CSV_COLUMNS = (
    "code",
    "L",
    "schedule",
    "circuit",
    "seed",
    "infidelity",
    "trace",
    "cost",
    "ratio",
    "variance",
    "shots",
)


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep; unused fields stay None."""

    code: str
    L: int
    schedule: str
    circuit: int
    seed: int
    infidelity: float | None = None
    trace: float | None = None
    cost: float | None = None
    ratio: float | None = None
    variance: float | None = None
    shots: int | None = None


@dataclass
class ExperimentConfig:
    """Settings for a sweep; mirrors the CLI flags and the JSON config file."""

    code: str = "code_412"
    depths: tuple[int, ...] | None = None
    p: float = 0.01
    gadget_noise: str = "off"
    gadget_noise_p: float | None = None
    schedules: tuple[str, ...] = DEFAULT_SCHEDULES
    circuits: int = 20
    mode: str = "exact"
    shots: int = 10000
    seed: int = 7
    variant: str = "single_control"
    out: str | None = None
    format: str = "csv"
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.gadget_noise not in GADGET_NOISE_MODES:
            raise ValueError(f"gadget_noise must be one of {GADGET_NOISE_MODES}")
        if self.mode not in ("exact", "shots"):
            raise ValueError(f"mode must be 'exact' or 'shots', got {self.mode!r}")
        if self.circuits < 1:
            raise ValueError("need at least one circuit per grid point")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.depths is not None:
            self.depths = tuple(int(x) for x in self.depths)
            if list(self.depths) != sorted(set(self.depths)):
                raise ValueError("depth grid must be strictly ascending")
            if self.depths[0] < 0:
                raise ValueError("depths must be non-negative")
        self.schedules = tuple(self.schedules)
        for s in self.schedules:
            GadgetSchedule.parse(s)  # raises on anything malformed

    def resolved_depths(self) -> tuple[int, ...]:
        if self.depths is not None:
            return self.depths
        top = 100 if self.code == "code_713" else 200
        return tuple(range(0, top + 1, 10))

    def noise_model(self) -> NoiseModel:
        pg = self.p if self.gadget_noise_p is None else self.gadget_noise_p
        return NoiseModel(
            gate_p=self.p,
            gadget_p=pg if self.gadget_noise == "system_gadget" else None,
            ancilla_p=pg if self.gadget_noise == "ancilla_only" else None,
        )

    @classmethod
    def from_json(cls, source: str | Path | dict) -> "ExperimentConfig":
        doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "depths" in doc and doc["depths"] is not None:
            doc = dict(doc, depths=tuple(doc["depths"]))
        if "schedules" in doc:
            doc = dict(doc, schedules=tuple(doc["schedules"]))
        return cls(**doc)


def generate_random_circuit(
    code: StabilizerCode,
    depth: int,
    seed: int,
    noise: NoiseModel | None = None,
    observable: PauliString | None = None,
) -> CircuitSpec:
    """Draw ``depth`` gates uniformly from the code's transversal set."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    picks = rng.integers(len(code.transversal), size=depth)
    gates = tuple(code.transversal[int(i)] for i in picks)
    return CircuitSpec(
        code=code,
        gates=gates,
        noise=noise if noise is not None else NoiseModel(),
        observable=observable if observable is not None else code.logical_z[0],
    )


# -- sweep internals -----------------------------------------------------------


def _projection_for(cfg: ExperimentConfig, code: StabilizerCode):
    """Projection map and per-gadget trace factor for the configured noise."""
    noise = cfg.noise_model()
    if cfg.gadget_noise == "system_gadget":
        return noisy_gadget_map(code, noise.gadget_p), 1.0
    factor = 1.0
    if cfg.gadget_noise == "ancilla_only":
        factor = (1.0 - noise.ancilla_p) ** code.n
    return detection_map(code), factor


def _encoded_job(
    cfg: ExperimentConfig,
    code: StabilizerCode,
    schedule_text: str,
    circuit: int,
    with_infidelity: bool,
) -> dict[int, SweepRow]:
    grid = cfg.resolved_depths()
    max_depth = grid[-1]
    circuit_seed = derived_seed(cfg.seed, circuit)
    spec = generate_random_circuit(code, max_depth, circuit_seed, noise=cfg.noise_model())
    schedule = GadgetSchedule.parse(schedule_text, cfg.variant)
    project, gadget_factor = _projection_for(cfg, code)

    ideal: dict[int, np.ndarray] = {}
    if with_infidelity:
        want = set(grid)
        v = code.logical_zero().copy()
        if 0 in want:
            ideal[0] = v.copy()
        for layer, gate in enumerate(spec.gates, start=1):
            v = code.transversal_unitary(gate) @ v
            if layer in want:
                ideal[layer] = v.copy()

    rows: dict[int, SweepRow] = {}

    def emit(depth: int, data: np.ndarray, gadget_count: int) -> None:
        raw_trace = float(np.trace(data).real)
        reported = raw_trace * gadget_factor**gadget_count
        if raw_trace < 1e-14:
            # post-selection annihilated the state: flag with empty cells
            rows[depth] = SweepRow(
                cfg.code, depth, schedule.label, circuit, circuit_seed, trace=reported
            )
            return
        infid = None
        if with_infidelity:
            psi = ideal[depth]
            overlap = float((psi.conj() @ data @ psi).real)
            infid = min(1.0, max(0.0, 1.0 - overlap / raw_trace))
        rows[depth] = SweepRow(
            code=cfg.code,
            L=depth,
            schedule=schedule.label,
            circuit=circuit,
            seed=circuit_seed,
            infidelity=infid,
            trace=reported,
            cost=vqed_sampling_cost(reported),
        )

    if schedule.mode == "last_gate":
        # The single end-of-circuit gadget is not prefix-consistent across
        # depths, so project a copy of the running state at each grid depth.
        state = initial_state(code)
        if 0 in grid:
            emit(0, project(state.data), 1)
        for layer, gate in enumerate(spec.gates, start=1):
            state = apply_unitary(state, code.transversal_unitary(gate))
            if cfg.p > 0.0:
                state = depolarize_all(state, cfg.p)
            if layer in grid:
                emit(layer, project(state.data), 1)
    else:
        points = set(schedule.points(max_depth))
        state = initial_state(code)
        count = 0
        if 0 in grid:
            emit(0, state.data, count)
        for layer, gate in enumerate(spec.gates, start=1):
            state = apply_unitary(state, code.transversal_unitary(gate))
            if cfg.p > 0.0:
                state = depolarize_all(state, cfg.p)
            if layer in points:
                state = DensityMatrix(project(state.data), normalized=False, copy=False)
                count += 1
            if layer in grid:
                emit(layer, state.data, count)
    return rows


def _physical_job(cfg: ExperimentConfig, code: StabilizerCode, circuit: int) -> dict[int, SweepRow]:
    """Unencoded one-qubit baseline driven by the same drawn gate sequence."""
    grid = cfg.resolved_depths()
    circuit_seed = derived_seed(cfg.seed, circuit)
    spec = generate_random_circuit(code, grid[-1], circuit_seed)
    rows: dict[int, SweepRow] = {}
    psi = np.array([1.0, 0.0], dtype=np.complex128)
    state = DensityMatrix.from_pure(psi)
    if 0 in grid:
        rows[0] = SweepRow(cfg.code, 0, PHYSICAL_LABEL, circuit, circuit_seed, 0.0, 1.0, 1.0)
    for layer, gate in enumerate(spec.gates, start=1):
        psi = gate.matrix @ psi
        state = apply_unitary(state, gate.matrix)
        if cfg.p > 0.0:
            state = apply_depolarizing(state, cfg.p, 0)
        if layer in grid:
            overlap = float((psi.conj() @ state.data @ psi).real)
            rows[layer] = SweepRow(
                code=cfg.code,
                L=layer,
                schedule=PHYSICAL_LABEL,
                circuit=circuit,
                seed=circuit_seed,
                infidelity=min(1.0, max(0.0, 1.0 - overlap)),
                trace=1.0,
                cost=1.0,
            )
    return rows


def _thread_count(cfg: ExperimentConfig) -> int:
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    env = os.environ.get(THREADS_ENV_VAR)
    return max(1, int(env)) if env else 1


def _run_sweep(cfg: ExperimentConfig, with_infidelity: bool) -> list[SweepRow]:
    if cfg.mode != "exact":
        raise ValueError("sweeps run in exact mode; use the estimate entry point for shots")
    code = build_code(cfg.code)
    schedules = list(cfg.schedules)
    jobs: list[tuple[str, int]] = [
        (sched, c) for sched in schedules for c in range(cfg.circuits)
    ]
    if with_infidelity:
        jobs += [(PHYSICAL_LABEL, c) for c in range(cfg.circuits)]

    def run(job: tuple[str, int]) -> tuple[tuple[str, int], dict[int, SweepRow]]:
        sched, c = job
        if sched == PHYSICAL_LABEL:
            return job, _physical_job(cfg, code, c)
        return job, _encoded_job(cfg, code, sched, c, with_infidelity)

    workers = _thread_count(cfg)
    if workers == 1:
        results = dict(run(job) for job in jobs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(run, jobs))

    column_order = schedules + ([PHYSICAL_LABEL] if with_infidelity else [])
    ordered: list[SweepRow] = []
    for depth in cfg.resolved_depths():
        for sched_text in column_order:
            for c in range(cfg.circuits):
                ordered.append(results[(sched_text, c)][depth])
    return ordered


def run_infidelity_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Post-selected infidelity versus depth, plus the unencoded baseline."""
    return _run_sweep(cfg, with_infidelity=True)


def run_cost_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Estimator denominator and its inverse square versus depth."""
    return _run_sweep(cfg, with_infidelity=False)


# -- output --------------------------------------------------------------------


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        rec = asdict(row)
        writer.writerow([_fmt_cell(rec[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([asdict(row) for row in rows], indent=2) + "\n"


def write_rows(rows: Sequence[SweepRow], path: str | Path | None, fmt: str = "csv") -> str:
    """Serialize rows; write to ``path`` when given.  Returns the text."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
