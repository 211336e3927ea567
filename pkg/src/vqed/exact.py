"""Exact superoperator-level protocol implementations.

Detection-protected evolution inserts the code-space projection map
rho -> P rho P after scheduled noisy layers and tracks the surviving trace.
The virtual-detection estimator never materialises the joint ancilla
register: averaging the sampled gadget uniformly over stabilizer indices
collapses it to a linear map on the system alone, which for the
two-control gadget is P rho P directly and for the single-control gadget is
the symmetrized product of the stabilizer twirl with the projector.  Both
averages agree with P rho P, which is what the cross-checks assert.

Virtual error correction is the syndrome-summed recovery channel
sum_s P R_s rho R_s P, optionally restricted to a subset of syndromes and
renormalized by the captured probability weight.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .codes import RecoveryTable, StabilizerCode, TransversalGate
from .density import (
    TRACE_FLOOR,
    DensityMatrix,
    NoiseModel,
    apply_unitary,
    depolarize_all,
)
from .pauli import PauliString

GADGET_VARIANTS = ("two_controls", "single_control")
SCHEDULE_MODES = ("none", "last_gate", "every_gate", "every_m")


@dataclass(frozen=True)
class GadgetSchedule:
    """Where projection gadgets fire along an L-layer circuit.

    ``every_m`` fires after layers m, 2m, ...; ``last_gate`` fires once at
    the very end of the circuit (on the initial state when L = 0).
    """

    mode: str = "none"
    m: int = 1
    variant: str = "single_control"

    def __post_init__(self) -> None:
        if self.mode not in SCHEDULE_MODES:
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.variant not in GADGET_VARIANTS:
            raise ValueError(f"unknown gadget variant {self.variant!r}")
        if self.m < 1:
            raise ValueError(f"schedule period m={self.m} must be >= 1")

    @classmethod
    def parse(cls, text: str, variant: str = "single_control") -> "GadgetSchedule":
        """Parse "none", "last_gate", "every_gate" or "every_<m>"."""
        t = text.strip().lower()
        if t in ("none", "last_gate", "every_gate"):
            return cls(mode=t, variant=variant)
        if t.startswith("every_"):
            return cls(mode="every_m", m=int(t[len("every_"):]), variant=variant)
        raise ValueError(f"cannot parse schedule {text!r}")

    @property
    def label(self) -> str:
        return f"every_{self.m}" if self.mode == "every_m" else self.mode

    def points(self, depth: int) -> tuple[int, ...]:
        """Layer indices after which a gadget fires; 0 means the initial state."""
        if self.mode == "none":
            return ()
        if self.mode == "last_gate":
            return (depth,)
        if self.mode == "every_gate":
            return tuple(range(1, depth + 1))
        return tuple(l for l in range(1, depth + 1) if l % self.m == 0)


@dataclass(frozen=True)
class CircuitSpec:
    """A logical circuit: code, transversal gate layers, noise, observable."""

    code: StabilizerCode
    gates: tuple[TransversalGate, ...]
    noise: NoiseModel
    observable: PauliString

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.observable.n != self.code.n:
            raise ValueError("observable acts on the wrong number of qubits")
        for g in self.code.generators:
            if not self.observable.commutes(g):
                raise ValueError(
                    f"observable {self.observable} does not commute with generator {g}"
                )
        set_labels = {g.label for g in self.code.transversal}
        proj = self.code.projector()
        for gate in {g.label: g for g in self.gates}.values():
            if gate.label in set_labels:
                continue  # already verified when the code was built
            u = self.code.transversal_unitary(gate)
            if not np.allclose(u @ proj @ u.conj().T, proj, atol=1e-12):
                raise ValueError(f"gate {gate.label} does not preserve the code space")

    @property
    def depth(self) -> int:
        return len(self.gates)


class VqedValue(NamedTuple):
    numerator: float
    denominator: float
    ratio: float


def initial_state(code: StabilizerCode) -> DensityMatrix:
    """The logical zero state as a density matrix."""
    return DensityMatrix.from_pure(code.logical_zero())


def ideal_statevector(spec: CircuitSpec, depth: int | None = None) -> np.ndarray:
    """Noiseless evolution of the logical zero through the first ``depth`` layers."""
    v = spec.code.logical_zero().copy()
    upto = spec.depth if depth is None else depth
    for gate in spec.gates[:upto]:
        v = spec.code.transversal_unitary(gate) @ v
    return v


# -- projection / gadget maps on raw arrays ---------------------------------


def detection_map(code: StabilizerCode) -> Callable[[np.ndarray], np.ndarray]:
    """The post-selection map rho -> P rho P."""
    proj = code.projector()
    return lambda data: proj @ data @ proj


def stabilizer_twirl(code: StabilizerCode, data: np.ndarray) -> np.ndarray:
    """Uniform average of S rho S over the full stabilizer group."""
    acc = np.zeros_like(data)
    for el in code.group():
        acc += el.sandwich(data)
    return acc / len(code.group())


def averaged_gadget_map(
    code: StabilizerCode, variant: str
) -> Callable[[np.ndarray], np.ndarray]:
    """The index-averaged action of one projection gadget.

    two_controls: each side of the circuit averages independently to P, so
    the map is built from the averaged operator directly.  single_control
    repeats the sampled stabilizer on both sides of the state, which averages
    to the stabilizer twirl symmetrized against the projector.
    """
    proj = code.projector()
    if variant == "two_controls":
        return lambda data: proj @ data @ proj
    if variant == "single_control":

        def gmap(data: np.ndarray) -> np.ndarray:
            tw = stabilizer_twirl(code, data)
            return 0.5 * (tw @ proj + proj @ tw)

        return gmap
    raise ValueError(f"unknown gadget variant {variant!r}")


def gadget_channel_average(
    variant: str, rho: DensityMatrix, code: StabilizerCode
) -> DensityMatrix:
    """Apply the exact index-averaged gadget of either circuit variant.

    Both variants average to rho -> P rho P; the output is generally
    sub-normalized and flagged as such.
    """
    out = averaged_gadget_map(code, variant)(rho.data)
    return DensityMatrix(out, normalized=False, copy=False)


def noisy_gadget_map(
    code: StabilizerCode, gadget_p: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Index-averaged single-control gadget with depolarizing on its gates.

    Per-qubit depolarizing follows the stabilizer gate on all n system
    qubits, and the controlled gate on all n + 1 qubits.  Tracing the ancilla
    through the X-expectation turns its depolarizing into a flat (1 - p)
    factor, and the system factors act directly on the averaged map.
    """
    proj = code.projector()
    n = code.n

    def gmap(data: np.ndarray) -> np.ndarray:
        tw = stabilizer_twirl(code, data)
        tw = depolarize_all(DensityMatrix(tw, normalized=False, copy=False), gadget_p).data
        tw = 0.5 * (tw @ proj + proj @ tw)
        tw = depolarize_all(DensityMatrix(tw, normalized=False, copy=False), gadget_p).data
        return (1.0 - gadget_p) * tw

    return gmap


# -- circuit evolution -------------------------------------------------------


def _evolve(
    spec: CircuitSpec,
    points: Sequence[int],
    project: Callable[[np.ndarray], np.ndarray] | None,
) -> DensityMatrix:
    fire = set(points)
    rho = initial_state(spec.code)
    if project is not None and 0 in fire:
        rho = DensityMatrix(project(rho.data), normalized=False, copy=False)
    for layer, gate in enumerate(spec.gates, start=1):
        rho = apply_unitary(rho, spec.code.transversal_unitary(gate))
        if spec.noise.gate_p > 0.0:
            rho = depolarize_all(rho, spec.noise.gate_p)
        if project is not None and layer in fire:
            rho = DensityMatrix(project(rho.data), normalized=False, copy=False)
    return rho


def evolve_unprotected(spec: CircuitSpec) -> DensityMatrix:
    """Plain noisy evolution: each layer is the gate followed by local noise."""
    return _evolve(spec, (), None)


def evolve_qed(spec: CircuitSpec, schedule: GadgetSchedule) -> tuple[DensityMatrix, float]:
    """Detection-protected evolution.

    Applies rho -> P rho P at every scheduled point and returns the
    unnormalized survivor together with its trace; the post-selected state is
    the survivor divided by that trace.
    """
    rho = _evolve(spec, schedule.points(spec.depth), detection_map(spec.code))
    tr = rho.trace()
    if schedule.mode != "none" and tr < TRACE_FLOOR:
        raise ValueError(f"post-selection annihilated the state (trace {tr})")
    return rho, tr


def vqed_exact(spec: CircuitSpec, schedule: GadgetSchedule) -> VqedValue:
    """Exact value of the virtual-detection ratio estimator.

    Every scheduled gadget is replaced by its exact index average, then the
    numerator and denominator are read off the final operator.
    """
    gmap = averaged_gadget_map(spec.code, schedule.variant)
    rho = _evolve(spec, schedule.points(spec.depth), gmap)
    return _ratio_from_final(rho, spec)


def vqed_exact_noisy_gadget(spec: CircuitSpec, schedule: GadgetSchedule) -> VqedValue:
    """Virtual-detection ratio when the gadget hardware itself is noisy.

    With system-level gadget noise the per-gadget averaged map picks up
    depolarizing layers (single-control variant only).  With ancilla-only
    noise the numerator and denominator are each multiplied by
    (1 - p)**(n * gadgets) exactly, so the ratio is unchanged.
    """
    noise = spec.noise
    if noise.gadget_p is None and noise.ancilla_p is None:
        raise ValueError("spec.noise configures neither gadget_p nor ancilla_p")
    if schedule.variant != "single_control":
        raise ValueError("noisy gadgets are modelled for the single_control variant")
    if noise.gadget_p is not None:
        gmap = noisy_gadget_map(spec.code, noise.gadget_p)
    else:
        gmap = averaged_gadget_map(spec.code, schedule.variant)
    points = schedule.points(spec.depth)
    rho = _evolve(spec, points, gmap)
    factor = 1.0
    if noise.ancilla_p is not None:
        factor = (1.0 - noise.ancilla_p) ** (spec.code.n * len(points))
    return _ratio_from_final(rho, spec, scale=factor)


def _ratio_from_final(rho: DensityMatrix, spec: CircuitSpec, scale: float = 1.0) -> VqedValue:
    obs = spec.observable.to_dense()
    numerator = float(np.einsum("ij,ji->", rho.data, obs).real) * scale
    denominator = rho.trace() * scale
    if denominator < TRACE_FLOOR:
        raise ValueError(f"denominator {denominator} below {TRACE_FLOOR}")
    return VqedValue(numerator, denominator, numerator / denominator)


# -- virtual error correction -------------------------------------------------


@dataclass(frozen=True)
class VirtualQecConfig:
    """Which syndromes participate in the virtual recovery sum."""

    syndromes: tuple[tuple[int, ...], ...]
    table: RecoveryTable

    def __post_init__(self) -> None:
        if not self.syndromes:
            raise ValueError("syndrome subset must be nonempty")
        seen = set()
        for s in self.syndromes:
            if any(v not in (-1, 1) for v in s):
                raise ValueError(f"syndrome {s} has entries outside {{-1, +1}}")
            if s in seen:
                raise ValueError(f"duplicate syndrome {s}")
            seen.add(s)
            self.table.recovery(s)  # raises if missing

    @classmethod
    def full(cls, code: StabilizerCode) -> "VirtualQecConfig":
        table = code.recovery_table()
        syndromes = tuple(sorted(table.entries))
        return cls(syndromes=syndromes, table=table)

    @classmethod
    def up_to_weight(cls, code: StabilizerCode, max_weight: int) -> "VirtualQecConfig":
        """Syndromes reachable by errors of weight at most ``max_weight``."""
        table = code.recovery_table()
        keep = set()
        for weight in range(max_weight + 1):
            for positions in itertools.combinations(range(code.n), weight):
                for letters in itertools.product("XYZ", repeat=weight):
                    x = z = 0
                    for q, ch in zip(positions, letters):
                        xb, zb = (1, 0) if ch == "X" else (1, 1) if ch == "Y" else (0, 1)
                        x |= xb << q
                        z |= zb << q
                    keep.add(code.syndrome(PauliString(code.n, x, z)))
        return cls(syndromes=tuple(sorted(keep)), table=table)

    def is_full(self, code: StabilizerCode) -> bool:
        return len(self.syndromes) == 1 << (code.n - code.k)


def apply_virtual_qec(
    rho: DensityMatrix, code: StabilizerCode, cfg: VirtualQecConfig
) -> DensityMatrix:
    """Recovery channel sum_s P R_s rho R_s P over the configured syndromes.

    The full sum is trace preserving and equals the measure-and-recover
    channel; a proper subset is renormalized by the captured probability
    sum_s tr[P R_s rho R_s].
    """
    proj = code.projector()
    acc = np.zeros_like(rho.data)
    for s in cfg.syndromes:
        r = cfg.table.recovery(s)
        acc += proj @ r.sandwich(rho.data) @ proj
    if cfg.is_full(code):
        return DensityMatrix(acc, normalized=rho.normalized, copy=False)
    weight = float(np.trace(acc).real)
    if weight < TRACE_FLOOR:
        raise ValueError(f"captured syndrome probability {weight} vanishes")
    return DensityMatrix(acc / weight, normalized=True, copy=False)


def virtual_qec_exact(
    spec: CircuitSpec, cfg: VirtualQecConfig, apply_point: str = "end"
) -> DensityMatrix:
    """Noisy evolution followed by virtual recovery.

    ``apply_point="end"`` corrects once after the last layer; ``"each_gate"``
    corrects after every noisy layer.
    """
    if apply_point == "end":
        return apply_virtual_qec(evolve_unprotected(spec), spec.code, cfg)
    if apply_point == "each_gate":
        rho = initial_state(spec.code)
        for gate in spec.gates:
            rho = apply_unitary(rho, spec.code.transversal_unitary(gate))
            if spec.noise.gate_p > 0.0:
                rho = depolarize_all(rho, spec.noise.gate_p)
            rho = apply_virtual_qec(rho, spec.code, cfg)
        return rho
    raise ValueError(f"unknown apply_point {apply_point!r}")


# -- sampling-cost formulas ----------------------------------------------------


def vqed_sampling_cost(denominator: float) -> float:
    """Multiplicative shot overhead of the ratio estimator: denominator**-2."""
    if denominator <= 0.0:
        raise ValueError(f"denominator must be positive, got {denominator}")
    return denominator**-2


def virtual_qec_full_cost(code: StabilizerCode, trace: float = 1.0) -> float:
    """Cost of the full syndrome sum: 2**(2(n-k)) times trace**-2."""
    if trace <= 0.0:
        raise ValueError(f"trace must be positive, got {trace}")
    return float(2 ** (2 * (code.n - code.k))) / trace**2


def virtual_qec_subset_cost(subset_size: int, captured_probability: float) -> float:
    """Cost of a restricted syndrome sum: |B|**2 / (sum of captured p_s)**2."""
    if subset_size < 1:
        raise ValueError("subset must be nonempty")
    if captured_probability <= 0.0:
        raise ValueError(f"captured probability must be positive, got {captured_probability}")
    return float(subset_size**2) / captured_probability**2
