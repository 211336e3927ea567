"""Virtual quantum error detection on stabilizer codes.

Simulation library for error-mitigated expectation values of logical
observables on noisy stabilizer-encoded circuits, in exact superoperator
mode and shot-sampled Monte Carlo mode, plus an experiment harness for
infidelity and sampling-cost sweeps.
"""

from .codes import (
    RecoveryTable,
    StabilizerCode,
    StabilizerGroup,
    TransversalGate,
    build_code,
    clifford_gates,
    code_from_json,
    known_codes,
)
from .density import (
    DensityMatrix,
    NoiseModel,
    apply_depolarizing,
    apply_unitary,
    depolarize_all,
    expectation,
    fidelity_pure,
    measure_projective,
    shot_stream,
)
from .exact import (
    CircuitSpec,
    GadgetSchedule,
    VirtualQecConfig,
    VqedValue,
    apply_virtual_qec,
    evolve_qed,
    evolve_unprotected,
    gadget_channel_average,
    ideal_statevector,
    initial_state,
    stabilizer_twirl,
    virtual_qec_exact,
    virtual_qec_full_cost,
    virtual_qec_subset_cost,
    vqed_exact,
    vqed_exact_noisy_gadget,
    vqed_sampling_cost,
)
from .experiments import (
    ExperimentConfig,
    SweepRow,
    generate_random_circuit,
    run_cost_sweep,
    run_infidelity_sweep,
    write_rows,
)
from .pauli import PauliString
from .sampling import (
    EstimatorResult,
    ShotRecord,
    se_estimate,
    virtual_qec_sample,
    vqed_estimate,
    vqed_shot_run,
)

__version__ = "0.1.0"

__all__ = [
    "CircuitSpec",
    "DensityMatrix",
    "EstimatorResult",
    "ExperimentConfig",
    "GadgetSchedule",
    "NoiseModel",
    "PauliString",
    "RecoveryTable",
    "ShotRecord",
    "StabilizerCode",
    "StabilizerGroup",
    "SweepRow",
    "TransversalGate",
    "VirtualQecConfig",
    "VqedValue",
    "apply_depolarizing",
    "apply_unitary",
    "apply_virtual_qec",
    "build_code",
    "clifford_gates",
    "code_from_json",
    "depolarize_all",
    "evolve_qed",
    "evolve_unprotected",
    "expectation",
    "fidelity_pure",
    "gadget_channel_average",
    "generate_random_circuit",
    "ideal_statevector",
    "initial_state",
    "known_codes",
    "measure_projective",
    "run_cost_sweep",
    "run_infidelity_sweep",
    "se_estimate",
    "shot_stream",
    "stabilizer_twirl",
    "virtual_qec_exact",
    "virtual_qec_full_cost",
    "virtual_qec_sample",
    "virtual_qec_subset_cost",
    "vqed_estimate",
    "vqed_exact",
    "vqed_exact_noisy_gadget",
    "vqed_sampling_cost",
    "vqed_shot_run",
    "write_rows",
]
