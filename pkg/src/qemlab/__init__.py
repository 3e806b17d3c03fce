"""Simulation lab for symmetry-verified quantum error mitigation.

Compiles logical Clifford circuits onto repetition / Steane codes, runs them
under depolarizing noise on two cross-validating backends (exact density
matrix and sampled Pauli-frame trajectories), applies detection-based
mitigation (DM / DSM / SS post-selection, Hamming-band correction, Pauli
check sandwiching), and evaluates the analytic error/post-selection bounds.
"""

from .circuit import Circuit, Gate, GateKind, GateCensus, parse_circuit, serialize_circuit, gate_census
from .codes import (
    CodeSpec,
    EncodedCircuit,
    HadamardMode,
    PauliString,
    census_c,
    compile_logical,
    decoding_circuit,
    ss_extraction_circuit,
    stabilizer_generators,
    state_prep,
)
from .noise import NoiseModel, PauliFault, Injection, depolarizing_channel, sample_fault
from .density import run_dm
from .tableau import OutcomeHistogram, Tableau, run_trajectories
from .mitigation import (
    DecodePolicy,
    MitigationResult,
    ReadoutLayout,
    Strategy,
    build_pcs_circuit,
    dm_decode,
    dsm_postselect,
    mitigate,
    ss_postselect,
)
from .analysis import (
    BoundInputs,
    BoundReport,
    min_d_for_epsilon,
    monotonicity_check,
    nonft_h_logical_error,
    pl_upper,
    ps_lower,
    ratio_report,
    sso,
    threshold,
)
from .harness import ExperimentConfig, RunRecord, emit, repro, run_experiment

__all__ = [
    "Circuit", "Gate", "GateKind", "GateCensus",
    "parse_circuit", "serialize_circuit", "gate_census",
    "CodeSpec", "PauliString", "HadamardMode", "EncodedCircuit",
    "stabilizer_generators", "state_prep", "compile_logical",
    "decoding_circuit", "ss_extraction_circuit", "census_c",
    "NoiseModel", "PauliFault", "Injection", "depolarizing_channel", "sample_fault",
    "run_dm",
    "Tableau", "OutcomeHistogram", "run_trajectories",
    "Strategy", "DecodePolicy", "MitigationResult", "ReadoutLayout",
    "dm_decode", "dsm_postselect", "ss_postselect", "build_pcs_circuit", "mitigate",
    "sso", "nonft_h_logical_error", "threshold", "pl_upper", "ps_lower",
    "ratio_report", "min_d_for_epsilon", "monotonicity_check",
    "BoundInputs", "BoundReport",
    "ExperimentConfig", "RunRecord", "run_experiment", "repro", "emit",
]
