"""Quantum reservoir computing benchmarks on driven-dissipative qubit-boson systems."""

__version__ = "0.1.0"

from .dynamics import PropagationError, PropagationMethod, initial_state, propagate_interval
from .hilbert import SpaceLayout, boson_ops, expectation, kron, partial_trace_qubit, qubit_ops
from .learning import RidgeModel, capacity, ridge_fit, ridge_predict, scaled_rmse
from .models import ReservoirConfig, hamiltonian, lindblad_jump
from .pipeline import (
    ExperimentResult,
    ExperimentSpec,
    SweepSpec,
    TaskSpec,
    convergence_study,
    fading_memory_probe,
    mg_autonomous_task,
    mg_forecast_task,
    pc_task,
    run_autonomous,
    run_delay_scan,
    run_experiment,
    run_reservoir,
    run_sweep,
    stm_task,
)
from .readout import FeatureExtractor, WignerGrid, extract_features, response_curve, wigner
from .tasks import TaskDataset, gen_mackey_glass, gen_pc, gen_stm, mg_targets

__all__ = [
    "ExperimentResult",
    "ExperimentSpec",
    "FeatureExtractor",
    "PropagationError",
    "PropagationMethod",
    "ReservoirConfig",
    "RidgeModel",
    "SpaceLayout",
    "SweepSpec",
    "TaskDataset",
    "TaskSpec",
    "WignerGrid",
    "boson_ops",
    "capacity",
    "convergence_study",
    "expectation",
    "extract_features",
    "fading_memory_probe",
    "gen_mackey_glass",
    "gen_pc",
    "gen_stm",
    "hamiltonian",
    "initial_state",
    "kron",
    "lindblad_jump",
    "mg_autonomous_task",
    "mg_forecast_task",
    "mg_targets",
    "partial_trace_qubit",
    "pc_task",
    "propagate_interval",
    "qubit_ops",
    "response_curve",
    "ridge_fit",
    "ridge_predict",
    "run_autonomous",
    "run_delay_scan",
    "run_experiment",
    "run_reservoir",
    "run_sweep",
    "scaled_rmse",
    "stm_task",
    "wigner",
]
