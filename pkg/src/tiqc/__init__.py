"""Simulation and compilation toolbox for trapped-ion quantum processors."""

from .core import (
    DensityMatrix,
    ProbDist,
    PureState,
    measure_probabilities,
    partial_trace,
    process_fidelity,
    sample_outcomes,
    state_fidelity,
    tensor,
)
from .gates import (
    MS,
    AmpDamp,
    Collective,
    ConditionalZRot,
    CrosstalkMatrix,
    Hide,
    Idle,
    Measure,
    PhaseDamp,
    PulseSequence,
    R,
    Recool,
    SequenceError,
    Unhide,
    ZRot,
    apply_op,
    op_unitary,
)
from .channels import KrausChannel, amp_damp_channel, apply_channel, execute_density, phase_damp_channel
from .noise import NoiseParams, SimResult, error_budget, run_trajectory, simulate

__version__ = "0.1.0"

__all__ = [
    "AmpDamp",
    "Collective",
    "ConditionalZRot",
    "CrosstalkMatrix",
    "DensityMatrix",
    "Hide",
    "Idle",
    "KrausChannel",
    "MS",
    "Measure",
    "NoiseParams",
    "PhaseDamp",
    "ProbDist",
    "PulseSequence",
    "PureState",
    "R",
    "Recool",
    "SequenceError",
    "SimResult",
    "Unhide",
    "ZRot",
    "amp_damp_channel",
    "apply_channel",
    "apply_op",
    "error_budget",
    "execute_density",
    "measure_probabilities",
    "op_unitary",
    "partial_trace",
    "phase_damp_channel",
    "process_fidelity",
    "run_trajectory",
    "sample_outcomes",
    "simulate",
    "state_fidelity",
    "tensor",
]
