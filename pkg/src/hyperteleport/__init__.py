"""Statevector simulation of hypergraph-channel teleportation with tomography."""

from .hypergraph import (
    ChannelState,
    Hypergraph,
    build_channel_3q,
    build_channel_4q,
    build_hypergraph_state,
    is_k_uniform,
    sign_oracle,
)
from .noise import NoiseModel, fidelity_vs_noise, noisy_run, pipeline_fidelity
from .statevec import (
    Gate,
    InvariantViolation,
    ShotHistogram,
    StateVector,
    apply_gate,
    expectation_pauli,
    plus_state,
    reduced_density,
    sample_shots,
)
from .teleport import (
    ProtocolTrace,
    SingleQubitMessage,
    TeleportOutcome,
    TwoQubitMessage,
    correction_lookup,
    teleport_single,
    teleport_two,
    trace_single,
    trace_two,
)
from .tomography import (
    DensityMatrix,
    MeasurementSetting,
    StokesTensor,
    fidelity,
    fidelity_report,
    measurement_plan,
    reconstruct_density,
    stokes_from_histograms,
    theoretical_density,
    tomograph_state,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelState",
    "DensityMatrix",
    "Gate",
    "Hypergraph",
    "InvariantViolation",
    "MeasurementSetting",
    "NoiseModel",
    "ProtocolTrace",
    "ShotHistogram",
    "SingleQubitMessage",
    "StateVector",
    "StokesTensor",
    "TeleportOutcome",
    "TwoQubitMessage",
    "apply_gate",
    "build_channel_3q",
    "build_channel_4q",
    "build_hypergraph_state",
    "correction_lookup",
    "expectation_pauli",
    "fidelity",
    "fidelity_report",
    "fidelity_vs_noise",
    "is_k_uniform",
    "measurement_plan",
    "noisy_run",
    "pipeline_fidelity",
    "plus_state",
    "reconstruct_density",
    "reduced_density",
    "sample_shots",
    "sign_oracle",
    "stokes_from_histograms",
    "teleport_single",
    "teleport_two",
    "theoretical_density",
    "tomograph_state",
    "trace_single",
    "trace_two",
]
