"""Simulation of polarization-OAM-frequency entangled photon pairs under
amplitude-and-phase damping and fiber propagation."""
from .core import (
    DensityMatrix,
    HilbertLabel,
    Operator,
    StateVector,
    concurrence_mixed,
    concurrence_pure,
    density_from_pure,
    expectation,
    fidelity,
    normalize,
    partial_trace,
    pauli,
    tensor,
)
from .channels import (
    ApdParams,
    KrausSet,
    TimeParams,
    apd_kraus,
    apply_channel_per_qubit,
    apply_channel_two_photon,
    fidelity_improvement_ratio,
    gamma_of_time,
    qudit_apd_kraus,
    system_fidelity,
)
from .states import (
    QPlateSpec,
    SourceParams,
    add_frequency_dof,
    hybrid_state,
    polarization_pair_state,
    qplate_transform,
    single_qubit_basis,
)

__version__ = "0.1.0"
