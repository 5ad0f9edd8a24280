"""Core-electron entanglement in a rotating-core Rydberg molecule.

Quantum side: multichannel quantum defect bound states, eigenstate linear
entropy, wavepacket purity and channel correlations. Classical side: the
kicked-precession map and its surface of section, plus Husimi projections
that put the two on the same sphere.
"""

__version__ = "0.1.0"

from .angular import spin_coherent_amplitudes, wigner_3j
from .channels import (
    ChannelSet,
    OpenChannelError,
    ReactionMatrix,
    build_channel_set,
    effective_quantum_number,
    frame_transformation,
    reaction_matrix,
)
from .classical import ClassicalParams, iterate_sos, resonant_rotational_constant, step, step_jacobian
from .dynamics import (
    WavepacketSpec,
    WavepacketState,
    build_wavepacket,
    channel_correlation,
    purity_series,
    recurrence_period,
    revival_times,
)
from .husimi import HusimiGrid, husimi_grid, molecular_frame_amplitudes
from .mqdt import Eigenstate, MissedRootWarning, entropy_statistics, find_eigenstates, uncoupled_levels

__all__ = [
    "ChannelSet",
    "ClassicalParams",
    "Eigenstate",
    "HusimiGrid",
    "MissedRootWarning",
    "OpenChannelError",
    "ReactionMatrix",
    "WavepacketSpec",
    "WavepacketState",
    "build_channel_set",
    "build_wavepacket",
    "channel_correlation",
    "effective_quantum_number",
    "entropy_statistics",
    "find_eigenstates",
    "frame_transformation",
    "husimi_grid",
    "iterate_sos",
    "molecular_frame_amplitudes",
    "purity_series",
    "reaction_matrix",
    "recurrence_period",
    "resonant_rotational_constant",
    "revival_times",
    "spin_coherent_amplitudes",
    "step",
    "step_jacobian",
    "uncoupled_levels",
    "wigner_3j",
]
