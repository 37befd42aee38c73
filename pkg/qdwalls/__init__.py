"""
Phase structure of quantum double models.

SPDX-License-Identifier: Apache-2.0

For more details about this library, please refer to the README.
"""

import logging

from .condensation import PhaseSpec, condensable_algebra, enumerate_phases
from .const import __version__
from .exceptions import QuantumDoubleException
from .floquet import enumerate_phase_specs, is_legal_transition, transition_graph
from .group import FiniteGroup, build_group, preset_group
from .qdouble import QuantumDouble, quantum_double
from .tunneling import TunnelingProblem, tunneling_map

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "FiniteGroup",
    "PhaseSpec",
    "QuantumDouble",
    "QuantumDoubleException",
    "TunnelingProblem",
    "__version__",
    "build_group",
    "condensable_algebra",
    "enumerate_phase_specs",
    "enumerate_phases",
    "is_legal_transition",
    "preset_group",
    "quantum_double",
    "transition_graph",
    "tunneling_map",
]
