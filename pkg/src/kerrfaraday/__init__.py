"""Gravitational Faraday rotation along Kerr null geodesics.

The main entry points are re-exported here; see the submodules for the
full interfaces.
"""

from .errors import (
    BasisUndefinedError,
    DomainError,
    KerrFaradayError,
    StalledOrbitError,
    VerificationError,
)
from .geodesic import ConservedSet, GeodesicState, Trajectory, initial_state, integrate
from .geometry import KerrParams, SpacetimePoint
from .polarization import faraday_angle, initial_polarization, measurement_basis, rotation_matrix
from .ppframe import parallel_frame
from .run import emit_plot_data, run_scenario
from .scenario import Scenario, load as load_scenario

__all__ = [
    "BasisUndefinedError",
    "DomainError",
    "KerrFaradayError",
    "StalledOrbitError",
    "VerificationError",
    "ConservedSet",
    "GeodesicState",
    "Trajectory",
    "initial_state",
    "integrate",
    "KerrParams",
    "SpacetimePoint",
    "faraday_angle",
    "initial_polarization",
    "measurement_basis",
    "rotation_matrix",
    "parallel_frame",
    "run_scenario",
    "emit_plot_data",
    "Scenario",
    "load_scenario",
]
