"""Ensemble reduced-order modelling toolkit for incompressible flow.

The package covers the whole workflow: mesh generation, Taylor-Hood
finite element assembly, ensemble time stepping with a shared coefficient
matrix, proper orthogonal decomposition of the resulting snapshots, and a
reduced online ensemble solver with stability and energy monitors.
"""

from .config import RunConfig, load_config, validate_config
from .errors import (ConfigError, DimensionError, EnpodError, GeometryError,
                     GridMismatchError, InvariantError, NonConvergence,
                     ParseError, RankError, ResolutionError,
                     SingularMatrixError, StabilityAbort)
from .fem import TaylorHoodSpace
from .forces import BodyForce, perturbed_force, rotational_force, zero_force
from .full_order import (EnsembleState, FlowField, Trajectory, cn_step,
                         en_full_fe_step, run_transient, solve_steady_stokes)
from .mesh import Mesh, generate_offset_annulus, generate_unit_square, \
    load_mesh, save_mesh
from .pod import (PODBasis, SnapshotSet, pod_basis, projection_identity_h1,
                  projection_identity_l2, snapshots_from_trajectories,
                  spectral_norms)
from .rom import (ReducedEnsembleState, ReducedModel, ReducedTrajectory,
                  build_reduced_model, en_pod_step, energy_bound_monitor,
                  reduced_initial_condition, run_rom, stability_check)

__version__ = "0.1.0"

__all__ = [
    "BodyForce", "ConfigError", "DimensionError", "EnpodError",
    "EnsembleState", "FlowField", "GeometryError", "GridMismatchError",
    "InvariantError", "Mesh", "NonConvergence", "PODBasis", "ParseError",
    "RankError", "ReducedEnsembleState", "ReducedModel", "ReducedTrajectory",
    "ResolutionError", "RunConfig", "SingularMatrixError", "SnapshotSet",
    "StabilityAbort", "TaylorHoodSpace", "Trajectory", "build_reduced_model",
    "cn_step", "en_full_fe_step", "en_pod_step", "energy_bound_monitor",
    "generate_offset_annulus", "generate_unit_square", "load_config",
    "load_mesh", "perturbed_force", "pod_basis", "projection_identity_h1",
    "projection_identity_l2", "reduced_initial_condition",
    "rotational_force", "run_rom", "run_transient", "save_mesh",
    "snapshots_from_trajectories", "solve_steady_stokes", "spectral_norms",
    "stability_check", "validate_config", "zero_force",
]
