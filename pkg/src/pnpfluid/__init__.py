"""2D electrokinetic simulation of one rigid charged particle.

Couples the electrostatic potential (piecewise dielectric, transmission
interface), Nernst-Planck ion transport, incompressible Navier-Stokes with
electric forcing, and rigid-body motion via a per-step fixed-point sweep.
Conservation of ion moles and fixed charge, and the kinetic / dissipation /
electric-work energy ledger are the verification surface.
"""

from .grid import Grid, VelocityField, bilinear_sample, divergence
from .geometry import (PhaseMap, RigidPose, ShapeSpec, advance_pose,
                       all_fluid_phase, build_phase_map, gap_to_wall,
                       rigid_velocity_field, transport_fixed_charge)
from .poisson import (ElectrostaticBC, apply_poisson_operator, assemble_rhs,
                      electric_field, electrostatic_energy, harmonic_lift,
                      maxwell_stress, solve_poisson)
from .oracles import oracle_decomposition_disk, radial_transmission_potential
from .nernst_planck import (SpeciesParams, boltzmann_profile, np_face_fluxes,
                            np_stable_dt, redistribute_covered, step_np,
                            total_moles)
from .fluid import (BodyInertia, advect_diffuse, advect_operator,
                    electric_force_density, enforce_rigidity, laplacian,
                    max_interior_strain, project_incompressible,
                    strain_rate_centers, surface_force_torque, viscous_drain)
from .diagnostics import (EnergyLedger, dissipation_rate,
                          dissipation_rate_gradient, electric_power,
                          energy_residual, kinetic_energy,
                          mechanical_bound_slack)
from .stepper import (DiagAccum, PicardReport, RunResult, SimState,
                      TStarReached, build_initial_state, choose_dt,
                      ledger_row, picard_step, run)
from .config import SimConfig, config_from_dict, parse_config
from .snapshot_io import read_snapshot, write_snapshot
from .errors import (ConfigError, GeometryError, InvariantViolation,
                     OracleError, PicardError, PnpFluidError, SnapshotError,
                     SolverError, StabilityError)

__version__ = "0.1.0"

__all__ = [
    "Grid", "VelocityField", "bilinear_sample", "divergence",
    "PhaseMap", "RigidPose", "ShapeSpec", "advance_pose", "all_fluid_phase",
    "build_phase_map", "gap_to_wall", "rigid_velocity_field",
    "transport_fixed_charge",
    "ElectrostaticBC", "apply_poisson_operator", "assemble_rhs",
    "electric_field", "electrostatic_energy", "harmonic_lift",
    "maxwell_stress", "solve_poisson",
    "oracle_decomposition_disk", "radial_transmission_potential",
    "SpeciesParams", "boltzmann_profile", "np_face_fluxes", "np_stable_dt",
    "redistribute_covered", "step_np", "total_moles",
    "BodyInertia", "advect_diffuse", "advect_operator",
    "electric_force_density", "enforce_rigidity", "laplacian",
    "max_interior_strain", "project_incompressible", "strain_rate_centers",
    "surface_force_torque", "viscous_drain",
    "EnergyLedger", "dissipation_rate", "dissipation_rate_gradient",
    "electric_power", "energy_residual", "kinetic_energy",
    "mechanical_bound_slack",
    "DiagAccum", "PicardReport", "RunResult", "SimState", "TStarReached",
    "build_initial_state", "choose_dt", "ledger_row", "picard_step", "run",
    "SimConfig", "config_from_dict", "parse_config",
    "read_snapshot", "write_snapshot",
    "ConfigError", "GeometryError", "InvariantViolation", "OracleError",
    "PicardError", "PnpFluidError", "SnapshotError", "SolverError",
    "StabilityError",
]
