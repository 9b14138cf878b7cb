"""viscobem: 2D collocation BEM for quasistatic linear visco-elasticity.

Implicit time stepping turns each step of a visco-elastic evolution into
one auxiliary elastostatic boundary-value problem solved with the Kelvin
fundamental solution; displacements, tractions and interior stresses are
then recovered by short history recursions.  Supports the second-order
rheology family (Kelvin-Voigt, Maxwell, Boltzmann, Jeffreys, Burgers, ...),
conforming multi-region coupling and frictionless unilateral contact
against rigid obstacles via a condensed quadratic program.
"""

from ._core import backend_name
from .model import (BCGroup, InvalidModelError, LoadProgram, Material, Mesh,
                    Rheology, generate_mesh, quarter_disk_mesh, rectangle_mesh,
                    rheology_preset, stacked_rectangles_mesh, validate_model)
from .assembly import (MixedSystem, RegionBem, UnsupportedConfigurationError,
                       assemble_region, boundary_mass, element_influence,
                       rigid_body_diagonal)
from .stepping import (Probe, StepCoeffs, TimeLoopResult, kv_step_coefficients,
                       recover_displacement, recover_traction, run_time_loop,
                       step_coefficients, transform_dirichlet, transform_neumann)
from .contact import (ContactQP, CondensedContact, contact_bounds, kkt_check,
                      solve_qp, transformed_bounds)
from .coupling import CoupledSystem, pair_interface_nodes
from .postprocess import (dissipated_energy, elastic_traction_split,
                          energy_balance, interior_fields)
from .cli import Case, ConfigError, load_case, parse_config, run_case

__version__ = "0.1.0"

__all__ = [
    "backend_name", "__version__",
    # model
    "BCGroup", "InvalidModelError", "LoadProgram", "Material", "Mesh",
    "Rheology", "generate_mesh", "quarter_disk_mesh", "rectangle_mesh",
    "rheology_preset", "stacked_rectangles_mesh", "validate_model",
    # assembly
    "MixedSystem", "RegionBem", "UnsupportedConfigurationError",
    "assemble_region", "boundary_mass", "element_influence",
    "rigid_body_diagonal",
    # stepping
    "Probe", "StepCoeffs", "TimeLoopResult", "kv_step_coefficients",
    "recover_displacement", "recover_traction", "run_time_loop",
    "step_coefficients", "transform_dirichlet", "transform_neumann",
    # contact
    "ContactQP", "CondensedContact", "contact_bounds", "kkt_check",
    "solve_qp", "transformed_bounds",
    # coupling
    "CoupledSystem", "pair_interface_nodes",
    # postprocess
    "dissipated_energy", "elastic_traction_split", "energy_balance",
    "interior_fields",
    # cli
    "Case", "ConfigError", "load_case", "parse_config", "run_case",
]
