"""Quadratic-manifold and linear-basis model order reduction for
geometrically nonlinear 2D finite element models."""

__version__ = "0.1.0"

from .basis import (
    QuadTensor,
    ReductionBasis,
    deflate_basis,
    krylov_modes,
    modal_derivatives,
    orthogonalize_theta,
    static_derivatives,
    static_modal_derivatives,
    stiffness_directional_derivative,
    vibration_modes,
)
from .fem import (
    FEModel,
    Material,
    assemble_internal_force,
    assemble_internal_force_and_stiffness,
    assemble_load_pattern,
    assemble_mass,
    assemble_stiffness,
    build_tri6_model,
)
from .integrate import IntegratorConfig, hht_run, newton_solve
from .mesh import Mesh, generate_arch_mesh, generate_beam_mesh, select_nodes
from .metrics import ErrorReport, coupling_report, gre_m, reconstruct_amplitudes
from .methods import build_method
from .numerics import eig_gsym, factor_spd, solve_bordered, svd_thin
from .rom import (
    FullSystem,
    LinearBasisSystem,
    LinearizedSystem,
    QuadraticManifold,
    QuadraticManifoldSystem,
    Trajectory,
    lift,
    qm_evaluate,
    qm_jacobians,
    qm_residual,
)
from .scenarios import ScenarioConfig, build_model, builtin_scenarios
from .vkbeam import vk_beam_model
