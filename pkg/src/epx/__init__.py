"""Numerical solvers for the fourth-order growth model
lap^2 u = det(D^2 u) + lambda*f on rectangles (Picard fixed point,
mountain-pass minimax, parabolic flow), on the disk (radial shooting),
and for the fourth-order KPZ variant (exponential transform)."""

from .energy import (EnergyBreakdown, GeometrySetup, TruncationParams, bump_psi,
                     energy, energy_gradient, fit_embedding_constants,
                     minorant_lambda0, mollified_direction, radial_minorant,
                     setup_geometry, truncated_energy, truncated_energy_gradient)
from .evolution import FlowConfig, flow_step, flow_to_steady
from .grid import (BoundaryKind, Field, Grid2D, GridMismatchError, axpy,
                   integrate, norm_l2, norm_linf, read_field_csv,
                   read_field_epx1, sub, write_field_csv, write_field_epx1)
from .kpz import KpzAdmissibilityError, KpzSolution, solve_kpz
from .linsolve import (SingularSystemError, SparseSystem, assemble_system,
                       dump_system, solve_biharmonic, solve_biharmonic_dirichlet,
                       solve_biharmonic_navier, solve_poisson)
from .mpass import (PathState, StabilityTag, classify_stability, find_local_min,
                    find_mountain_pass, scaled_residual)
from .operators import (StencilOp, bilaplacian_dirichlet, bilaplacian_navier,
                        dx, dxy, dy, ghost_policy_for, grad_perp, hessian_det,
                        hessian_det_divergence, laplacian)
from .picard import (PicardConfig, contraction_probe, lambda_threshold,
                     lap_norm, pde_residual, picard_map, solve_fixed_point)
from .radial import (RadialShot, find_radial_roots, radial_threshold, shoot,
                     solve_radial)
from .report import ConvergenceReport, Outcome

__version__ = "0.1.0"
