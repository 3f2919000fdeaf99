"""Numerical laboratory for Dirichlet drift Laplacians on geodesic balls.

Modules
-------
geometry     warping profiles, radial drifts, model balls, pointwise fields
radial       1-D eigenproblems on model balls and spectrum assembly
disk         2-D disk operator, principal pair and its adjoint
bounds       Barta bracket, weighted Rayleigh quotient, integral min-max bound
compare      comparison-statement harness, Riccati rigidity, derivative checks
cli          command-line front end with parameter sweeps
"""

from .geometry import (DriftProfile, ModelBall, WarpingFunction, custom_warping,
                       drift_divergence, drift_from_callables, drift_from_rate,
                       euclidean_ball, extra_condition_lhs, make_space_form,
                       polynomial_drift, radial_sectional_curvature,
                       space_form_ball, volume_ratio_theta, weight_p, zero_drift)
from .radial import (RadialMode, SpectrumTable, assemble_spectrum,
                     frobenius_exponent, principal_eigenpair, solve_radial_modes,
                     sphere_eigenvalue, weighted_inner_product)
from .disk import (DiskProblem, EigenPair2D, PolarGrid, adjoint_principal,
                   assemble_operator, build_model_disk, principal_eigenpair_2d,
                   solve_principal)
from .bounds import (BartaBracket, HollandReport, barta_bracket, holland_bound,
                     q_functional, rayleigh_minimize, rayleigh_quotient,
                     solve_G_V, solve_w_u)
from .compare import (AnalyticDisk, ComparisonCase, ComparisonVerdict,
                      builtin_corpus, derivative_lambda_eps, eigenvalue_sandwich,
                      radial_ibp_check, riccati_uniqueness, run_corpus,
                      verify_divergence_comparison, verify_sectional_comparison, verify_ricci_comparison)

__version__ = "0.1.0"
