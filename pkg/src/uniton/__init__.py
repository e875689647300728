"""Harmonic maps of finite uniton number: filtered models, explicit uniton
factorizations, and the algebraic loop-group splitting."""

from .exactfun import (GaussianRational, LaurentSection, MeroVector, Poly,
                       RationalFun, bilinear_c, evaluate, mv, omega_form,
                       perp_c, perp_omega, rf, rf_arith, rf_derivative,
                       rf_is_zero, section, section_order)
from .numlin import (DEFAULT_TOL, Subspace, Tolerances, contains,
                     full_subspace, orthonormal_span,
                     principal_angle_distance, projector, subspace_distance,
                     subspace_ops, zero_subspace)
from .loopalg import (LoopFamily, LoopMatrix, identity_loop,
                      loop_adjoint_inverse, loop_eval, loop_mul,
                      nu_involution, reality_defect, s1_action, standard_j,
                      symplectic_defect, uniton_factor, unitarity_defect)
from .grassmodel import (A_ranks, GradedFiber, WModel, delta_subspaces,
                         extended_solution_defect, generate_W, good_points,
                         graded_W, graded_projection, intersect_lambda,
                         lambda_span_W, s1_invariant_limit, sample_grid,
                         scale_action, step, symmetry_tests)
from .factorize import (FiltrationSpec, IwasawaResult, NormalizationRecord,
                        UnitonChain, alternating_real_factorization,
                        extract_unitons_generic, gauss_chain_length,
                        gauss_unitons_explicit, iwasawa,
                        mixed_unitons_explicit, normalize,
                        reconstruct_and_verify, segal_unitons_H,
                        segal_unitons_explicit, uhlenbeck_unitons_H,
                        uhlenbeck_unitons_explicit)
from .geomaps import (HarmonicMapEval, HoloCurve, SuperhorizontalSeq,
                      TargetClass, associated_curve,
                      build_real_superhorizontal_odd, cartan_embed,
                      classify_target, gauss_transform,
                      gauss_transform_grassmannian, harmonic_map_from_chain,
                      isotropy_order, s1_invariant_phi, zeta_decomposition)
from .verify import Report, pde_check, run_suite
from .corpus import builtin_examples
from .manifest import Manifest, builtin_manifest, parse_manifest, \
    serialize_manifest

__version__ = "0.1.0"
