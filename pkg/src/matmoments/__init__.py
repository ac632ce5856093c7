"""Covariant descriptors of colored 3D point configurations.

Builds complete rotation-covariant features by packing spherical-harmonic
sums into block matrices whose products replace explicit Clebsch-Gordan
coupling, plus the coupling-based reference construction, tensor-contraction
invariants, random-projection reduction, and seeded training utilities.
"""

from .errors import (DimensionTooSmall, DivergenceDetected, MalformedSpec,
                     MatMomentsError, NonDifferentiablePoint,
                     NonOrthogonalRotation, ParseError, ShapeMismatch,
                     SingularSystem, TriangleViolation, UnknownColor)
from .harmonics import (evaluate_harmonics, evaluate_harmonics_flat,
                        evaluate_harmonics_with_gradient, harmonic_polynomials)
from .so3 import (CgTable, Rotation, build_cg_table, cg_product, generators,
                  wigner_real)
from .moments import (BlockLayout, BlockMatrix, ColoredConfig, MomentMatrix,
                      assemble_block, block_traces, chain_product, iota_embed,
                      moment_matrix, multiply_blocks)
from .descriptors import (FundamentalFeatures, InvariantModel, ModelHyper,
                          RadialSpec, algorithm_forward, algorithm_gradient,
                          fundamental_features, param_init,
                          radial_separation_check)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
