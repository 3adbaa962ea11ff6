"""Credible contour regions and quality measures for latent Gaussian fields.

The package builds sparse-precision Gaussian models on triangulations,
computes contour-map quality measures (average, rectangle and half-set
credibilities) by sequential Monte Carlo on the Cholesky factor, and turns
the per-node contour function into continuous credible regions through
conservative interpolation rules.
"""

from .contours import (ContourFunction, ContourLevelSet, LevelAssignment,
                       QualityReport, SelectionResult, assign_level_sets,
                       contour_avoiding_mask, contour_function, marginal_bounds,
                       levels_from_values, marginal_p, measure_P0, measure_P1,
                       measure_P2, pretty_levels, quality_report, select_K,
                       standard_levels)
from .errors import (ComputationError, ConstantFieldError, ContourCredError,
                     DegenerateMeshError, InputError, LocationError,
                     NotPositiveDefiniteError, UnsupportedSmoothnessError)
from .gmrf import (MaternSpec, ObservationSet, PrecisionModel,
                   build_matern_precision, condition_on_observations,
                   condition_on_values, marginal_variances, matern_covariance,
                   sample_field)
from .harness import (CoverageConfig, CoverageResult, check_mesh_resolution,
                      run_coverage_study, run_measure_table)
from .interp import (CredibleSet, InterpolatedField, eliminate_needles,
                     extract_credible_set, interpolate_in_triangle,
                     prune_triangles, subdivide)
from .linalg import CholeskyFactor, SparseSymMatrix, cholesky
from .mesh import Triangulation, interpolation_matrix, lattice_mesh
from .probability import (IntervalBox, ProbEstimate, bivariate_interval,
                          rectangle_probability, univariate_interval)
from .twopoint import (REFERENCE_CASES, TwoPointParams, compare_to_oracle,
                       two_point_F_oracle)

__version__ = "0.1.0"
