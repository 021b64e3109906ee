"""Convex bodies in hyperbolic and Euclidean space: volumes, visual direction sets,
limit-set dimensions, central sections and fractal hull constructions."""

__version__ = "0.1.0"

from ._errors import DomainError, NumericError, SizeError
from .space_volumes import (SpaceTag, BallQuery, ball_volume, ball_radius, kappa, omega,
                            hyp_volume_bounds, lobachevsky, normalized_cap_volume)
from .bounds import alpha, g_max, alpha_lower_bound, alpha_aux_gap, cap_volume_lower_bound
from .klein import (hyperbolic_distance, klein_radius, hyp_radius, distortion_factors,
                    hyperbolic_volume_mc, omega_K_measure_bound)
from .bodies import (HalfspaceBody, DirectionSet, omega_set, random_body, ideal_hull,
                     double_cone_check)
from .dimension import (FullSphere, NeighborhoodProfile, neighborhood_measure, minkowski_content,
                        estimate_upper_dim, limit_set_directions)
from .sections import (KFrame, BoundInputs, sample_plane, fubini_check, section_polytope,
                       section_radius, min_section_search, hyp_epsilon_bound, hyp_section_bound,
                       euc_section_bound, rigorous_section_bound)
from .fractals import (CantorSpec, CarpetSpec, cantor_intervals, cantor_dimension, ideal_tetra_volume,
                       cantor_hull_volume, truncated_hull_volume, cantor_ideal_points, carpet_cells,
                       carpet_dimension)
