"""Streaming K-means with exponential forgetting under concept drift."""

from .assignment import AssignmentResult, brute_force_lsap, solve_lsap
from .core import (DegenerateClusterError, DistanceCounter, InvalidInputError, assign,
                   kmeans_error, scatter_identity_check, sq_dist, weighted_mean)
from .lloyd import (SolverConfig, WeightedPointSet, batch_window_lloyd, kmpp_seed, lloyd,
                    weighted_lloyd)
from .rng import Xorshift64Star
from .streaming import (BatchWindow, InitializerKind, PSKMState, StreamState, centroid_weights,
                        fskm_step, hi_cost_matrix, init_hi, init_icb, init_upc, init_wki,
                        pskm_step, rho_from, skm_error, surrogate_error, upper_bound_const,
                        upper_bound_f)

__version__ = "0.1.0"
