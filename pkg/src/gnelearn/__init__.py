"""Payoff-based learning of variational generalized Nash equilibria.

Strongly monotone games with box local sets and a shared affine constraint,
learned from cost and constraint observations alone via Gaussian one-/two-point
gradient estimates and Tikhonov-regularized primal-dual projected updates.
"""

from .builtin import BUILTIN_GAMES, builtin_game, control_game
from .estimators import (PlayerStreams, QuerySample, one_point_estimate,
                         sample_query, two_point_estimate)
from .game import (AugmentedPoint, CallableCost, GameSpec, QuadraticCost,
                   eval_augmented_pg, eval_constraint, eval_cost,
                   eval_pseudo_gradient, eval_regularized_pg, lagrangian)
from .geometry import Box, ShrunkBox, project_box, project_nonneg, shrink
from .learner import (IterationRecord, LearnerDivergence, LearnerState,
                      RunConfig, Trace, attach_reference, log_checkpoints, run,
                      step, write_trace_csv)
from .oracle import (ConvergenceError, GameConstants, MethodDisagreement,
                     NotStronglyMonotone, RateFit, ReferenceSolutions,
                     check_regularization_bounds, decompose_estimate,
                     estimate_constants, fit_rate, mean_distance_curve,
                     smoothed_pg_mc, solve_regularized_vi, solve_vgne)
from .schedules import ScheduleConfig, preset, rate_diagnostics, schedule_at

__version__ = "0.1.0"
