"""Optimal allocation of attention between two biased Poisson news sources."""

from .errors import (AttnAllocError, ValidationError, ExpViolated, ParseError, AssumptionViolated,
                     OrderingViolation, InvalidSpec, EmptyHalf, KinkPoint, SaddleDegenerate)
from .model import (ModelParams, RegimeTag, Technology, CutoffSet, validate_params,
                    immediate_payoffs, benchmark_values, regime_cutoffs, boundary_beliefs)
from .value import (BranchKind, RegimeSolution, solve, branch_value, solve_switch_points,
                    value_envelope, optimal_alpha, hjb_diagnostics)
from .oracle import (solve_infinite_horizon, solve_finite_horizon, two_period_thresholds,
                     corner_dominance_check, technology_family)
from .dynamics import (belief_after, first_passage_time, no_news_path, analytic_outcomes,
                       monte_carlo)
from .population import init_population, evolve, polarization_metric
from .variants import (AttentionBounds, AsymRates, MiddleAction, nonexclusive_solution,
                       asymmetric_solution, multi_action_policy)
from .gamma import gamma_from_g, sqrt_frontier, linear_frontier, gamma_solution, gamma_oracle

__all__ = [
    "AttnAllocError", "ValidationError", "ExpViolated", "ParseError", "AssumptionViolated",
    "OrderingViolation", "InvalidSpec", "EmptyHalf", "KinkPoint", "SaddleDegenerate",
    "ModelParams", "RegimeTag", "Technology", "CutoffSet", "validate_params",
    "immediate_payoffs", "benchmark_values", "regime_cutoffs", "boundary_beliefs",
    "BranchKind", "RegimeSolution", "solve", "branch_value", "solve_switch_points",
    "value_envelope", "optimal_alpha", "hjb_diagnostics",
    "solve_infinite_horizon", "solve_finite_horizon", "two_period_thresholds",
    "corner_dominance_check", "technology_family",
    "belief_after", "first_passage_time", "no_news_path", "analytic_outcomes", "monte_carlo",
    "init_population", "evolve", "polarization_metric",
    "AttentionBounds", "AsymRates", "MiddleAction", "nonexclusive_solution",
    "asymmetric_solution", "multi_action_policy",
    "gamma_from_g", "sqrt_frontier", "linear_frontier", "gamma_solution", "gamma_oracle",
]
