"""Seed allocation for competing advertisers on a social network."""

from .feasibility import AssignmentPair, can_add, is_independent, verify_matroid_axioms
from .model import (
    Advertiser,
    Allocation,
    AttentionConstraints,
    Campaign,
    Edge,
    FormatError,
    HyperSocialGraph,
    allocation_column_sums,
    generate_synthetic,
    parse_campaign,
    parse_constraints,
    parse_graph,
    serialize_graph,
    shared_topology,
)
from .objectives import (
    ObjectiveReport,
    PenaltyParams,
    auto_phi,
    cost_C,
    evaluate,
    regret,
    revenue_V,
    shifted_f,
    shifted_f_prime,
    utility_U,
)
from .propagation import (
    ExactSpread,
    LiveEdgeEnsemble,
    estimate_spread,
    sample_live_edges,
    simulate_cascade,
)
from .solvers import (
    PhiInsufficientError,
    SolveResult,
    SolverTrace,
    brute_force_opt,
    double_greedy_urmp,
    greedy_p1,
    greedy_p2,
    greedy_rmp,
)

__version__ = "0.1.0"
