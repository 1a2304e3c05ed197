"""Line planning in the rotation-symmetric Parametric City.

Builds Parametric City instances, formulates the arc-based line-planning
MILP and its 3-variable symmetric restriction, measures the symmetry gap
between them, evaluates the closed-form bounds, and runs the symmetric
line-planning approximation algorithm.
"""

from .city import CityInstance, CityParams, Node, build_city, build_demand, geometry_constants, rotate
from .bounds import BoundSet, gap_bounds, lambda_value, shortest_path_oracle
from .lines import Line, LinePlan, canonical_symmetric_lineplan, decompose_circulation, lpa
from .model import MilpModel, UmcfpInstance, build_alpp, build_alpp_sym, build_lp_relaxation, build_umcfp
from .solver import Solution, SolveStatus, extract_frequency_plan, solve_lp, solve_milp
from .symmetry import (
    FrequencyPlan,
    GapReport,
    RoutingFlow,
    SymmetricFrequencies,
    is_arc_symmetric,
    symmetric_flow_from_symmetric_plan,
    symmetric_plan_from_symmetric_flow,
    symmetrize,
    symmetry_gap,
)

__version__ = "0.1.0"

__all__ = [
    "BoundSet",
    "CityInstance",
    "CityParams",
    "FrequencyPlan",
    "GapReport",
    "Line",
    "LinePlan",
    "MilpModel",
    "Node",
    "RoutingFlow",
    "Solution",
    "SolveStatus",
    "SymmetricFrequencies",
    "UmcfpInstance",
    "build_alpp",
    "build_alpp_sym",
    "build_city",
    "build_demand",
    "build_lp_relaxation",
    "build_umcfp",
    "canonical_symmetric_lineplan",
    "decompose_circulation",
    "extract_frequency_plan",
    "gap_bounds",
    "geometry_constants",
    "is_arc_symmetric",
    "lambda_value",
    "lpa",
    "rotate",
    "shortest_path_oracle",
    "solve_lp",
    "solve_milp",
    "symmetric_flow_from_symmetric_plan",
    "symmetric_plan_from_symmetric_flow",
    "symmetrize",
    "symmetry_gap",
]
