"""Solution-robustness toolkit for integer network optimization.

Computes proactive solutions (nominal-optimal, minimizing weighted solution
cost across a discrete scenario set) and reactive solutions (minimum-distance
repair once a scenario reveals) for integer min-cost flow and max-flow,
generates and verifies the associated NP-hardness reduction instances, and
runs a railroad line-planning case study.
"""

__version__ = "0.1.0"

from .network import (
    UNBOUNDED,
    Arc,
    DistanceKind,
    FlowNetwork,
    FlowScenarioSet,
    IntegerFlow,
    NetworkStructureError,
    Scenario,
    ScenarioKind,
    Violation,
    apply_scenario,
    check_feasible,
    distance,
    flow_cost,
    flow_value,
)
from .mincostflow import (
    INFEASIBLE,
    EnumerationBudgetError,
    Infeasible,
    TransformedInstance,
    brute_force_flows,
    eliminate_lower_bounds,
    reactive_value_distance,
    solve_max_flow,
    solve_min_cost_flow,
)

__all__ = [
    "UNBOUNDED",
    "Arc",
    "DistanceKind",
    "FlowNetwork",
    "FlowScenarioSet",
    "IntegerFlow",
    "NetworkStructureError",
    "Scenario",
    "ScenarioKind",
    "Violation",
    "apply_scenario",
    "check_feasible",
    "distance",
    "flow_cost",
    "flow_value",
    "INFEASIBLE",
    "EnumerationBudgetError",
    "Infeasible",
    "TransformedInstance",
    "brute_force_flows",
    "eliminate_lower_bounds",
    "reactive_value_distance",
    "solve_max_flow",
    "solve_min_cost_flow",
    "__version__",
]
