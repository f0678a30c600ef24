"""Proactive and reactive problems for min-cost flow and max-flow under both
distances, built as MILP models (the value-distance reactive case also has the
polynomial route in mincostflow).

The proactive model carries one integer flow copy per scenario next to the
anchored nominal copy and minimizes the weighted sum of linearized distances.
Value distances use slack pairs per arc; structure distances use binary usage
indicators y with x <= U y and y <= x and slack pairs on y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .milp import (
    MilpModel,
    MilpResult,
    MilpStatus,
    Relation,
    Sense,
    SolveBudget,
    VarKind,
    solve_milp,
)
from .mincostflow import (
    INFEASIBLE,
    Infeasible,
    solve_max_flow,
    solve_min_cost_flow,
)
from .network import (
    UNBOUNDED,
    DistanceKind,
    FlowNetwork,
    FlowScenarioSet,
    IntegerFlow,
    Scenario,
    ScenarioKind,
    active_bounds,
    apply_scenario,
    check_feasible,
    distance,
    flow_cost,
    flow_value,
)


class ProblemKind(Enum):
    MIN_COST_FLOW = "mcf"
    MAX_FLOW = "mf"


class AnchorMode(Enum):
    EXACT = "exact"
    RELAXED = "relaxed"


class AnchorInfeasibleError(RuntimeError):
    """No nominal solution satisfies the anchor constraint."""


class ScenarioInfeasibleError(RuntimeError):
    """Some scenarios admit no feasible flow."""

    def __init__(self, scenario_ids: list[str]) -> None:
        super().__init__(f"infeasible scenarios: {', '.join(scenario_ids)}")
        self.scenario_ids = scenario_ids


class SolveBudgetError(RuntimeError):
    """The MILP budget ran out; carries the partial result."""

    def __init__(self, result: MilpResult) -> None:
        super().__init__("solver budget exceeded")
        self.result = result


@dataclass(frozen=True)
class NominalAnchor:
    """Anchor on the nominal objective of the proactive solution: exact
    f(x^p) = c*, or relaxed to c*(1+eps) (>= ceil(c*(1-eps)) for max-flow)."""

    mode: AnchorMode = AnchorMode.EXACT
    epsilon: Fraction = Fraction(0)
    c_star: Optional[Fraction] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.c_star is not None:
            object.__setattr__(self, "c_star", Fraction(self.c_star))


@dataclass(frozen=True)
class RobustSpec:
    problem: ProblemKind
    distance: DistanceKind
    scenarios: FlowScenarioSet
    anchor: NominalAnchor = NominalAnchor()

    def __post_init__(self) -> None:
        expected = (
            ScenarioKind.DEMAND
            if self.problem is ProblemKind.MIN_COST_FLOW
            else ScenarioKind.CAPACITY
        )
        if self.scenarios.kind is not expected:
            raise ValueError(
                f"{self.problem.value} robustness requires {expected.value} uncertainty, "
                f"got {self.scenarios.kind.value}"
            )


@dataclass(frozen=True)
class ProactiveSolution:
    proactive: IntegerFlow
    scenario_flows: dict[str, IntegerFlow]
    objective: Fraction
    c_star: Fraction
    per_scenario_distance: dict[str, int]
    result: MilpResult


def nominal_optimum(net: FlowNetwork, problem: ProblemKind) -> Union[Fraction, Infeasible]:
    """Optimal value c* of the nominal problem."""
    if problem is ProblemKind.MIN_COST_FLOW:
        flow = solve_min_cost_flow(net)
        if isinstance(flow, Infeasible):
            return INFEASIBLE
        return flow_cost(net, flow)
    return Fraction(flow_value(net, solve_max_flow(net)))


def _joint_cap(
    net: FlowNetwork,
    all_bounds: list[list[tuple[int, Union[int, float]]]],
    nominal: Optional[IntegerFlow] = None,
) -> int:
    """Finite bound on any useful arc flow across all solution copies.

    Covers the positive balances, every copy's forced lower-bound mass (so one
    copy can mimic another's forced flow), one unit per arc (support
    witnesses for structure models), the finite capacity mass for max-flow
    value paths, and -- for repair models -- the nominal flow's mass. Exact on
    networks whose unbounded-capacity part is acyclic, which covers every
    generated instance; finite capacities are recommended on directed cycles.
    """
    cap = sum(max(net.balance(v), 0) for v in net.nodes)
    for a in range(len(net.arcs)):
        lmax = max(bounds[a][0] for bounds in all_bounds)
        cap += max(lmax, 1)
        if net.is_max_flow():
            finite = [int(bounds[a][1]) for bounds in all_bounds if bounds[a][1] != UNBOUNDED]
            cap += max(finite, default=0)
    if nominal is not None:
        cap += sum(nominal.values)
    return cap


def _flow_copy(
    model: MilpModel,
    net: FlowNetwork,
    bounds: list[tuple[int, Union[int, float]]],
    prefix: str,
    anchored_value_var: bool,
    cap: int,
) -> tuple[list[str], Optional[str], list[int]]:
    """Declare integer flow variables and conservation rows for one copy.

    Returns (arc variable names, value variable name for max-flow copies,
    per-arc finite upper bounds).
    """
    names: list[str] = []
    ubs: list[int] = []
    for a, (lo, up) in enumerate(bounds):
        u = cap if up == UNBOUNDED else int(min(up, cap))
        u = max(u, lo)  # forced flow may exceed the circulation estimate
        names.append(
            model.add_variable(f"{prefix}_a{a}", lb=Fraction(lo), ub=Fraction(u), kind=VarKind.INTEGER)
        )
        ubs.append(u)
    value_var: Optional[str] = None
    if net.is_max_flow():
        if anchored_value_var:
            value_var = model.add_variable(
                f"{prefix}_value", lb=Fraction(0), ub=Fraction(cap), kind=VarKind.INTEGER
            )
        for v in net.nodes:
            if v == net.sink:
                continue
            coeffs: dict[str, Fraction] = {}
            for i in net.out_arcs(v):
                coeffs[names[i]] = coeffs.get(names[i], Fraction(0)) + 1
            for i in net.in_arcs(v):
                coeffs[names[i]] = coeffs.get(names[i], Fraction(0)) - 1
            if v == net.source:
                if value_var is None:
                    continue  # scenario copies leave the flow value free
                coeffs[value_var] = Fraction(-1)
            model.add_constraint(coeffs, Relation.EQ, Fraction(0), name=f"{prefix}_cons_{v}")
    else:
        for v in net.nodes:
            coeffs = {}
            for i in net.out_arcs(v):
                coeffs[names[i]] = coeffs.get(names[i], Fraction(0)) + 1
            for i in net.in_arcs(v):
                coeffs[names[i]] = coeffs.get(names[i], Fraction(0)) - 1
            model.add_constraint(
                coeffs, Relation.EQ, Fraction(net.balance(v)), name=f"{prefix}_cons_{v}"
            )
    return names, value_var, ubs


def _structure_indicators(
    model: MilpModel, names: list[str], ubs: list[int], prefix: str
) -> list[str]:
    """Binary usage indicators with x <= U y and y <= x (so y = 1{x > 0})."""
    ys: list[str] = []
    for a, (x_name, u) in enumerate(zip(names, ubs)):
        y = model.add_variable(f"{prefix}_y{a}", kind=VarKind.BINARY)
        model.add_constraint(
            {x_name: Fraction(1), y: Fraction(-u)}, Relation.LE, Fraction(0), name=f"{prefix}_use{a}"
        )
        model.add_constraint(
            {y: Fraction(1), x_name: Fraction(-1)}, Relation.LE, Fraction(0), name=f"{prefix}_on{a}"
        )
        ys.append(y)
    return ys


def _slack_pair(
    model: MilpModel,
    d_name: str,
    left: str,
    right: str,
    bound: int,
    tag: str,
) -> str:
    """d >= left - right and d >= right - left via two inequalities."""
    d = model.add_variable(d_name, lb=Fraction(0), ub=Fraction(bound), kind=VarKind.INTEGER)
    model.add_constraint(
        {left: Fraction(1), right: Fraction(-1), d: Fraction(-1)}, Relation.LE, Fraction(0),
        name=f"{tag}_pos",
    )
    model.add_constraint(
        {right: Fraction(1), left: Fraction(-1), d: Fraction(-1)}, Relation.LE, Fraction(0),
        name=f"{tag}_neg",
    )
    return d


def build_proactive_model(net: FlowNetwork, spec: RobustSpec) -> MilpModel:
    """The joint model over the anchored nominal copy and one copy per
    scenario, minimizing the weighted sum of linearized distances."""
    anchor = spec.anchor
    if anchor.c_star is None:
        raise ValueError("anchor c* must be computed before building the proactive model")
    spec.scenarios.validate_against(net)
    model = MilpModel("proactive")
    nominal_bounds = active_bounds(net)
    scenario_bounds = [
        active_bounds(net, (spec.scenarios.kind, sc)) for sc in spec.scenarios.scenarios
    ]
    cap = _joint_cap(net, [nominal_bounds] + scenario_bounds)
    is_mf = spec.problem is ProblemKind.MAX_FLOW
    xp, vp, ub_p = _flow_copy(model, net, nominal_bounds, "xp", anchored_value_var=is_mf, cap=cap)

    c_star = anchor.c_star
    if is_mf:
        if anchor.mode is AnchorMode.EXACT:
            model.add_constraint({vp: Fraction(1)}, Relation.EQ, c_star, name="anchor")
        else:
            floor_value = Fraction(math.ceil(c_star * (1 - anchor.epsilon)))
            model.add_constraint({vp: Fraction(1)}, Relation.GE, floor_value, name="anchor")
    else:
        cost_row = {xp[a]: net.arcs[a].cost for a in range(len(net.arcs)) if net.arcs[a].cost}
        if anchor.mode is AnchorMode.EXACT:
            model.add_constraint(cost_row, Relation.EQ, c_star, name="anchor")
        else:
            model.add_constraint(cost_row, Relation.LE, c_star * (1 + anchor.epsilon), name="anchor")

    yp = (
        _structure_indicators(model, xp, ub_p, "xp")
        if spec.distance is DistanceKind.STRUCTURE
        else []
    )

    objective: dict[str, Fraction] = {}
    for i, scenario in enumerate(spec.scenarios.scenarios):
        bounds = scenario_bounds[i]
        xs, _, ub_s = _flow_copy(model, net, bounds, f"x_s{i}", anchored_value_var=False, cap=cap)
        if spec.distance is DistanceKind.VALUE:
            for a in range(len(net.arcs)):
                d = _slack_pair(
                    model, f"d_s{i}_a{a}", xp[a], xs[a], max(ub_p[a], ub_s[a]), f"d_s{i}_a{a}"
                )
                objective[d] = scenario.weight
        else:
            ys = _structure_indicators(model, xs, ub_s, f"x_s{i}")
            for a in range(len(net.arcs)):
                d = _slack_pair(model, f"d_s{i}_a{a}", yp[a], ys[a], 1, f"d_s{i}_a{a}")
                objective[d] = scenario.weight
    model.set_objective(Sense.MIN, objective)
    return model


def build_reactive_model(
    net: FlowNetwork, nominal: IntegerFlow, kind: DistanceKind
) -> MilpModel:
    """Single-scenario repair model: minimize d(x^r, nominal) over the active
    feasible set; the nominal objective is deliberately absent."""
    if len(nominal) != len(net.arcs):
        raise ValueError("nominal flow does not index this network's arcs")
    model = MilpModel("reactive")
    bounds = active_bounds(net)
    cap = _joint_cap(net, [bounds], nominal)
    xr, _, ubs = _flow_copy(model, net, bounds, "xr", anchored_value_var=False, cap=cap)
    if kind is DistanceKind.VALUE:
        objective: dict[str, Fraction] = {}
        for a in range(len(net.arcs)):
            bound = max(ubs[a], nominal[a])
            d = model.add_variable(
                f"d_a{a}", lb=Fraction(0), ub=Fraction(bound), kind=VarKind.INTEGER
            )
            model.add_constraint(
                {xr[a]: Fraction(1), d: Fraction(-1)}, Relation.LE, Fraction(nominal[a]),
                name=f"d_a{a}_pos",
            )
            model.add_constraint(
                {xr[a]: Fraction(-1), d: Fraction(-1)}, Relation.LE, Fraction(-nominal[a]),
                name=f"d_a{a}_neg",
            )
            objective[d] = Fraction(1)
        model.set_objective(Sense.MIN, objective)
        return model
    ys = _structure_indicators(model, xr, ubs, "xr")
    coeffs: dict[str, Fraction] = {}
    constant = Fraction(0)
    for a in range(len(net.arcs)):
        if nominal[a] > 0:
            constant += 1
            coeffs[ys[a]] = Fraction(-1)
        else:
            coeffs[ys[a]] = Fraction(1)
    model.set_objective(Sense.MIN, coeffs, constant)
    return model


def _decode_flow(net: FlowNetwork, result: MilpResult, prefix: str) -> IntegerFlow:
    values = tuple(int(result.assignment[f"{prefix}_a{a}"]) for a in range(len(net.arcs)))
    return IntegerFlow(values)


def solve_proactive(
    net: FlowNetwork,
    spec: RobustSpec,
    budget: Optional[SolveBudget] = None,
    backend: str = "reference",
) -> ProactiveSolution:
    """Compute c* if missing, build and solve the proactive model, and decode
    the |S|+1 flows. Anchor infeasibility is reported distinctly from
    scenario infeasibility."""
    anchor = spec.anchor
    if anchor.c_star is None:
        c_star = nominal_optimum(net, spec.problem)
        if isinstance(c_star, Infeasible):
            raise AnchorInfeasibleError("nominal problem is infeasible")
        spec = replace(spec, anchor=replace(anchor, c_star=c_star))
    model = build_proactive_model(net, spec)
    result = solve_milp(model, budget, backend)
    if result.status is MilpStatus.BUDGET_EXCEEDED:
        raise SolveBudgetError(result)
    if result.status is MilpStatus.INFEASIBLE:
        bad = _infeasible_scenarios(net, spec.scenarios)
        if bad:
            raise ScenarioInfeasibleError(bad)
        raise AnchorInfeasibleError(
            f"no nominal solution satisfies the anchor at c*={spec.anchor.c_star}"
        )
    proactive = _decode_flow(net, result, "xp")
    scenario_flows: dict[str, IntegerFlow] = {}
    per_distance: dict[str, int] = {}
    for i, scenario in enumerate(spec.scenarios.scenarios):
        flow = _decode_flow(net, result, f"x_s{i}")
        violations = check_feasible(net, flow, (spec.scenarios.kind, scenario))
        if violations:
            raise AssertionError(
                f"scenario {scenario.id} copy infeasible: {violations[0]}"
            )
        scenario_flows[scenario.id] = flow
        per_distance[scenario.id] = distance(proactive, flow, spec.distance)
    if check_feasible(net, proactive):
        raise AssertionError("proactive copy infeasible for the nominal bounds")
    _check_anchor(net, spec, proactive)
    if spec.distance is DistanceKind.STRUCTURE:
        _check_indicators(net, result, proactive, scenario_flows, spec)
    objective = result.objective_value
    return ProactiveSolution(
        proactive, scenario_flows, objective, spec.anchor.c_star, per_distance, result
    )


def _check_anchor(net: FlowNetwork, spec: RobustSpec, proactive: IntegerFlow) -> None:
    anchor = spec.anchor
    if spec.problem is ProblemKind.MIN_COST_FLOW:
        cost = flow_cost(net, proactive)
        if anchor.mode is AnchorMode.EXACT:
            ok = cost == anchor.c_star
        else:
            ok = cost <= anchor.c_star * (1 + anchor.epsilon)
    else:
        value = flow_value(net, proactive)
        if anchor.mode is AnchorMode.EXACT:
            ok = value == anchor.c_star
        else:
            ok = value >= math.ceil(anchor.c_star * (1 - anchor.epsilon))
    if not ok:
        raise AssertionError("decoded proactive flow violates the anchor")


def _check_indicators(
    net: FlowNetwork,
    result: MilpResult,
    proactive: IntegerFlow,
    scenario_flows: dict[str, IntegerFlow],
    spec: RobustSpec,
) -> None:
    flows = [("xp", proactive)]
    flows += [(f"x_s{i}", flow) for i, flow in enumerate(scenario_flows.values())]
    for prefix, flow in flows:
        for a in range(len(net.arcs)):
            y = result.assignment[f"{prefix}_y{a}"]
            if (y == 1) != (flow[a] >= 1):
                raise AssertionError(
                    f"usage indicator {prefix}_y{a}={y} disagrees with flow {flow[a]}"
                )


def _infeasible_scenarios(net: FlowNetwork, scenarios: FlowScenarioSet) -> list[str]:
    bad = []
    for scenario in scenarios.scenarios:
        active = apply_scenario(net, scenarios.kind, scenario)
        if active.is_max_flow():
            continue  # the zero flow is always feasible under capacity scenarios
        if isinstance(solve_min_cost_flow(active), Infeasible):
            bad.append(scenario.id)
    return bad


def solve_reactive(
    net: FlowNetwork,
    nominal: IntegerFlow,
    kind: DistanceKind,
    budget: Optional[SolveBudget] = None,
    backend: str = "reference",
) -> Union[tuple[IntegerFlow, Fraction], Infeasible]:
    """Solve the repair problem on a network already carrying the scenario's
    active bounds, via the MILP route."""
    model = build_reactive_model(net, nominal, kind)
    result = solve_milp(model, budget, backend)
    if result.status is MilpStatus.BUDGET_EXCEEDED:
        raise SolveBudgetError(result)
    if result.status is MilpStatus.INFEASIBLE:
        return INFEASIBLE
    flow = _decode_flow(net, result, "xr")
    if check_feasible(net, flow):
        raise AssertionError("decoded reactive flow infeasible")
    assert result.objective_value == distance(flow, nominal, kind)
    return flow, result.objective_value
