"""Exact integer min-cost flow engine.

Successive shortest augmenting paths with node potentials over a residual
graph: lower bounds are eliminated first, negative-cost arcs are absorbed by
saturation, initial potentials come from a label-correcting pass, and every
subsequent shortest path runs on nonnegative reduced costs. All arithmetic is
integer (rational costs are rescaled by their common denominator), so optima
are exact.

Also hosts the convex-cost transformation that solves the reactive
value-distance problems in polynomial time, and the exhaustive-enumeration
oracle used by the test suite.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Optional, Sequence, Union

from .network import (
    UNBOUNDED,
    Arc,
    DistanceKind,
    FlowNetwork,
    IntegerFlow,
    check_feasible,
    distance,
    flow_cost,
    flow_value,
)

log = logging.getLogger(__name__)


class Infeasible:
    """Sentinel value: the instance admits no feasible flow (not a fault)."""

    _instance: Optional["Infeasible"] = None

    def __new__(cls) -> "Infeasible":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFEASIBLE"


INFEASIBLE = Infeasible()

FlowOrInfeasible = Union[IntegerFlow, Infeasible]


class EnumerationBudgetError(RuntimeError):
    """Brute-force enumeration would exceed the configured budget."""


SegmentRole = Literal["baseline", "up", "down"]


@dataclass(frozen=True)
class TransformedInstance:
    """A zero-lower-bound network equivalent to some original instance.

    ``back_map[k]`` names the original arc and segment role of transformed arc
    ``k``; ``offset_cost`` is added to any transformed flow's cost to recover
    the original objective.
    """

    base: FlowNetwork
    offset_cost: Fraction
    back_map: tuple[tuple[int, SegmentRole], ...]


def circulation_bound(net: FlowNetwork) -> int:
    """Safe finite cap for unbounded capacities: sum of positive balances
    plus all arc demands. Preserves at least one optimum (costs are >= 0)."""
    return sum(max(b, 0) for b in net.balances.values()) + sum(a.lower for a in net.arcs)


def eliminate_lower_bounds(net: FlowNetwork) -> TransformedInstance:
    """Standard reduction: arc demands folded into node balances.

    Each arc with demand l > 0 becomes an arc with capacity u - l; balances
    shift by -l at the tail and +l at the head; a flow f' on the transform maps
    back to f = f' + l with cost(f) = cost(f') + offset.
    """
    balances = {v: net.balance(v) for v in net.nodes}
    arcs = []
    offset = Fraction(0)
    for a in net.arcs:
        cap = a.capacity if a.capacity == UNBOUNDED else a.capacity - a.lower
        arcs.append(Arc(a.tail, a.head, 0, cap, a.cost))
        if a.lower:
            balances[a.tail] -= a.lower
            balances[a.head] += a.lower
            offset += a.cost * a.lower
    base = FlowNetwork(net.nodes, tuple(arcs), balances, net.source, net.sink)
    back_map = tuple((i, "baseline") for i in range(len(net.arcs)))
    return TransformedInstance(base, offset, back_map)


def _integer_costs(costs: Sequence[Fraction]) -> list[int]:
    scale = math.lcm(*(c.denominator for c in costs)) if costs else 1
    return [int(c * scale) for c in costs]


def _ssp(
    num_nodes: int,
    arcs: Sequence[tuple[int, int, int, int]],
    excess: list[int],
) -> Optional[list[int]]:
    """Min-cost routing of ``excess`` over arcs (tail, head, cap, cost).

    Requires finite caps and zero lower bounds. Returns per-arc flows, or
    None when the excess cannot be routed.
    """
    m = len(arcs)
    # Residual arcs 2k / 2k+1 are the forward/backward sides of arc k.
    to = [0] * (2 * m)
    rescap = [0] * (2 * m)
    cost = [0] * (2 * m)
    adj: list[list[int]] = [[] for _ in range(num_nodes)]
    excess = list(excess)
    for k, (tail, head, cap, c) in enumerate(arcs):
        if cap < 0:
            raise ValueError("negative capacity")
        flow0 = 0
        if c < 0 and cap > 0:  # absorb negative costs by saturation
            flow0 = cap
            excess[tail] -= cap
            excess[head] += cap
        to[2 * k], to[2 * k + 1] = head, tail
        rescap[2 * k], rescap[2 * k + 1] = cap - flow0, flow0
        cost[2 * k], cost[2 * k + 1] = c, -c
        adj[tail].append(2 * k)
        adj[head].append(2 * k + 1)

    # Label-correcting pass for initial potentials (absorbs any remaining
    # negative costs; a no-op when all residual costs are nonnegative).
    pot = [0] * num_nodes
    for _ in range(num_nodes):
        changed = False
        for r in range(2 * m):
            if rescap[r] > 0:
                tail = to[r ^ 1]
                if pot[tail] + cost[r] < pot[to[r]]:
                    pot[to[r]] = pot[tail] + cost[r]
                    changed = True
        if not changed:
            break
    else:
        raise ArithmeticError("negative cycle in residual costs")

    inf = math.inf
    while True:
        src = next((v for v in range(num_nodes) if excess[v] > 0), None)
        if src is None:
            break
        dist: list[float] = [inf] * num_nodes
        prev_arc = [-1] * num_nodes
        dist[src] = 0
        heap: list[tuple[int, int]] = [(0, src)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for r in adj[v]:
                if rescap[r] <= 0:
                    continue
                w = to[r]
                nd = d + cost[r] + pot[v] - pot[w]
                if nd < dist[w]:
                    dist[w] = nd
                    prev_arc[w] = r
                    heapq.heappush(heap, (nd, w))
        sink = None
        for v in range(num_nodes):
            if excess[v] < 0 and dist[v] < inf:
                if sink is None or dist[v] < dist[sink]:
                    sink = v
        if sink is None:
            return None
        d_sink = dist[sink]
        for v in range(num_nodes):
            pot[v] += min(dist[v], d_sink)
        # bottleneck along the path
        delta = min(excess[src], -excess[sink])
        v = sink
        while v != src:
            r = prev_arc[v]
            delta = min(delta, rescap[r])
            v = to[r ^ 1]
        v = sink
        while v != src:
            r = prev_arc[v]
            rescap[r] -= delta
            rescap[r ^ 1] += delta
            v = to[r ^ 1]
        excess[src] -= delta
        excess[sink] += delta

    return [rescap[2 * k + 1] for k in range(m)]


def solve_min_cost_flow(net: FlowNetwork, trace: bool = False) -> FlowOrInfeasible:
    """Feasible integer flow of minimal cost, or INFEASIBLE.

    Unbounded capacities are capped, for solving only, at the circulation
    bound; with nonnegative costs this cannot change the optimum.
    """
    transform = eliminate_lower_bounds(net)
    base = transform.base
    cap_bound = circulation_bound(net)
    index = {v: i for i, v in enumerate(base.nodes)}
    costs = _integer_costs([a.cost for a in base.arcs])
    arcs = []
    for a, c in zip(base.arcs, costs):
        cap = cap_bound if a.capacity == UNBOUNDED else int(min(a.capacity, cap_bound))
        arcs.append((index[a.tail], index[a.head], cap, c))
    excess = [base.balance(v) for v in base.nodes]
    flows = _ssp(len(base.nodes), arcs, excess)
    if flows is None:
        return INFEASIBLE
    values = [flows[i] + net.arcs[i].lower for i in range(len(net.arcs))]
    flow = IntegerFlow(tuple(values))
    if trace:
        log.info("min-cost flow solved: cost=%s", flow_cost(net, flow))
    assert not check_feasible(net, flow)
    return flow


def _unbounded_path_exists(net: FlowNetwork) -> bool:
    reachable = {net.source}
    frontier = [net.source]
    while frontier:
        v = frontier.pop()
        for a in net.arcs:
            if a.tail == v and a.capacity == UNBOUNDED and a.head not in reachable:
                reachable.add(a.head)
                frontier.append(a.head)
    return net.sink in reachable


def solve_max_flow(net: FlowNetwork) -> IntegerFlow:
    """Maximum-value integer flow, via min-cost flow on the circulation with
    a -1-cost return arc from sink to source."""
    if not net.is_max_flow():
        raise ValueError("solve_max_flow requires a designated source and sink")
    if any(net.balance(v) != 0 for v in net.nodes):
        raise ValueError("max-flow networks must have zero node balances")
    if any(a.lower != 0 for a in net.arcs):
        raise ValueError("max-flow networks must have zero arc demands")
    if _unbounded_path_exists(net):
        raise ValueError("max flow is unbounded (source-sink path of unbounded arcs)")
    finite_total = sum(a.capacity for a in net.arcs if a.capacity != UNBOUNDED)
    value_bound = int(finite_total)
    index = {v: i for i, v in enumerate(net.nodes)}
    arcs = []
    for a in net.arcs:
        cap = value_bound if a.capacity == UNBOUNDED else int(a.capacity)
        arcs.append((index[a.tail], index[a.head], cap, 0))
    arcs.append((index[net.sink], index[net.source], value_bound, -1))
    excess = [0] * len(net.nodes)
    flows = _ssp(len(net.nodes), arcs, excess)
    assert flows is not None  # zero flow is always feasible here
    flow = IntegerFlow(tuple(flows[: len(net.arcs)]))
    assert not check_feasible(net, flow)
    return flow


def reactive_value_distance(
    net: FlowNetwork, nominal: IntegerFlow
) -> Union[tuple[IntegerFlow, int], Infeasible]:
    """Feasible flow minimizing the value distance to ``nominal``.

    ``net`` must already carry the scenario's active bounds. Each arc's cost
    becomes the two-segment convex function |f - nominal|: a baseline at
    clamp(nominal, l, u) plus unit-cost "up" and "down" segment arcs; the
    forced deviation where the baseline cannot reach the nominal value is
    charged through the offset. Solved as a plain min-cost flow.
    """
    if len(nominal) != len(net.arcs):
        raise ValueError("nominal flow does not index this network's arcs")
    index = {v: i for i, v in enumerate(net.nodes)}
    n = len(net.nodes)
    balances = {v: net.balance(v) for v in net.nodes}
    seg_arcs: list[tuple[int, int, Union[int, float], int]] = []
    back: list[tuple[int, SegmentRole]] = []
    offset = 0
    for i, a in enumerate(net.arcs):
        target = nominal[i]
        base = min(max(target, a.lower), a.capacity)
        base = int(base)
        offset += abs(target - base)
        balances[a.tail] -= base
        balances[a.head] += base
        up_cap = a.capacity if a.capacity == UNBOUNDED else a.capacity - base
        seg_arcs.append((index[a.tail], index[a.head], up_cap, 1))
        back.append((i, "up"))
        seg_arcs.append((index[a.head], index[a.tail], base - a.lower, 1))
        back.append((i, "down"))
    if net.is_max_flow():
        # Scenario feasibility for max-flow leaves the flow value free: close
        # the circulation with free return arcs in both directions.
        s, t = index[net.source], index[net.sink]
        seg_arcs.append((t, s, UNBOUNDED, 0))
        back.append((-1, "baseline"))
        seg_arcs.append((s, t, UNBOUNDED, 0))
        back.append((-1, "baseline"))
    excess = [balances[v] for v in net.nodes]
    cap_bound = sum(max(e, 0) for e in excess)
    arcs = [
        (tail, head, cap_bound if cap == UNBOUNDED else int(min(cap, cap_bound)), c)
        for tail, head, cap, c in seg_arcs
    ]
    flows = _ssp(n, arcs, excess)
    if flows is None:
        return INFEASIBLE
    values = list(nominal.values)
    for k, (orig, role) in enumerate(back):
        if orig < 0:
            continue
        if role == "up":
            base = min(max(nominal[orig], net.arcs[orig].lower), net.arcs[orig].capacity)
            values[orig] = int(base) + flows[k]
        elif role == "down":
            values[orig] -= flows[k]
    flow = IntegerFlow(tuple(values))
    assert not check_feasible(net, flow)
    cost = distance(flow, nominal, DistanceKind.VALUE)
    assert cost == offset + sum(flows[k] for k in range(len(back)) if back[k][0] >= 0)
    return flow, cost


def _enumeration_ranges(net: FlowNetwork) -> list[range]:
    bound = circulation_bound(net)
    ranges = []
    for a in net.arcs:
        hi = bound if a.capacity == UNBOUNDED else int(a.capacity)
        ranges.append(range(a.lower, hi + 1))
    return ranges


def brute_force_flows(
    net: FlowNetwork,
    objective: Literal["cost", "value", "distance"],
    target: Optional[IntegerFlow] = None,
    kind: Optional[DistanceKind] = None,
    budget: int = 1_000_000,
) -> Optional[tuple[IntegerFlow, Union[Fraction, int]]]:
    """Exhaustive-enumeration oracle: the optimal feasible flow and its
    objective, or None when no feasible flow exists.

    Enumerates arc-value tuples in lexicographic order (so ties keep the
    lexicographically smallest flow). For STRUCTURE-distance objectives whose
    value space exceeds the budget, falls back to enumerating arc supports
    exhaustively, checking each support's feasibility with the flow solver --
    exact, but no longer independent of the solver itself.
    """
    if objective == "distance":
        if target is None or kind is None:
            raise ValueError("distance objective needs a target flow and a distance kind")
    if objective == "value" and not net.is_max_flow():
        raise ValueError("value objective requires a designated source and sink")

    ranges = _enumeration_ranges(net)
    combos = math.prod(len(r) for r in ranges)
    if combos > budget:
        if objective == "distance" and kind is DistanceKind.STRUCTURE:
            return _brute_force_supports(net, target, budget)
        raise EnumerationBudgetError(
            f"{combos} flow combinations exceed the enumeration budget {budget}"
        )

    best: Optional[tuple[IntegerFlow, Union[Fraction, int]]] = None
    sense = -1 if objective == "value" else 1
    for values in itertools.product(*ranges):
        flow = IntegerFlow(values)
        if check_feasible(net, flow):
            continue
        if objective == "cost":
            score: Union[Fraction, int] = flow_cost(net, flow)
        elif objective == "value":
            score = flow_value(net, flow)
        else:
            score = distance(flow, target, kind)
        if best is None or sense * score < sense * best[1]:
            best = (flow, score)
    return best


def _brute_force_supports(
    net: FlowNetwork, target: IntegerFlow, budget: int
) -> Optional[tuple[IntegerFlow, int]]:
    """Minimum structure distance by exhaustive support enumeration.

    A support S is realizable iff some feasible flow is positive exactly on S;
    checked by forcing lower bound >= 1 on S and capacity 0 elsewhere.
    """
    forced = [i for i, a in enumerate(net.arcs) if a.lower > 0]
    free = [i for i, a in enumerate(net.arcs) if a.lower == 0 and a.capacity != 0]
    if 2 ** len(free) > budget:
        raise EnumerationBudgetError(
            f"2^{len(free)} supports exceed the enumeration budget {budget}"
        )
    target_support = target.support()
    best: Optional[tuple[IntegerFlow, int]] = None
    for bits in range(2 ** len(free)):
        support = set(forced)
        for j, arc_id in enumerate(free):
            if bits >> j & 1:
                support.add(arc_id)
        score = len(support.symmetric_difference(target_support))
        if best is not None and score >= best[1]:
            continue
        lowers = {i: max(net.arcs[i].lower, 1) for i in support}
        caps = {i: 0 for i in range(len(net.arcs)) if i not in support}
        restricted = net.replace_bounds(lowers=lowers, capacities=caps)
        witness = _feasible_flow(restricted)
        if witness is None:
            continue
        best = (witness, score)
    return best


def _feasible_flow(net: FlowNetwork) -> Optional[IntegerFlow]:
    """Any feasible flow of the network, or None.

    For max-flow networks the source/sink imbalance is free; closed with
    unbounded zero-cost return arcs before solving.
    """
    if not net.is_max_flow():
        result = solve_min_cost_flow(net)
        return None if isinstance(result, Infeasible) else result
    arcs = list(net.arcs) + [
        Arc(net.sink, net.source, 0, UNBOUNDED, Fraction(0)),
        Arc(net.source, net.sink, 0, UNBOUNDED, Fraction(0)),
    ]
    closed = FlowNetwork(net.nodes, tuple(arcs), net.balances)
    result = solve_min_cost_flow(closed)
    if isinstance(result, Infeasible):
        return None
    return IntegerFlow(result.values[: len(net.arcs)])
