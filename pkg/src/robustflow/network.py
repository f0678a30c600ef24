"""Core data model: flow networks, scenario sets, integer flows, and the
two solution-cost distances.

All types are immutable value objects; arcs are addressed by positional id so
parallel arcs stay individually addressable. Capacities use ``UNBOUNDED``
(``math.inf``) as a dedicated sentinel, costs are exact ``Fraction`` values and
flows are plain nonnegative integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

UNBOUNDED = math.inf

Capacity = Union[int, float]  # int, or the UNBOUNDED sentinel


class NetworkStructureError(ValueError):
    """Structural mismatch (unknown node/arc id, wrong index set).

    Distinct from infeasibility: a feasibility check on well-formed input
    returns violations, it does not raise.
    """


def _as_cost(value: Union[int, Fraction, str]) -> Fraction:
    cost = Fraction(value)
    if cost < 0:
        raise ValueError(f"arc cost must be nonnegative, got {cost}")
    return cost


def _check_capacity(value: Capacity) -> Capacity:
    if value == UNBOUNDED:
        return UNBOUNDED
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"capacity must be an int or UNBOUNDED, got {value!r}")
    if value < 0:
        raise ValueError(f"capacity must be nonnegative, got {value}")
    return value


@dataclass(frozen=True)
class Arc:
    """Directed arc with integer demand (lower bound), capacity and unit cost."""

    tail: str
    head: str
    lower: int = 0
    capacity: Capacity = UNBOUNDED
    cost: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "cost", _as_cost(self.cost))
        object.__setattr__(self, "capacity", _check_capacity(self.capacity))
        if self.lower < 0:
            raise ValueError(f"arc demand must be nonnegative, got {self.lower}")
        if self.lower > self.capacity:
            raise ValueError(
                f"arc ({self.tail},{self.head}): demand {self.lower} exceeds capacity {self.capacity}"
            )


@dataclass(frozen=True)
class FlowNetwork:
    """Digraph with per-arc demand/capacity/cost, node balances and an
    optional source/sink designation for max-flow usage."""

    nodes: tuple[str, ...]
    arcs: tuple[Arc, ...]
    balances: Mapping[str, int] = field(default_factory=dict)
    source: Optional[str] = None
    sink: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate node ids")
        balances = {v: int(b) for v, b in dict(self.balances).items()}
        for v in balances:
            if v not in node_set:
                raise NetworkStructureError(f"balance on unknown node {v!r}")
        object.__setattr__(self, "balances", balances)
        if sum(balances.values()) != 0:
            raise ValueError(f"node balances must sum to 0, got {sum(balances.values())}")
        for arc in self.arcs:
            if arc.tail not in node_set or arc.head not in node_set:
                raise NetworkStructureError(f"arc ({arc.tail},{arc.head}) references unknown node")
        if (self.source is None) != (self.sink is None):
            raise ValueError("source and sink must be designated together")
        if self.source is not None:
            if self.source not in node_set or self.sink not in node_set:
                raise NetworkStructureError("source/sink must be network nodes")
            if self.source == self.sink:
                raise ValueError("source and sink must differ")

    def balance(self, node: str) -> int:
        return self.balances.get(node, 0)

    def arc_count(self) -> int:
        return len(self.arcs)

    def out_arcs(self, node: str) -> list[int]:
        return [i for i, a in enumerate(self.arcs) if a.tail == node]

    def in_arcs(self, node: str) -> list[int]:
        return [i for i, a in enumerate(self.arcs) if a.head == node]

    def is_max_flow(self) -> bool:
        return self.source is not None

    def replace_bounds(
        self,
        lowers: Optional[Mapping[int, int]] = None,
        capacities: Optional[Mapping[int, Capacity]] = None,
    ) -> "FlowNetwork":
        """New network with per-arc bounds replaced (ids not listed keep theirs)."""
        new_arcs = []
        for i, a in enumerate(self.arcs):
            lo = lowers.get(i, a.lower) if lowers else a.lower
            up = capacities.get(i, a.capacity) if capacities else a.capacity
            new_arcs.append(Arc(a.tail, a.head, lo, up, a.cost))
        return FlowNetwork(self.nodes, tuple(new_arcs), self.balances, self.source, self.sink)


class ScenarioKind(Enum):
    DEMAND = "demand"
    CAPACITY = "capacity"


@dataclass(frozen=True)
class Scenario:
    """One discrete realization of the uncertain data.

    ``overrides`` maps arc id to the scenario value of the uncertain quantity
    (arc demand for demand uncertainty, capacity for capacity uncertainty);
    arcs not listed keep their nominal value.
    """

    id: str
    weight: Fraction
    overrides: Mapping[int, Capacity]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight", Fraction(self.weight))
        if self.weight <= 0:
            raise ValueError(f"scenario weight must be positive, got {self.weight}")
        object.__setattr__(self, "overrides", dict(self.overrides))


@dataclass(frozen=True)
class FlowScenarioSet:
    """Discrete scenario set over one uncertain quantity of a network."""

    kind: ScenarioKind
    scenarios: tuple[Scenario, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate scenario ids")

    def validate_against(self, net: FlowNetwork) -> None:
        for sc in self.scenarios:
            for arc_id, value in sc.overrides.items():
                if not 0 <= arc_id < len(net.arcs):
                    raise NetworkStructureError(
                        f"scenario {sc.id}: override on unknown arc id {arc_id}"
                    )
                if self.kind is ScenarioKind.DEMAND:
                    if value == UNBOUNDED or value < 0:
                        raise ValueError(f"scenario {sc.id}: demand override must be a nonneg int")
                    if value > net.arcs[arc_id].capacity:
                        raise ValueError(
                            f"scenario {sc.id}: demand {value} on arc {arc_id} exceeds capacity"
                        )
                else:
                    _check_capacity(value)

    def by_id(self, scenario_id: str) -> Scenario:
        for sc in self.scenarios:
            if sc.id == scenario_id:
                return sc
        raise KeyError(f"no scenario with id {scenario_id!r}")


def apply_scenario(net: FlowNetwork, kind: ScenarioKind, scenario: Scenario) -> FlowNetwork:
    """Network carrying the scenario's active bounds.

    Demand uncertainty replaces arc lower bounds; capacity uncertainty
    replaces arc capacities (and drops lower bounds that would exceed the new
    capacity -- the paper's capacity scenarios never carry demands).
    """
    if kind is ScenarioKind.DEMAND:
        return net.replace_bounds(lowers={i: int(v) for i, v in scenario.overrides.items()})
    new_caps = dict(scenario.overrides)
    lowers = {}
    for i, v in new_caps.items():
        if net.arcs[i].lower > v:
            lowers[i] = 0
    return net.replace_bounds(lowers=lowers, capacities=new_caps)


@dataclass(frozen=True)
class IntegerFlow:
    """Arc-indexed integer flow vector (one nonnegative value per arc)."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("flow values must be nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, net: FlowNetwork) -> "IntegerFlow":
        return cls((0,) * len(net.arcs))

    @classmethod
    def from_mapping(cls, net: FlowNetwork, values: Mapping[int, int]) -> "IntegerFlow":
        for arc_id in values:
            if not 0 <= arc_id < len(net.arcs):
                raise NetworkStructureError(f"flow value on unknown arc id {arc_id}")
        return cls(tuple(int(values.get(i, 0)) for i in range(len(net.arcs))))

    def __getitem__(self, arc_id: int) -> int:
        return self.values[arc_id]

    def __len__(self) -> int:
        return len(self.values)

    def support(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v > 0)


class DistanceKind(Enum):
    VALUE = "value"
    STRUCTURE = "structure"


def distance(f1: IntegerFlow, f2: IntegerFlow, kind: DistanceKind) -> int:
    """Solution cost between two flows: l1 distance for VALUE, number of
    flipped positivity indicators for STRUCTURE."""
    if len(f1) != len(f2):
        raise NetworkStructureError(
            f"flows index different arc sets ({len(f1)} vs {len(f2)} arcs)"
        )
    if kind is DistanceKind.VALUE:
        return sum(abs(a - b) for a, b in zip(f1.values, f2.values))
    return sum(1 for a, b in zip(f1.values, f2.values) if (a > 0) != (b > 0))


@dataclass(frozen=True)
class Violation:
    """One broken feasibility constraint, naming the node or arc."""

    kind: str  # "conservation" | "lower" | "capacity"
    where: str  # node id, or "arc <id> (tail,head)"
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.detail}"


def active_bounds(
    net: FlowNetwork,
    override: Optional[tuple[ScenarioKind, Scenario]] = None,
) -> list[tuple[int, Capacity]]:
    """Per-arc (lower, capacity) under the nominal or overridden bounds."""
    bounds: list[tuple[int, Capacity]] = [(a.lower, a.capacity) for a in net.arcs]
    if override is not None:
        kind, scenario = override
        for arc_id, value in scenario.overrides.items():
            lo, up = bounds[arc_id]
            if kind is ScenarioKind.DEMAND:
                bounds[arc_id] = (int(value), up)
            else:
                bounds[arc_id] = (0 if lo > value else lo, value)
    return bounds


def check_feasible(
    net: FlowNetwork,
    flow: IntegerFlow,
    override: Optional[tuple[ScenarioKind, Scenario]] = None,
) -> list[Violation]:
    """Empty list iff ``flow`` is feasible for ``net`` under the active bounds.

    Conservation is checked against node balances; for max-flow networks the
    designated source and sink are exempt (value extraction). Bound checks use
    the nominal bounds, or the scenario bounds when ``override`` is given.
    """
    if len(flow) != len(net.arcs):
        raise NetworkStructureError(
            f"flow indexes {len(flow)} arcs but network has {len(net.arcs)}"
        )
    violations: list[Violation] = []
    bounds = active_bounds(net, override)
    for i, arc in enumerate(net.arcs):
        lo, up = bounds[i]
        v = flow[i]
        where = f"arc {i} ({arc.tail},{arc.head})"
        if v < lo:
            violations.append(Violation("lower", where, f"flow {v} < demand {lo}"))
        if v > up:
            violations.append(Violation("capacity", where, f"flow {v} > capacity {up}"))
    exempt = {net.source, net.sink} if net.is_max_flow() else set()
    for node in net.nodes:
        if node in exempt:
            continue
        net_out = sum(flow[i] for i in net.out_arcs(node)) - sum(
            flow[i] for i in net.in_arcs(node)
        )
        if net_out != net.balance(node):
            violations.append(
                Violation(
                    "conservation",
                    node,
                    f"net outflow {net_out} != balance {net.balance(node)}",
                )
            )
    return violations


def flow_cost(net: FlowNetwork, flow: IntegerFlow) -> Fraction:
    """Total cost sum_a c_a * f_a."""
    if len(flow) != len(net.arcs):
        raise NetworkStructureError("flow does not index this network's arcs")
    return sum((a.cost * v for a, v in zip(net.arcs, flow.values)), Fraction(0))


def flow_value(net: FlowNetwork, flow: IntegerFlow) -> int:
    """Net outflow of the designated source."""
    if not net.is_max_flow():
        raise NetworkStructureError("flow value requires a designated source and sink")
    if len(flow) != len(net.arcs):
        raise NetworkStructureError("flow does not index this network's arcs")
    s = net.source
    return sum(flow[i] for i in net.out_arcs(s)) - sum(flow[i] for i in net.in_arcs(s))
