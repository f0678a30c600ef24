"""Generators, decoders, and verifiers for the four hardness reductions:
3-SAT into proactive min-cost flow (value distance), 3-Partition into
proactive/reactive min-cost flow (structure distance), and 3-SAT into
proactive max-flow under both distances.

Each generator returns a ReductionArtifact bundling the network, the scenario
set, the distance, c*, the yes-instance threshold, and arc role tags; the
artifact solves to exactly the threshold iff the source instance is a
yes-instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .network import (
    UNBOUNDED,
    Arc,
    DistanceKind,
    FlowNetwork,
    FlowScenarioSet,
    IntegerFlow,
    Scenario,
    ScenarioKind,
)
from .robust import AnchorMode, NominalAnchor, ProactiveSolution, ProblemKind, RobustSpec

Literal = tuple[int, bool]  # (variable index 1..n, True for the positive literal)


class ReductionInputError(ValueError):
    """The source instance violates a structural invariant."""


@dataclass(frozen=True)
class Sat3Instance:
    """A 3-SAT formula: n variables, clauses of exactly three literals
    (duplicate literals within a clause are permitted)."""

    n: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ReductionInputError("variable count must be >= 1")
        if len(self.clauses) < 1:
            raise ReductionInputError("at least one clause required")
        normalized = []
        for idx, clause in enumerate(self.clauses):
            if len(clause) != 3:
                raise ReductionInputError(f"clause {idx + 1} has {len(clause)} literals, want 3")
            for var, _ in clause:
                if not 1 <= var <= self.n:
                    raise ReductionInputError(
                        f"clause {idx + 1} references variable {var} outside 1..{self.n}"
                    )
            normalized.append(tuple((int(v), bool(p)) for v, p in clause))
        object.__setattr__(self, "clauses", tuple(normalized))

    @property
    def m(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class ThreePartitionInstance:
    """3-Partition input: 3m element sizes strictly inside (B/4, B/2) summing
    to m*B, to be split into m triples of size exactly B."""

    m: int
    B: int
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.m < 1 or self.B < 1:
            raise ReductionInputError("m and B must be positive")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if len(self.sizes) != 3 * self.m:
            raise ReductionInputError(f"expected {3 * self.m} sizes, got {len(self.sizes)}")
        if sum(self.sizes) != self.m * self.B:
            raise ReductionInputError(
                f"sizes sum to {sum(self.sizes)}, want m*B = {self.m * self.B}"
            )
        for i, s in enumerate(self.sizes):
            if not (4 * s > self.B and 2 * s < self.B):
                raise ReductionInputError(
                    f"size s({i + 1}) = {s} outside the open interval (B/4, B/2)"
                )


SourceInstance = Union[Sat3Instance, ThreePartitionInstance]


@dataclass(frozen=True)
class ReductionArtifact:
    construction: str  # sat-mcf-dval | part-mcf-dstruct | sat-mf-dval | sat-mf-dstruct
    problem: ProblemKind
    network: FlowNetwork
    scenarios: FlowScenarioSet
    distance: DistanceKind
    c_star: Fraction
    yes_threshold: int
    roles: Mapping[str, tuple[int, ...]]
    source: SourceInstance

    def robust_spec(self) -> RobustSpec:
        return RobustSpec(
            self.problem,
            self.distance,
            self.scenarios,
            NominalAnchor(AnchorMode.EXACT, Fraction(0), self.c_star),
        )

    def arc_id(self, tail: str, head: str) -> int:
        for i, a in enumerate(self.network.arcs):
            if a.tail == tail and a.head == head:
                return i
        raise KeyError(f"no arc ({tail},{head})")


def _literal_node(var: int, positive: bool) -> str:
    return f"l{var}" if positive else f"nl{var}"


def reduce_sat_to_mcf_dval(sat: Sat3Instance) -> ReductionArtifact:
    """Min-cost flow instance with one demand scenario per clause; proactive
    value-distance optimum 4mn iff the formula is satisfiable."""
    n, m = sat.n, sat.m
    nodes = ["s", "t"]
    for i in range(1, n + 1):
        nodes += [f"x{i}", f"l{i}", f"nl{i}"]
    nodes += [f"C{p}" for p in range(1, m + 1)]
    cap = m
    arcs: list[Arc] = []
    roles: dict[str, list[int]] = {k: [] for k in ("A_sl", "A_lx", "A_lC", "A_xt", "A_Ct", "A_st")}
    for i in range(1, n + 1):
        for positive in (True, False):
            roles["A_sl"].append(len(arcs))
            arcs.append(Arc("s", _literal_node(i, positive), 0, cap, Fraction(0)))
    for i in range(1, n + 1):
        for positive in (True, False):
            roles["A_lx"].append(len(arcs))
            arcs.append(Arc(_literal_node(i, positive), f"x{i}", 0, cap, Fraction(0)))
    for p, clause in enumerate(sat.clauses, start=1):
        for var, positive in clause:
            roles["A_lC"].append(len(arcs))
            arcs.append(Arc(_literal_node(var, positive), f"C{p}", 0, cap, Fraction(0)))
    for i in range(1, n + 1):
        roles["A_xt"].append(len(arcs))
        arcs.append(Arc(f"x{i}", "t", 1, cap, Fraction(0)))
    for p in range(1, m + 1):
        roles["A_Ct"].append(len(arcs))
        arcs.append(Arc(f"C{p}", "t", 0, cap, Fraction(0)))
    roles["A_st"].append(len(arcs))
    # the scenario demand n-1 must fit: the paper's uniform capacity m is
    # widened on (s,t) only when n-1 exceeds it
    arcs.append(Arc("s", "t", 0, max(cap, n - 1), Fraction(0)))
    net = FlowNetwork(tuple(nodes), tuple(arcs), {"s": n, "t": -n})

    st_arc = roles["A_st"][0]
    scenarios = []
    for p in range(1, m + 1):
        overrides: dict[int, int] = {a: 0 for a in roles["A_xt"]}
        overrides[st_arc] = n - 1
        overrides[roles["A_Ct"][p - 1]] = 1
        scenarios.append(Scenario(f"xi{p}", Fraction(1), overrides))
    scenario_set = FlowScenarioSet(ScenarioKind.DEMAND, tuple(scenarios))
    scenario_set.validate_against(net)
    return ReductionArtifact(
        "sat-mcf-dval",
        ProblemKind.MIN_COST_FLOW,
        net,
        scenario_set,
        DistanceKind.VALUE,
        Fraction(0),
        4 * m * n,
        {k: tuple(v) for k, v in roles.items()},
        sat,
    )


def reduce_partition_to_mcf_dstruct(part: ThreePartitionInstance) -> ReductionArtifact:
    """Min-cost flow instance with a single demand scenario; proactive (and
    reactive, with the empty nominal flow fixed) structure-distance optimum
    7m iff a 3-partition exists."""
    m, B = part.m, part.B
    elements = range(1, 3 * m + 1)
    subsets = range(1, m + 1)
    nodes = ["alpha"] + [f"V{i}" for i in elements] + [f"E{j}" for j in subsets]
    arcs: list[Arc] = []
    roles: dict[str, list[int]] = {"A_aV": [], "A_VE": [], "A_Ea": []}
    for i in elements:
        roles["A_aV"].append(len(arcs))
        arcs.append(Arc("alpha", f"V{i}", 0, B, Fraction(1)))
    for i in elements:
        for j in subsets:
            roles["A_VE"].append(len(arcs))
            arcs.append(Arc(f"V{i}", f"E{j}", 0, B, Fraction(1)))
    for j in subsets:
        roles["A_Ea"].append(len(arcs))
        arcs.append(Arc(f"E{j}", "alpha", 0, B, Fraction(1)))
    net = FlowNetwork(tuple(nodes), tuple(arcs), {})
    overrides = {roles["A_aV"][i - 1]: part.sizes[i - 1] for i in elements}
    scenario_set = FlowScenarioSet(
        ScenarioKind.DEMAND, (Scenario("xi", Fraction(1), overrides),)
    )
    scenario_set.validate_against(net)
    return ReductionArtifact(
        "part-mcf-dstruct",
        ProblemKind.MIN_COST_FLOW,
        net,
        scenario_set,
        DistanceKind.STRUCTURE,
        Fraction(0),
        7 * m,
        {k: tuple(v) for k, v in roles.items()},
        part,
    )


def reduce_sat_to_mf_dval(sat: Sat3Instance) -> ReductionArtifact:
    """Max-flow instance with one capacity scenario per clause; proactive
    value-distance optimum m(3n+2m-1) iff the formula is satisfiable."""
    n, m = sat.n, sat.m
    nodes = ["s", "t"]
    for i in range(1, n + 1):
        nodes += [f"x{i}", f"l{i}", f"nl{i}"]
    nodes += [f"C{p}" for p in range(1, m + 1)]
    arcs: list[Arc] = []
    roles: dict[str, list[int]] = {k: [] for k in ("A_sl", "A_lx", "A_lC", "A_xt", "A_Ct", "A_sC")}
    for i in range(1, n + 1):
        for positive in (True, False):
            roles["A_sl"].append(len(arcs))
            arcs.append(Arc("s", _literal_node(i, positive), 0, UNBOUNDED, Fraction(0)))
    for i in range(1, n + 1):
        for positive in (True, False):
            roles["A_lx"].append(len(arcs))
            arcs.append(Arc(_literal_node(i, positive), f"x{i}", 0, UNBOUNDED, Fraction(0)))
    for p, clause in enumerate(sat.clauses, start=1):
        for var, positive in clause:
            roles["A_lC"].append(len(arcs))
            arcs.append(Arc(_literal_node(var, positive), f"C{p}", 0, 0, Fraction(0)))
    for i in range(1, n + 1):
        roles["A_xt"].append(len(arcs))
        arcs.append(Arc(f"x{i}", "t", 0, 1, Fraction(0)))
    for p in range(1, m + 1):
        roles["A_Ct"].append(len(arcs))
        arcs.append(Arc(f"C{p}", "t", 0, 1, Fraction(0)))
    for p in range(1, m + 1):
        roles["A_sC"].append(len(arcs))
        arcs.append(Arc("s", f"C{p}", 0, UNBOUNDED, Fraction(0)))
    net = FlowNetwork(tuple(nodes), tuple(arcs), {}, source="s", sink="t")

    scenarios = []
    for p in range(1, m + 1):
        overrides: dict[int, Union[int, float]] = {a: 0 for a in roles["A_xt"]}
        overrides.update({a: 0 for a in roles["A_sC"]})
        for q in range(1, m + 1):
            overrides[roles["A_Ct"][q - 1]] = 1 if q == p else 0
        overrides.update({a: UNBOUNDED for a in roles["A_lC"]})
        scenarios.append(Scenario(f"xi{p}", Fraction(1), overrides))
    scenario_set = FlowScenarioSet(ScenarioKind.CAPACITY, tuple(scenarios))
    scenario_set.validate_against(net)
    return ReductionArtifact(
        "sat-mf-dval",
        ProblemKind.MAX_FLOW,
        net,
        scenario_set,
        DistanceKind.VALUE,
        Fraction(n + m),
        m * (3 * n + 2 * m - 1),
        {k: tuple(v) for k, v in roles.items()},
        sat,
    )


def reduce_sat_to_mf_dstruct(sat: Sat3Instance) -> ReductionArtifact:
    """Max-flow instance with a single capacity scenario; proactive (and
    reactive, with the unique nominal flow fixed) structure-distance optimum
    3n+2m iff the formula is satisfiable."""
    n, m = sat.n, sat.m
    nodes = ["s", "t"]
    for i in range(1, n + 1):
        nodes += [f"l{i}", f"nl{i}"]
    for i in range(1, n + 1):
        nodes += [f"x1_{i}", f"x2_{i}", f"x3_{i}"]
    for p in range(1, m + 1):
        nodes += [f"C1_{p}", f"C2_{p}"]
    arcs: list[Arc] = []
    roles: dict[str, list[int]] = {
        k: [] for k in ("A_sl", "A_sx", "A_lx", "A_x", "A_xt", "A_sC", "A_lC", "A_C", "A_Ct")
    }
    scenario_caps: dict[int, Union[int, float]] = {}

    def add(role: str, tail: str, head: str, cap_nominal: Union[int, float],
            cap_scenario: Union[int, float]) -> None:
        idx = len(arcs)
        roles[role].append(idx)
        arcs.append(Arc(tail, head, 0, cap_nominal, Fraction(0)))
        if cap_scenario != cap_nominal:
            scenario_caps[idx] = cap_scenario

    for i in range(1, n + 1):
        for positive in (True, False):
            add("A_sl", "s", _literal_node(i, positive), 0, m + 1)
    for i in range(1, n + 1):
        add("A_sx", "s", f"x1_{i}", 1, 0)
    for i in range(1, n + 1):
        for positive in (True, False):
            add("A_lx", _literal_node(i, positive), f"x1_{i}", 0, 1)
    for i in range(1, n + 1):
        add("A_x", f"x1_{i}", f"x2_{i}", 1, 1)
        add("A_x", f"x2_{i}", f"x3_{i}", 1, 1)
    for i in range(1, n + 1):
        add("A_xt", f"x3_{i}", "t", 1, 1)
    for p in range(1, m + 1):
        add("A_sC", "s", f"C1_{p}", 1, 0)
    for p, clause in enumerate(sat.clauses, start=1):
        for var, positive in clause:
            add("A_lC", _literal_node(var, positive), f"C1_{p}", 0, 1)
    for p in range(1, m + 1):
        add("A_C", f"C1_{p}", f"C2_{p}", 1, 1)
    for p in range(1, m + 1):
        add("A_Ct", f"C2_{p}", "t", 1, 1)
    net = FlowNetwork(tuple(nodes), tuple(arcs), {}, source="s", sink="t")
    scenario_set = FlowScenarioSet(
        ScenarioKind.CAPACITY, (Scenario("xi", Fraction(1), scenario_caps),)
    )
    scenario_set.validate_against(net)
    return ReductionArtifact(
        "sat-mf-dstruct",
        ProblemKind.MAX_FLOW,
        net,
        scenario_set,
        DistanceKind.STRUCTURE,
        Fraction(n + m),
        3 * n + 2 * m,
        {k: tuple(v) for k, v in roles.items()},
        sat,
    )


REDUCERS = {
    "sat-mcf-dval": reduce_sat_to_mcf_dval,
    "part-mcf-dstruct": reduce_partition_to_mcf_dstruct,
    "sat-mf-dval": reduce_sat_to_mf_dval,
    "sat-mf-dstruct": reduce_sat_to_mf_dstruct,
}


# -- certificates --------------------------------------------------------------


SatAssignment = dict[int, bool]
Partition = list[set[int]]


def decode(
    artifact: ReductionArtifact, solution: ProactiveSolution
) -> Optional[Union[SatAssignment, Partition]]:
    """Extract the source-problem certificate from a threshold-achieving
    solution; refuses (returns None) when the threshold is not met."""
    if solution.objective != artifact.yes_threshold:
        return None
    if isinstance(artifact.source, ThreePartitionInstance):
        part = artifact.source
        scenario_flow = next(iter(solution.scenario_flows.values()))
        groups: Partition = [set() for _ in range(part.m)]
        for i in range(1, 3 * part.m + 1):
            hits = [
                j
                for j in range(1, part.m + 1)
                if scenario_flow[artifact.arc_id(f"V{i}", f"E{j}")] > 0
            ]
            if len(hits) != 1:
                return None
            groups[hits[0] - 1].add(i)
        return groups
    sat = artifact.source
    if artifact.construction == "sat-mf-dstruct":
        flow = next(iter(solution.scenario_flows.values()))
    else:
        flow = solution.proactive
    return {
        i: flow[artifact.arc_id("s", f"l{i}")] > 0
        for i in range(1, sat.n + 1)
    }


def verify_sat(sat: Sat3Instance, assignment: Mapping[int, bool]) -> bool:
    for clause in sat.clauses:
        if not any(assignment[var] == positive for var, positive in clause):
            return False
    return True


def verify_partition(part: ThreePartitionInstance, groups: Sequence[set[int]]) -> bool:
    if len(groups) != part.m:
        return False
    seen: set[int] = set()
    for group in groups:
        if sum(part.sizes[i - 1] for i in group) != part.B:
            return False
        seen |= set(group)
    return seen == set(range(1, 3 * part.m + 1))


def brute_force_sat(sat: Sat3Instance, budget: int = 1 << 22) -> bool:
    if 2**sat.n > budget:
        raise ValueError(f"2^{sat.n} assignments exceed the budget {budget}")
    for bits in range(2**sat.n):
        assignment = {i: bool(bits >> (i - 1) & 1) for i in range(1, sat.n + 1)}
        if verify_sat(sat, assignment):
            return True
    return False


def brute_force_partition(part: ThreePartitionInstance, budget: int = 10**7) -> bool:
    if part.m ** (3 * part.m) > budget:
        raise ValueError("assignment space exceeds the budget")
    sums = [0] * part.m
    counts = [0] * part.m

    def place(i: int) -> bool:
        if i == 3 * part.m:
            return all(s == part.B for s in sums)
        size = part.sizes[i]
        tried: set[int] = set()
        for j in range(part.m):
            key = (sums[j], counts[j])
            if key in tried:
                continue
            tried.add(key)
            if counts[j] == 3 or sums[j] + size > part.B:
                continue
            sums[j] += size
            counts[j] += 1
            if place(i + 1):
                sums[j] -= size
                counts[j] -= 1
                return True
            sums[j] -= size
            counts[j] -= 1
        return False

    return place(0)


def all_sign_patterns_formula(k: int = 3) -> Sat3Instance:
    """The canonical unsatisfiable formula on k=3 variables: one clause per
    sign pattern, so every assignment falsifies exactly one clause."""
    if k != 3:
        raise ValueError("the all-patterns fixture is defined for 3 variables")
    clauses = []
    for signs in itertools.product((True, False), repeat=3):
        clauses.append(tuple((i + 1, signs[i]) for i in range(3)))
    return Sat3Instance(3, tuple(clauses))


# -- reference flows used by the proofs' figures -------------------------------


def satisfying_nominal_flow(
    artifact: ReductionArtifact, assignment: Mapping[int, bool]
) -> IntegerFlow:
    """The nominal flow induced by a truth assignment: one unit per variable
    through its chosen literal (plus, for max-flow artifacts, one unit per
    clause path)."""
    sat = artifact.source
    if not isinstance(sat, Sat3Instance):
        raise ValueError("nominal flow templates exist for SAT artifacts only")
    values = [0] * len(artifact.network.arcs)
    if artifact.construction == "sat-mcf-dval":
        for i in range(1, sat.n + 1):
            lit = _literal_node(i, bool(assignment[i]))
            values[artifact.arc_id("s", lit)] = 1
            values[artifact.arc_id(lit, f"x{i}")] = 1
            values[artifact.arc_id(f"x{i}", "t")] = 1
    elif artifact.construction == "sat-mf-dval":
        for i in range(1, sat.n + 1):
            lit = _literal_node(i, bool(assignment[i]))
            values[artifact.arc_id("s", lit)] = 1
            values[artifact.arc_id(lit, f"x{i}")] = 1
            values[artifact.arc_id(f"x{i}", "t")] = 1
        for p in range(1, sat.m + 1):
            values[artifact.arc_id("s", f"C{p}")] = 1
            values[artifact.arc_id(f"C{p}", "t")] = 1
    else:
        raise ValueError(f"no assignment-induced nominal flow for {artifact.construction}")
    return IntegerFlow(tuple(values))


def unique_nominal_max_flow(artifact: ReductionArtifact) -> IntegerFlow:
    """The unique maximum nominal flow of the structure-distance max-flow
    construction: one unit per variable chain and per clause chain."""
    if artifact.construction != "sat-mf-dstruct":
        raise ValueError("unique nominal flow applies to sat-mf-dstruct artifacts")
    sat = artifact.source
    values = [0] * len(artifact.network.arcs)
    for i in range(1, sat.n + 1):
        values[artifact.arc_id("s", f"x1_{i}")] = 1
        values[artifact.arc_id(f"x1_{i}", f"x2_{i}")] = 1
        values[artifact.arc_id(f"x2_{i}", f"x3_{i}")] = 1
        values[artifact.arc_id(f"x3_{i}", "t")] = 1
    for p in range(1, sat.m + 1):
        values[artifact.arc_id("s", f"C1_{p}")] = 1
        values[artifact.arc_id(f"C1_{p}", f"C2_{p}")] = 1
        values[artifact.arc_id(f"C2_{p}", "t")] = 1
    return IntegerFlow(tuple(values))
