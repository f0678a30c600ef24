"""Language-neutral linear-integer model representation and a reference exact
solver behind a pluggable backend contract.

The reference solver pairs the bounded-variable simplex with best-bound branch
and bound. Floating pivots are used for speed; every incumbent is rounded
(integer feasibility tolerance 1e-6), re-verified exactly in rational
arithmetic (constraint tolerance 1e-9), and the reported objective is
recomputed exactly from the verified assignment.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Optional, Protocol, Union

import numpy as np

from .simplex import SimplexEngine, solve_bounded_lp

Bound = Union[Fraction, float]  # Fraction, or +-math.inf

_INT_TOL = 1e-6
_FEAS_TOL = Fraction(1, 10**9)
_PRUNE_EPS = 1e-6


class VarKind(Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Relation(Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Sense(Enum):
    MIN = "min"
    MAX = "max"


class MilpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    BUDGET_EXCEEDED = "budget_exceeded"


class ModelError(ValueError):
    """Malformed model (duplicate names, unknown variables, bad bounds)."""


class BackendError(RuntimeError):
    """Unknown or unavailable solver backend; never silently substituted."""


class MilpNumericalError(ArithmeticError):
    """An incumbent failed exact re-verification."""


def _as_bound(value: Bound) -> Bound:
    if isinstance(value, float):
        if math.isinf(value):
            return value
        raise ModelError(f"bounds must be Fraction/int or infinite, got float {value!r}")
    return Fraction(value)


@dataclass(frozen=True)
class Variable:
    name: str
    lb: Bound = Fraction(0)
    ub: Bound = math.inf
    kind: VarKind = VarKind.CONTINUOUS

    def __post_init__(self) -> None:
        object.__setattr__(self, "lb", _as_bound(self.lb))
        object.__setattr__(self, "ub", _as_bound(self.ub))
        if self.lb > self.ub:
            raise ModelError(f"variable {self.name}: lower bound {self.lb} > upper {self.ub}")
        if self.kind is VarKind.BINARY and (self.lb < 0 or self.ub > 1):
            raise ModelError(f"binary variable {self.name} must have bounds within [0, 1]")


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, Fraction]
    relation: Relation
    rhs: Fraction
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coeffs", {k: Fraction(v) for k, v in dict(self.coeffs).items() if v != 0}
        )
        object.__setattr__(self, "rhs", Fraction(self.rhs))


@dataclass(frozen=True)
class Objective:
    sense: Sense
    coeffs: Mapping[str, Fraction]
    constant: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", {k: Fraction(v) for k, v in dict(self.coeffs).items()})
        object.__setattr__(self, "constant", Fraction(self.constant))


class MilpModel:
    """Mutable builder + container for one linear-integer model."""

    def __init__(self, name: str = "model") -> None:
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective = Objective(Sense.MIN, {})
        self._index: dict[str, int] = {}

    def add_variable(
        self,
        name: str,
        lb: Bound = Fraction(0),
        ub: Bound = math.inf,
        kind: VarKind = VarKind.CONTINUOUS,
    ) -> str:
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY and ub == math.inf:
            ub = Fraction(1)
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, lb, ub, kind))
        return name

    def add_constraint(
        self,
        coeffs: Mapping[str, Fraction],
        relation: Relation,
        rhs: Fraction,
        name: str = "",
    ) -> None:
        for var in coeffs:
            if var not in self._index:
                raise ModelError(f"constraint references undeclared variable {var!r}")
        self.constraints.append(Constraint(coeffs, relation, Fraction(rhs), name))

    def set_objective(
        self,
        sense: Sense,
        coeffs: Mapping[str, Fraction],
        constant: Fraction = Fraction(0),
    ) -> None:
        for var in coeffs:
            if var not in self._index:
                raise ModelError(f"objective references undeclared variable {var!r}")
        self.objective = Objective(sense, coeffs, constant)

    def variable(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]


@dataclass
class MilpResult:
    status: MilpStatus
    assignment: dict[str, Fraction] = field(default_factory=dict)
    objective_value: Optional[Fraction] = None
    node_count: int = 0
    elapsed: float = 0.0
    simplex_iterations: int = 0

    def value(self, name: str) -> Fraction:
        return self.assignment[name]


@dataclass(frozen=True)
class SolveBudget:
    node_limit: int = 2_000_000
    time_limit: Optional[float] = None

    def __post_init__(self) -> None:
        if self.node_limit <= 0:
            raise ValueError("node limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time limit must be positive")


def verify_assignment(
    model: MilpModel,
    assignment: Mapping[str, Fraction],
    feas_tol: Fraction = _FEAS_TOL,
) -> list[str]:
    """Exact rational re-verification; returns human-readable violations."""
    problems: list[str] = []
    for v in model.variables:
        if v.name not in assignment:
            problems.append(f"variable {v.name} missing from assignment")
            continue
        x = assignment[v.name]
        tol_lo = feas_tol * (1 + abs(v.lb)) if v.lb != -math.inf else 0
        tol_hi = feas_tol * (1 + abs(v.ub)) if v.ub != math.inf else 0
        if v.lb != -math.inf and x < v.lb - tol_lo:
            problems.append(f"variable {v.name}={x} below lower bound {v.lb}")
        if v.ub != math.inf and x > v.ub + tol_hi:
            problems.append(f"variable {v.name}={x} above upper bound {v.ub}")
        if v.kind is not VarKind.CONTINUOUS and x.denominator != 1:
            problems.append(f"variable {v.name}={x} not integral")
    for idx, con in enumerate(model.constraints):
        lhs = sum((c * assignment[var] for var, c in con.coeffs.items()), Fraction(0))
        tol = feas_tol * (1 + abs(con.rhs))
        label = con.name or f"c{idx}"
        if con.relation is Relation.LE and lhs > con.rhs + tol:
            problems.append(f"constraint {label}: {lhs} <= {con.rhs} violated")
        elif con.relation is Relation.GE and lhs < con.rhs - tol:
            problems.append(f"constraint {label}: {lhs} >= {con.rhs} violated")
        elif con.relation is Relation.EQ and abs(lhs - con.rhs) > tol:
            problems.append(f"constraint {label}: {lhs} = {con.rhs} violated")
    return problems


def evaluate_objective(model: MilpModel, assignment: Mapping[str, Fraction]) -> Fraction:
    obj = model.objective
    return sum((c * assignment[v] for v, c in obj.coeffs.items()), obj.constant)


# -- conversion to the simplex standard form ---------------------------------


class _StandardForm:
    def __init__(self, model: MilpModel) -> None:
        names = model.var_names()
        self.n = len(names)
        self.m = len(model.constraints)
        self.index = {name: j for j, name in enumerate(names)}
        A = np.zeros((self.m, self.n + self.m))
        b = np.zeros(self.m)
        for i, con in enumerate(model.constraints):
            sign = -1.0 if con.relation is Relation.GE else 1.0
            for var, coef in con.coeffs.items():
                A[i, self.index[var]] = sign * float(coef)
            b[i] = sign * float(con.rhs)
            A[i, self.n + i] = 1.0
        self.A, self.b = A, b
        self.lb = np.zeros(self.n + self.m)
        self.ub = np.zeros(self.n + self.m)
        for j, v in enumerate(model.variables):
            self.lb[j] = float(v.lb) if v.lb != -math.inf else -np.inf
            self.ub[j] = float(v.ub) if v.ub != math.inf else np.inf
        for i, con in enumerate(model.constraints):
            self.lb[self.n + i] = 0.0
            self.ub[self.n + i] = 0.0 if con.relation is Relation.EQ else np.inf
        self.sense = 1.0 if model.objective.sense is Sense.MIN else -1.0
        self.c = np.zeros(self.n + self.m)
        for var, coef in model.objective.coeffs.items():
            self.c[self.index[var]] = self.sense * float(coef)
        self.slack_cols = np.arange(self.n, self.n + self.m, dtype=np.int64)


def _round_assignment(
    model: MilpModel, x: np.ndarray, enforce_integrality: bool
) -> Optional[dict[str, Fraction]]:
    assignment: dict[str, Fraction] = {}
    for j, v in enumerate(model.variables):
        value = float(x[j])
        if v.kind is not VarKind.CONTINUOUS:
            nearest = round(value)
            if enforce_integrality and abs(value - nearest) > _INT_TOL:
                return None
            assignment[v.name] = Fraction(int(nearest)) if abs(value - nearest) <= _INT_TOL else Fraction(value)
        else:
            assignment[v.name] = Fraction(value)
    return assignment


def solve_lp(model: MilpModel, budget: Optional[SolveBudget] = None) -> MilpResult:
    """Solve the continuous relaxation (integrality dropped)."""
    start = time.perf_counter()
    sf = _StandardForm(model)
    res = solve_bounded_lp(sf.A, sf.b, sf.c, sf.lb, sf.ub, slack_cols=sf.slack_cols)
    elapsed = time.perf_counter() - start
    if res.status == "infeasible":
        return MilpResult(MilpStatus.INFEASIBLE, elapsed=elapsed, simplex_iterations=res.iterations)
    if res.status == "unbounded":
        return MilpResult(MilpStatus.UNBOUNDED, elapsed=elapsed, simplex_iterations=res.iterations)
    assignment = _round_assignment(model, res.x, enforce_integrality=False)
    objective = evaluate_objective(model, assignment)
    return MilpResult(
        MilpStatus.OPTIMAL,
        assignment,
        objective,
        node_count=1,
        elapsed=elapsed,
        simplex_iterations=res.iterations,
    )


def _solve_reference(model: MilpModel, budget: SolveBudget) -> MilpResult:
    start = time.perf_counter()
    for v in model.variables:
        if v.kind is not VarKind.CONTINUOUS and (v.lb == -math.inf or v.ub == math.inf):
            raise ModelError(f"integer variable {v.name} must have finite bounds")
    sf = _StandardForm(model)
    int_idx = [
        j for j, v in enumerate(model.variables) if v.kind is not VarKind.CONTINUOUS
    ]
    minimize = model.objective.sense is Sense.MIN

    incumbent: Optional[dict[str, Fraction]] = None
    incumbent_obj: Optional[Fraction] = None  # objective in the model's own sense
    # LP objectives carry neither the constant nor the max-negation;
    # incumbent_cmp mirrors them for pruning comparisons.
    incumbent_cmp = math.inf
    node_count = 0
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = [
        (-math.inf, counter, sf.lb.copy(), sf.ub.copy())
    ]
    budget_hit = False
    root_unbounded = False
    engine = SimplexEngine(sf.A, sf.b, sf.c, sf.lb, sf.ub, sf.slack_cols)

    while heap:
        bound, _, lbs, ubs = heapq.heappop(heap)
        if bound >= incumbent_cmp - _PRUNE_EPS:
            break  # best-bound order: every remaining node is at least as bad
        if node_count >= budget.node_limit or (
            budget.time_limit is not None and time.perf_counter() - start > budget.time_limit
        ):
            budget_hit = True
            break
        node_count += 1
        status, x = _node_lp(engine, lbs, ubs, first=node_count == 1)
        if status == "infeasible":
            continue
        if status == "unbounded":
            if node_count == 1:
                root_unbounded = True
                break
            raise MilpNumericalError("child LP unbounded although the root was bounded")
        objective = engine.objective(x)
        if objective >= incumbent_cmp - _PRUNE_EPS:
            continue
        frac_var = _most_fractional(x, int_idx)
        if frac_var is None:
            assignment = _round_assignment(model, x, enforce_integrality=True)
            if assignment is None:
                raise MilpNumericalError("integral LP solution failed integrality rounding")
            problems = verify_assignment(model, assignment)
            if problems:
                raise MilpNumericalError(
                    "incumbent failed exact re-verification: " + "; ".join(problems[:3])
                )
            obj_exact = evaluate_objective(model, assignment)
            better = incumbent_obj is None or (
                obj_exact < incumbent_obj if minimize else obj_exact > incumbent_obj
            )
            if better:
                incumbent, incumbent_obj = assignment, obj_exact
                raw = obj_exact - model.objective.constant
                incumbent_cmp = float(raw if minimize else -raw)
            continue
        value = x[frac_var]
        for child in ("down", "up"):
            child_lb, child_ub = lbs.copy(), ubs.copy()
            if child == "down":
                child_ub[frac_var] = math.floor(value)
            else:
                child_lb[frac_var] = math.ceil(value)
            if child_lb[frac_var] > child_ub[frac_var]:
                continue
            counter += 1
            heapq.heappush(heap, (objective, counter, child_lb, child_ub))
    iterations = engine.iterations

    elapsed = time.perf_counter() - start
    if root_unbounded:
        return MilpResult(MilpStatus.UNBOUNDED, node_count=node_count, elapsed=elapsed,
                          simplex_iterations=iterations)
    if incumbent is not None:
        status = MilpStatus.BUDGET_EXCEEDED if budget_hit else MilpStatus.OPTIMAL
        return MilpResult(status, incumbent, incumbent_obj, node_count, elapsed, iterations)
    if budget_hit:
        return MilpResult(MilpStatus.BUDGET_EXCEEDED, node_count=node_count, elapsed=elapsed,
                          simplex_iterations=iterations)
    return MilpResult(MilpStatus.INFEASIBLE, node_count=node_count, elapsed=elapsed,
                      simplex_iterations=iterations)


def _node_lp(
    engine: SimplexEngine, lbs: np.ndarray, ubs: np.ndarray, first: bool
) -> tuple[str, Optional[np.ndarray]]:
    """Solve one node's LP: dual reoptimization from the live basis, with a
    fresh primal solve as the fallback (and as the root solve)."""
    if not first:
        engine.set_bounds(lbs, ubs)
        status = engine.dual_reoptimize()
        if status == "optimal":
            if engine.check_optimal():
                return "optimal", engine.extract()
            status = "stalled"
        elif status == "infeasible":
            # trust the certificate only while the tableau is demonstrably clean
            x = engine.val.copy()
            keep = engine.basis >= 0
            x[engine.basis[keep]] = engine.xB[keep]
            residual = float(np.max(np.abs(engine.A @ x - engine.b))) if engine.m else 0.0
            if residual <= 1e-6:
                return "infeasible", None
            status = "stalled"
        if status != "stalled":
            return status, None
    else:
        engine.set_bounds(lbs, ubs)
    status = engine.solve_primal()
    if status != "optimal":
        return status, None
    return "optimal", engine.extract()


def _most_fractional(x: np.ndarray, int_idx: list[int]) -> Optional[int]:
    best: Optional[int] = None
    best_frac = _INT_TOL
    for j in int_idx:
        frac = x[j] - math.floor(x[j])
        dist = min(frac, 1.0 - frac)
        if dist > best_frac:
            best = j
            best_frac = dist
    return best


# -- backend contract ---------------------------------------------------------


class MilpBackend(Protocol):
    name: str

    def solve(self, model: MilpModel, budget: SolveBudget) -> MilpResult: ...


class ReferenceBackend:
    """Default solver: bounded-variable simplex + best-bound branch & bound."""

    name = "reference"

    def solve(self, model: MilpModel, budget: SolveBudget) -> MilpResult:
        return _solve_reference(model, budget)


_BACKENDS: dict[str, MilpBackend] = {}


def register_backend(backend: MilpBackend) -> None:
    _BACKENDS[backend.name] = backend


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str) -> MilpBackend:
    if name not in _BACKENDS:
        raise BackendError(
            f"unknown MILP backend {name!r}; registered backends: {', '.join(available_backends())}"
        )
    return _BACKENDS[name]


register_backend(ReferenceBackend())


def solve_milp(
    model: MilpModel,
    budget: Optional[SolveBudget] = None,
    backend: str = "reference",
) -> MilpResult:
    """Exact optimum via the named backend (reference solver by default)."""
    return get_backend(backend).solve(model, budget or SolveBudget())


# -- LP-format export ----------------------------------------------------------


def _lp_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return repr(float(value))


def _lp_terms(coeffs: Mapping[str, Fraction]) -> str:
    parts: list[str] = []
    for var, coef in coeffs.items():
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = _lp_number(abs(coef))
        term = f"{sign} {mag} {var}" if mag != "1" else f"{sign} {var}"
        parts.append(term)
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: MilpModel) -> str:
    """Serialize to CPLEX-style LP text.

    Grammar (one construct per line):
        problem   := comment* sense objective "Subject To" row* "Bounds" bound*
                     ["General" name*] ["Binary" name*] "End"
        objective := " obj: " terms ["+" number]
        row       := " " name ": " terms relation number
        bound     := " " number "<=" name "<=" number | " " name "free" | one-sided
    Rational coefficients whose denominator is not 1 are written as their
    closest double (repr), which is what external LP readers accept.
    """
    obj = model.objective
    lines = [f"\\ {model.name}"]
    lines.append("Maximize" if obj.sense is Sense.MAX else "Minimize")
    expr = _lp_terms(obj.coeffs)
    if obj.constant:
        expr += f" + {_lp_number(obj.constant)}" if obj.constant > 0 else (
            f" - {_lp_number(-obj.constant)}"
        )
    lines.append(f" obj: {expr}")
    lines.append("Subject To")
    for i, con in enumerate(model.constraints):
        label = con.name or f"c{i}"
        lines.append(f" {label}: {_lp_terms(con.coeffs)} {con.relation.value} {_lp_number(con.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.lb == -math.inf and v.ub == math.inf:
            lines.append(f" {v.name} free")
        elif v.lb == -math.inf:
            lines.append(f" {v.name} <= {_lp_number(v.ub)}")
        elif v.ub == math.inf:
            lines.append(f" {v.name} >= {_lp_number(v.lb)}")
        else:
            lines.append(f" {_lp_number(v.lb)} <= {v.name} <= {_lp_number(v.ub)}")
    generals = [v.name for v in model.variables if v.kind is VarKind.INTEGER]
    binaries = [v.name for v in model.variables if v.kind is VarKind.BINARY]
    if generals:
        lines.append("General")
        lines.extend(f" {name}" for name in generals)
    if binaries:
        lines.append("Binary")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"
