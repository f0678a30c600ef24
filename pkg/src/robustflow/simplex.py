"""Bounded-variable simplex on a dense numpy tableau.

Solves  min c.x  s.t.  A x = b,  lb <= x <= ub  (entries of lb/ub may be
infinite). The primal path is a two-phase method: phase 1 starts from a
slack/artificial basis (artificial columns are implicit, they can never
re-enter) and minimizes the artificial mass; pricing is Dantzig's rule with a
permanent switch to Bland's rule when the objective stalls. Reduced costs are
maintained incrementally and refreshed periodically against drift.

The engine is reusable: after a solve, variable bounds may be changed in
place and the dual simplex reoptimizes from the current basis -- a bound
change never breaks dual feasibility, so branch-and-bound nodes typically
need only a few pivots. Callers fall back to a fresh primal solve whenever
the dual path hits its iteration cap or numerical checks fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

NB_LB, NB_UB, BASIC, NB_FREE = 0, 1, 2, 3

_PIV_TOL = 1e-9
_RC_TOL = 1e-9
_FEAS_TOL = 1e-7
_REFRESH_EVERY = 400


class SimplexNumericalError(ArithmeticError):
    """The pivot sequence lost numerical control (reported with the pivot)."""


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: float
    iterations: int


class SimplexEngine:
    """One tableau over the columns of [A]; artificial columns are implicit.

    ``slack_cols[i]``, when given, names a column carrying an identity
    coefficient in row i (a slack); phase 1 then seats feasible slacks in the
    starting basis instead of artificials.
    """

    def __init__(
        self,
        A: np.ndarray,
        b: np.ndarray,
        c: np.ndarray,
        lb: np.ndarray,
        ub: np.ndarray,
        slack_cols: Optional[np.ndarray] = None,
    ) -> None:
        self.A = np.ascontiguousarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.lb = np.asarray(lb, dtype=float).copy()
        self.ub = np.asarray(ub, dtype=float).copy()
        self.slack_cols = slack_cols
        self.m, self.n = A.shape
        self.iterations = 0
        self.T = np.empty_like(self.A)
        self.xB = np.zeros(self.m)
        self.basis = np.empty(self.m, dtype=np.int64)
        self.status = np.empty(self.n, dtype=np.int8)
        self.val = np.zeros(self.n)
        self.z = np.zeros(self.n)
        self._solved = False

    # ----- helpers ------------------------------------------------------

    def _reset_nonbasic(self) -> None:
        finite_lb = np.isfinite(self.lb)
        finite_ub = np.isfinite(self.ub)
        self.status[:] = NB_FREE
        self.val[:] = 0.0
        self.status[finite_ub] = NB_UB
        self.val[finite_ub] = self.ub[finite_ub]
        self.status[finite_lb] = NB_LB
        self.val[finite_lb] = self.lb[finite_lb]

    def _basic_bounds(self, phase1: bool) -> tuple[np.ndarray, np.ndarray]:
        real = self.basis >= 0
        safe = np.maximum(self.basis, 0)
        lbB = np.where(real, self.lb[safe], 0.0)
        ubB = np.where(real, self.ub[safe], np.inf if phase1 else 0.0)
        return lbB, ubB

    def _refresh_z(self, phase1: bool) -> None:
        if phase1:
            cB = (self.basis < 0).astype(float)
            self.z = -(cB @ self.T) if self.m else np.zeros(self.n)
        else:
            cB = np.where(self.basis < 0, 0.0, self.c[np.maximum(self.basis, 0)])
            self.z = self.c - cB @ self.T if self.m else self.c.astype(float).copy()

    def _phase_objective(self, phase1: bool) -> float:
        if not self.m:
            return 0.0
        if phase1:
            return float(self.xB[self.basis < 0].sum())
        cB = np.where(self.basis < 0, 0.0, self.c[np.maximum(self.basis, 0)])
        return float(cB @ self.xB)

    def _pivot(self, row: int, q: int) -> None:
        self.T[row] /= self.T[row, q]
        col = self.T[:, q].copy()
        col[row] = 0.0
        self.T -= np.outer(col, self.T[row])
        self.T[:, q] = 0.0
        self.T[row, q] = 1.0

    # ----- primal -------------------------------------------------------

    def solve_primal(self, max_iterations: Optional[int] = None) -> str:
        """Fresh two-phase solve from a slack/artificial basis."""
        if max_iterations is None:
            max_iterations = 20_000 + 60 * (self.m + self.n)
        self._reset_nonbasic()
        r = self.b - self.A @ self.val
        art_sign = np.ones(self.m)
        self.basis[:] = [-(i + 1) for i in range(self.m)]
        for i in range(self.m):
            j = -1
            if self.slack_cols is not None:
                j = int(self.slack_cols[i])
            if j >= 0 and self.lb[j] - _FEAS_TOL <= r[i] <= self.ub[j] + _FEAS_TOL:
                self.basis[i] = j
                self.status[j] = BASIC
                self.xB[i] = r[i]
            else:
                art_sign[i] = 1.0 if r[i] >= 0 else -1.0
                self.xB[i] = abs(r[i])
        if self.m:
            # basis matrix is diag(+1 for seated slacks, sign(r) for artificials)
            self.T[:] = art_sign[:, None] * self.A
        else:
            self.T = self.A.astype(float).copy()
        status = "optimal"
        if self.m and (self.basis < 0).any():
            if not self._run_phase(phase1=True, max_iterations=max_iterations):
                self._solved = False
                return "infeasible"
            self._drive_out_artificials()
        if not self._run_phase(phase1=False, max_iterations=max_iterations):
            self._solved = False
            return "unbounded"
        self._solved = True
        return status

    def _run_phase(self, phase1: bool, max_iterations: int) -> bool:
        bland = False
        stall = 0
        since_refresh = 0
        self._refresh_z(phase1)
        prev_obj = np.inf
        while True:
            self.iterations += 1
            since_refresh += 1
            if self.iterations > max_iterations:
                raise SimplexNumericalError(
                    f"iteration limit {max_iterations} exceeded (phase {1 if phase1 else 2})"
                )
            if since_refresh >= _REFRESH_EVERY:
                self._refresh_z(phase1)
                since_refresh = 0
            obj = self._phase_objective(phase1)
            if phase1 and obj <= _FEAS_TOL:
                return True
            if obj < prev_obj - 1e-12:
                stall = 0
            else:
                stall += 1
                if stall > max(200, self.m):
                    bland = True
            prev_obj = obj

            z = self.z
            can_up = (z < -_RC_TOL) & ((self.status == NB_LB) | (self.status == NB_FREE))
            can_dn = (z > _RC_TOL) & ((self.status == NB_UB) | (self.status == NB_FREE))
            eligible = can_up | can_dn
            if not eligible.any():
                # certify optimality against drift before declaring the phase done
                self._refresh_z(phase1)
                z = self.z
                can_up = (z < -_RC_TOL) & ((self.status == NB_LB) | (self.status == NB_FREE))
                can_dn = (z > _RC_TOL) & ((self.status == NB_UB) | (self.status == NB_FREE))
                eligible = can_up | can_dn
                if not eligible.any():
                    if phase1:
                        return self._phase_objective(True) <= _FEAS_TOL
                    return True
                since_refresh = 0
            if bland:
                q = int(np.nonzero(eligible)[0][0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(z), 0.0)))
            direction = 1.0 if can_up[q] else -1.0
            if not self._primal_step(q, direction, phase1):
                if phase1:
                    raise SimplexNumericalError("phase-1 objective unbounded below")
                return False

    def _primal_step(self, q: int, direction: float, phase1: bool) -> bool:
        d = direction * self.T[:, q]
        lbB, ubB = self._basic_bounds(phase1)
        limits = np.full(self.m, np.inf)
        pos = d > _PIV_TOL
        neg = d < -_PIV_TOL
        if pos.any():
            limits[pos] = (self.xB[pos] - lbB[pos]) / d[pos]
        if neg.any():
            limits[neg] = (self.xB[neg] - ubB[neg]) / d[neg]
        np.maximum(limits, 0.0, out=limits)
        t_rows = float(limits.min()) if self.m else np.inf
        span = self.ub[q] - self.lb[q]
        if span < t_rows:
            self.xB -= span * d
            self.status[q] = NB_UB if self.status[q] == NB_LB else NB_LB
            self.val[q] = self.ub[q] if self.status[q] == NB_UB else self.lb[q]
            return True
        if not np.isfinite(t_rows):
            return False
        rows = np.nonzero(limits <= t_rows + 1e-10)[0]
        row = int(rows[np.argmax(np.abs(d[rows]))])
        piv = self.T[row, q]
        if abs(piv) < _PIV_TOL:
            raise SimplexNumericalError(
                f"pivot element {piv!r} below tolerance at row {row}, column {q}"
            )
        enter_val = self.val[q] + direction * t_rows
        self.xB -= t_rows * d
        self._replace_basis(row, q, enter_val, leave_low=d[row] > 0)
        return True

    def _replace_basis(self, row: int, q: int, enter_val: float, leave_low: bool) -> None:
        leaving = self.basis[row]
        if leaving >= 0:
            self.status[leaving] = NB_LB if leave_low else NB_UB
            self.val[leaving] = self.lb[leaving] if leave_low else self.ub[leaving]
        self.basis[row] = q
        self.status[q] = BASIC
        self.xB[row] = enter_val
        z_q = self.z[q]
        self._pivot(row, q)
        if z_q:
            self.z -= z_q * self.T[row]
        self.z[q] = 0.0

    def _drive_out_artificials(self) -> None:
        for row in range(self.m):
            if self.basis[row] >= 0:
                continue
            scores = np.where(self.status != BASIC, np.abs(self.T[row]), 0.0)
            q = int(np.argmax(scores))
            if scores[q] <= _FEAS_TOL:
                continue  # redundant row; artificial stays pinned at zero
            self.basis[row] = q
            self.status[q] = BASIC
            self.xB[row] = self.val[q]
            self._pivot(row, q)

    # ----- dual reoptimization -----------------------------------------

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray) -> None:
        """Replace variable bounds in place, keeping the basis; nonbasic
        variables follow their bound and the basic values are adjusted."""
        changed = np.nonzero((lb != self.lb) | (ub != self.ub))[0]
        for j in changed:
            st = self.status[j]
            new_val = self.val[j]
            if st == NB_LB:
                new_val = lb[j]
            elif st == NB_UB:
                new_val = ub[j]
            delta = new_val - self.val[j]
            if delta:
                self.xB -= self.T[:, j] * delta
                self.val[j] = new_val
        self.lb[changed] = lb[changed]
        self.ub[changed] = ub[changed]

    def dual_reoptimize(self, max_iterations: int = 2_000) -> str:
        """Dual simplex from the current (dual-feasible) basis after bound
        changes. Returns "optimal", "infeasible", or "stalled" (caller should
        fall back to a fresh primal solve)."""
        if not self._solved:
            return "stalled"
        self._refresh_z(phase1=False)
        for _ in range(max_iterations):
            self.iterations += 1
            lbB, ubB = self._basic_bounds(phase1=False)
            below = lbB - self.xB
            above = self.xB - ubB
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= _FEAS_TOL:
                return "optimal"
            leaving_low = below[r] > above[r]
            w = self.T[r]
            at_lb = (self.status == NB_LB) | (self.status == NB_FREE)
            at_ub = (self.status == NB_UB) | (self.status == NB_FREE)
            if leaving_low:
                cand = (at_lb & (w < -_PIV_TOL)) | (at_ub & (w > _PIV_TOL))
            else:
                cand = (at_lb & (w > _PIV_TOL)) | (at_ub & (w < -_PIV_TOL))
            idx = np.nonzero(cand)[0]
            if idx.size == 0:
                return "infeasible"
            ratios = self.z[idx] / w[idx]
            if leaving_low:
                theta = ratios.max()
            else:
                theta = ratios.min()
            near = idx[np.abs(ratios - theta) <= 1e-9]
            q = int(near[np.argmax(np.abs(w[near]))])
            target = lbB[r] if leaving_low else ubB[r]
            delta_q = (self.xB[r] - target) / w[q]
            self.xB -= delta_q * self.T[:, q]
            theta_q = self.z[q] / w[q]
            leaving = self.basis[r]
            if leaving >= 0:
                self.status[leaving] = NB_LB if leaving_low else NB_UB
                self.val[leaving] = self.lb[leaving] if leaving_low else self.ub[leaving]
            self.basis[r] = q
            self.status[q] = BASIC
            enter_val = self.val[q] + delta_q
            self.xB[r] = enter_val
            if theta_q:
                self.z -= theta_q * w
            self.z[q] = 0.0
            self._pivot(r, q)
        return "stalled"

    # ----- solution extraction ------------------------------------------

    def extract(self) -> np.ndarray:
        x = self.val.copy()
        keep = self.basis >= 0
        x[self.basis[keep]] = self.xB[keep]
        if self.m:
            residual = float(np.max(np.abs(self.A @ x - self.b)))
            if residual > 1e-6:
                x = self._refactor(x)
        return x

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def check_optimal(self) -> bool:
        """Recompute reduced costs and verify sign consistency and primal
        feasibility of the current basis."""
        self._refresh_z(phase1=False)
        lbB, ubB = self._basic_bounds(phase1=False)
        if self.m and (
            (self.xB < lbB - 1e-6).any() or (self.xB > ubB + 1e-6).any()
        ):
            return False
        bad_lb = (self.status == NB_LB) & (self.z < -1e-6)
        bad_ub = (self.status == NB_UB) & (self.z > 1e-6)
        bad_free = (self.status == NB_FREE) & (np.abs(self.z) > 1e-6)
        return not (bad_lb.any() or bad_ub.any() or bad_free.any())

    def _refactor(self, x: np.ndarray) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for i in range(self.m):
            j = self.basis[i]
            if j >= 0:
                B[:, i] = self.A[:, j]
            else:
                B[-j - 1, i] = 1.0
        nonbasic = self.status != BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.val[nonbasic]
        try:
            xB = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError as exc:
            raise SimplexNumericalError(f"singular basis on refactorization: {exc}")
        for i in range(self.m):
            if self.basis[i] >= 0:
                x[self.basis[i]] = xB[i]
        residual = float(np.max(np.abs(self.A @ x - self.b)))
        if residual > 1e-5:
            raise SimplexNumericalError(f"residual {residual:.2e} after refactorization")
        return x


def solve_bounded_lp(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    max_iterations: Optional[int] = None,
    slack_cols: Optional[np.ndarray] = None,
) -> LpResult:
    """Minimize c.x over {A x = b, lb <= x <= ub} with a fresh engine."""
    engine = SimplexEngine(A, b, c, lb, ub, slack_cols)
    status = engine.solve_primal(max_iterations)
    if status == "infeasible":
        return LpResult(status, None, float("inf"), engine.iterations)
    if status == "unbounded":
        return LpResult(status, None, float("-inf"), engine.iterations)
    x = engine.extract()
    return LpResult("optimal", x, engine.objective(x), engine.iterations)
