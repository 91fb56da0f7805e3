"""Dense two-phase tableau simplex for small linear programs.

Problems are stated as ``maximize c @ x`` subject to rows ``a @ x (<=|=|>=) b``
and ``x >= 0``. Pivoting follows Bland's rule, so the solver terminates on
degenerate problems and is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

TAU_LP = 1e-7
_PIVOT_TOL = 1e-11


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


class LpError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    """Iteration cap reached; ``basis`` holds the last basis for diagnosis."""

    def __init__(self, message: str, basis: Sequence[int]):
        super().__init__(message)
        self.basis = tuple(basis)


@dataclass(frozen=True)
class Constraint:
    coeffs: NDArray[np.float64]
    relation: Relation
    rhs: float


@dataclass
class LinearProgram:
    objective: NDArray[np.float64]
    constraints: list[Constraint] = field(default_factory=list)
    names: list[str] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def add(
        self,
        coeffs: Mapping[int, float] | Sequence[float] | NDArray[np.float64],
        relation: Relation | str,
        rhs: float,
    ) -> None:
        if isinstance(coeffs, Mapping):
            row = np.zeros(self.n_vars)
            for j, v in coeffs.items():
                row[j] += v
        else:
            row = np.asarray(coeffs, dtype=np.float64)
        if row.shape != (self.n_vars,):
            raise LpError(f"constraint has {row.shape} coefficients, expected {self.n_vars}")
        if not np.isfinite(rhs):
            raise LpError("right-hand side must be finite")
        self.constraints.append(Constraint(row, Relation(relation), float(rhs)))

    def matrix(self) -> tuple[NDArray[np.float64], list[Relation], NDArray[np.float64]]:
        if not self.constraints:
            return np.zeros((0, self.n_vars)), [], np.zeros(0)
        a = np.vstack([c.coeffs for c in self.constraints])
        return a, [c.relation for c in self.constraints], np.array([c.rhs for c in self.constraints])

    def dump(self) -> str:
        """Human-readable listing with a stable ordering."""
        names = self.names or [f"x{j}" for j in range(self.n_vars)]

        def expr(coeffs) -> str:
            terms = [f"{v:+g} {names[j]}" for j, v in enumerate(coeffs) if v != 0]
            return " ".join(terms) if terms else "0"

        lines = ["maximize " + expr(self.objective), "subject to"]
        for t, c in enumerate(self.constraints):
            lines.append(f"  c{t}: {expr(c.coeffs)} {c.relation.value} {c.rhs:g}")
        lines.append("  all variables >= 0")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    status: Status
    values: NDArray[np.float64]
    objective_value: float
    iterations: int
    duals: NDArray[np.float64] | None = None
    basis: tuple[int, ...] = ()


@dataclass(frozen=True)
class Residuals:
    max_violation: float
    objective: float
    objective_error: float
    dual_violation: float | None = None
    duality_gap: float | None = None

    def ok(self, tol: float = TAU_LP) -> bool:
        checks = [self.max_violation, self.objective_error]
        if self.dual_violation is not None:
            checks += [self.dual_violation, self.duality_gap]
        return all(c <= tol for c in checks)


class _Tableau:
    def __init__(self, rows: NDArray[np.float64], basis: list[int]):
        self.t = rows
        self.basis = basis
        self.iterations = 0

    def pivot(self, r: int, c: int, cost: NDArray[np.float64]) -> None:
        t = self.t
        t[r] /= t[r, c]
        col = t[:, c].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if len(nz):
            t[nz] -= np.outer(col[nz], t[r])
        cost -= cost[c] * t[r]
        self.basis[r] = c
        self.iterations += 1

    def run(self, cost: NDArray[np.float64], allowed: int, cap: int) -> Status:
        """Iterate to optimality for reduced costs ``cost`` over columns ``< allowed``."""
        t = self.t
        while True:
            entering = np.nonzero(cost[:allowed] > _PIVOT_TOL)[0]
            if len(entering) == 0:
                return Status.OPTIMAL
            c = int(entering[0])
            column = t[:, c]
            rows = np.nonzero(column > _PIVOT_TOL)[0]
            if len(rows) == 0:
                return Status.UNBOUNDED
            ratios = t[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
            r = int(min(tied, key=lambda i: self.basis[i]))
            if self.iterations >= cap:
                raise NumericalFailure(
                    f"no convergence after {self.iterations} pivots", self.basis
                )
            self.pivot(r, c, cost)


def solve(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Two-phase simplex; equalities enter the tableau as a ``<=`` and a ``>=`` row."""
    a, relations, b = lp.matrix()
    n = lp.n_vars
    cap = max_iter if max_iter is not None else 50 * (n + len(relations))

    # (coefficients, rhs, is_le, original row, sign)
    split = []
    for o, (row, rel, rhs) in enumerate(zip(a, relations, b)):
        parts = [(row, rhs, True, 1.0), (row, rhs, False, 1.0)] if rel is Relation.EQ else [
            (row, rhs, rel is Relation.LE, 1.0)
        ]
        for coeffs, rhs_, le, sign in parts:
            if rhs_ < 0 or (rhs_ == 0 and not le):
                coeffs, rhs_, le, sign = -coeffs, -rhs_, not le, -sign
            split.append((coeffs, rhs_, le, o, sign))

    n_rows = len(split)
    ge_rows = [t for t, s in enumerate(split) if not s[2]]
    n_art = len(ge_rows)
    n_cols = n + n_rows + n_art
    tab = np.zeros((n_rows, n_cols + 1))
    basis = []
    art_of_row = {t: n + n_rows + q for q, t in enumerate(ge_rows)}
    for t, (coeffs, rhs, le, _, _) in enumerate(split):
        tab[t, :n] = coeffs
        tab[t, n + t] = 1.0 if le else -1.0
        tab[t, -1] = rhs
        if le:
            basis.append(n + t)
        else:
            tab[t, art_of_row[t]] = 1.0
            basis.append(art_of_row[t])
    tableau = _Tableau(tab, basis)

    if n_art:
        cost = np.zeros(n_cols + 1)
        cost[n + n_rows :n_cols] = -1.0
        for t in ge_rows:
            cost += tab[t]
        status = tableau.run(cost, n_cols, cap)
        phase_one = -cost[-1]
        if status is not Status.OPTIMAL:
            raise NumericalFailure("phase one did not reach optimality", tableau.basis)
        if phase_one < -TAU_LP * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution(Status.INFEASIBLE, np.zeros(n), float("nan"), tableau.iterations,
                              basis=tuple(tableau.basis))
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(n_rows):
            if tableau.basis[r] < n + n_rows:
                keep.append(r)
                continue
            candidates = np.nonzero(np.abs(tableau.t[r, : n + n_rows]) > _PIVOT_TOL)[0]
            if len(candidates):
                tableau.pivot(r, int(candidates[0]), np.zeros(n_cols + 1))
                keep.append(r)
        tableau.t = np.delete(tableau.t[keep], np.s_[n + n_rows : n_cols], axis=1)
        tableau.basis = [tableau.basis[r] for r in keep]
    else:
        keep = list(range(n_rows))
    kept_rows = set(keep)

    n_cols = n + n_rows
    c_ext = np.zeros(n_cols + 1)
    c_ext[:n] = lp.objective
    cost = c_ext - c_ext[tableau.basis] @ tableau.t
    status = tableau.run(cost, n_cols, cap)

    values = np.zeros(n_cols)
    for r, j in enumerate(tableau.basis):
        values[j] = tableau.t[r, -1]
    x = values[:n].copy()
    objective = float(lp.objective @ x)
    if status is Status.UNBOUNDED:
        return LpSolution(status, x, float("inf"), tableau.iterations, basis=tuple(tableau.basis))

    duals = np.zeros(len(relations))
    for t, (_, _, le, o, sign) in enumerate(split):
        if t not in kept_rows:
            continue
        y = -cost[n + t] if le else cost[n + t]
        duals[o] += sign * y
    return LpSolution(status, x, objective, tableau.iterations, duals, tuple(tableau.basis))


def check_solution(lp: LinearProgram, solution: LpSolution) -> Residuals:
    """Independent audit: primal violations, objective recomputation and, when
    duals are available, dual feasibility and the duality gap."""
    a, relations, b = lp.matrix()
    x = np.asarray(solution.values, float)
    worst = float(max(0.0, -x.min(initial=0.0)))
    if len(relations):
        scale = np.maximum(1.0, np.abs(a).max(axis=1))
        lhs = a @ x
        for row, rel in enumerate(relations):
            gap = (lhs[row] - b[row]) / scale[row]
            if rel is Relation.LE:
                v = max(0.0, gap)
            elif rel is Relation.GE:
                v = max(0.0, -gap)
            else:
                v = abs(gap)
            worst = max(worst, float(v))
    objective = float(lp.objective @ x)
    obj_err = abs(objective - solution.objective_value) if np.isfinite(solution.objective_value) else 0.0
    if solution.duals is None or solution.status is not Status.OPTIMAL:
        return Residuals(worst, objective, obj_err)
    y = solution.duals
    dual_worst = 0.0
    for row, rel in enumerate(relations):
        if rel is Relation.LE:
            dual_worst = max(dual_worst, -y[row])
        elif rel is Relation.GE:
            dual_worst = max(dual_worst, y[row])
    reduced = (a.T @ y if len(relations) else np.zeros(lp.n_vars)) - lp.objective
    dual_worst = max(dual_worst, float(max(0.0, -reduced.min(initial=0.0))))
    gap = abs(float(b @ y) - objective) / max(1.0, abs(objective))
    return Residuals(worst, objective, obj_err, float(dual_worst), gap)
