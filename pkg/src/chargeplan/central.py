"""Centralized LP path: problem builder, solvers, and the no-assignment baseline.

``build_lp`` lowers a :class:`~chargeplan.model.PlanningInstance` to a sparse
standard-form LP.  Structural zeros (diagonal and range-forbidden pairs) are
realized by variable elimination, never as rows, so the column space contains
exactly the capacities plus the free assignment cells.

``solve_centralized`` runs either the embedded revised simplex (desk-tiny
problems, fully self-contained) or scipy's HiGHS backend (anything larger).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.sparse

from .model import (
    AssignmentPlan,
    ConvergenceError,
    InfeasibleProblemError,
    InvestmentPlan,
    PlanningInstance,
    Solution,
    check_feasibility,
    evaluate_objective,
)
from .simplex import solve_simplex


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and backend selection for the centralized solve."""

    backend: str = "auto"  # "auto" | "simplex" | "highs"
    optimality_tol: float = 1e-7
    feasibility_tol: float = 1e-8
    max_iterations: int = 20000
    # "auto" uses the embedded simplex up to this many columns
    simplex_max_cols: int = 300


@dataclass(frozen=True)
class StandardFormLP:
    """Sparse standard-form LP with a name map back to model variables.

    Constraint matrix given as parallel (row, col, value) triplet arrays.
    Every row is one instance of a model constraint; all senses are "L"
    (<=) by construction.  ``col_kinds[k]`` is ``("c", i)`` or
    ``("z", t, i, j)``.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    obj: np.ndarray
    col_names: list[str]
    row_names: list[str]
    col_kinds: list[tuple] = field(repr=False, default_factory=list)

    def to_coo(self) -> scipy.sparse.coo_matrix:
        return scipy.sparse.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        )

    def triplet_set(self) -> set[tuple[int, int, float]]:
        return {
            (int(r), int(c), float(v))
            for r, c, v in zip(self.rows, self.cols, self.vals)
        }


def free_assignment_cells(instance: PlanningInstance) -> list[tuple[int, int, int]]:
    """(t, i, j) cells that carry a decision variable, in column order."""
    mask = instance.forbidden_mask()
    cells = []
    for t in range(instance.n_slots):
        for i in range(instance.n_locations):
            for j in range(instance.n_locations):
                if not mask[i, j]:
                    cells.append((t, i, j))
    return cells


def build_lp(instance: PlanningInstance) -> StandardFormLP:
    """Lower the joint problem to standard form.

    Rows: one budget row, one flow-conservation row per (location, slot),
    and two capacity-satisfaction rows per (location, slot) (demand must fit
    under the installed capacity and stay non-negative).  Capacity box
    bounds fold into variable bounds.
    """
    n, T = instance.n_locations, instance.n_slots
    demand = instance.charging_demand
    beta = instance.beta
    cells = free_assignment_cells(instance)
    col_of = {cell: n + k for k, cell in enumerate(cells)}
    n_cols = n + len(cells)
    if n_cols > 50_000_000:
        raise OverflowError("instance exceeds supported index space")

    col_names = [f"C_{i + 1}" for i in range(n)] + [
        f"Z_{i + 1}_{j + 1}_{t + 1}" for (t, i, j) in cells
    ]
    col_kinds: list[tuple] = [("c", i) for i in range(n)] + [
        ("z", t, i, j) for (t, i, j) in cells
    ]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []
    row_names: list[str] = []

    def add(row: int, col: int, val: float):
        rows.append(row)
        cols.append(col)
        vals.append(val)

    # Budget row.
    r = 0
    row_names.append("BUDGET")
    w = instance.unit_investment_cost
    for i in range(n):
        add(r, i, float(w[i]))
    rhs.append(float(instance.budget))

    # Flow conservation: sum_j z[t,i,j] <= alpha*flow.
    flow_row = {}
    for i in range(n):
        for t in range(T):
            r += 1
            flow_row[(i, t)] = r
            row_names.append(f"FLOW_{i + 1}_{t + 1}")
            rhs.append(float(demand[t, i]))
    # Capacity satisfaction, upper side:
    #   -beta*outflow + beta*inflow - c_i <= -beta*demand
    capu_row = {}
    for i in range(n):
        for t in range(T):
            r += 1
            capu_row[(i, t)] = r
            row_names.append(f"CAPU_{i + 1}_{t + 1}")
            rhs.append(float(-beta * demand[t, i]))
            add(r, i, -1.0)
    # Capacity satisfaction, lower side:
    #   beta*outflow - beta*inflow <= beta*demand
    capl_row = {}
    for i in range(n):
        for t in range(T):
            r += 1
            capl_row[(i, t)] = r
            row_names.append(f"CAPL_{i + 1}_{t + 1}")
            rhs.append(float(beta * demand[t, i]))

    for (t, i, j), col in col_of.items():
        add(flow_row[(i, t)], col, 1.0)
        if beta != 0.0:
            # departure reduces demand at i in slot t
            add(capu_row[(i, t)], col, -beta)
            add(capl_row[(i, t)], col, beta)
            # arrival adds demand at j, delay[i, j] slots later (cyclic)
            t_arr = (t + int(instance.delay[i, j])) % T
            add(capu_row[(j, t_arr)], col, beta)
            add(capl_row[(j, t_arr)], col, -beta)

    n_rows = r + 1
    lb = np.zeros(n_cols)
    ub = np.full(n_cols, np.inf)
    ub[:n] = instance.capacity_max
    obj = np.zeros(n_cols)
    obj[:n] = w
    rec = instance.recurrence
    for k, (t, i, j) in enumerate(cells):
        obj[n + k] = float(rec[t] * instance.assign_cost[i, j])

    return StandardFormLP(
        n_rows=n_rows,
        n_cols=n_cols,
        rows=np.array(rows, dtype=int),
        cols=np.array(cols, dtype=int),
        vals=np.array(vals, dtype=float),
        senses=["L"] * n_rows,
        rhs=np.array(rhs, dtype=float),
        lb=lb,
        ub=ub,
        obj=obj,
        col_names=col_names,
        row_names=row_names,
        col_kinds=col_kinds,
    )


def _extract_plans(
    instance: PlanningInstance, lp: StandardFormLP, x: np.ndarray
) -> tuple[InvestmentPlan, AssignmentPlan]:
    n, T = instance.n_locations, instance.n_slots
    c = np.maximum(x[:n], 0.0)
    z = np.zeros((T, n, n))
    for k, kind in enumerate(lp.col_kinds):
        if kind[0] == "z":
            _, t, i, j = kind
            z[t, i, j] = max(x[k], 0.0)
    return InvestmentPlan(c), AssignmentPlan(z)


def solve_lp(lp: StandardFormLP, config: SolverConfig) -> tuple[np.ndarray, dict]:
    """Solve a built LP, returning the primal point and solver statistics."""
    backend = config.backend
    if backend == "auto":
        backend = "simplex" if lp.n_cols <= config.simplex_max_cols else "highs"
    start = time.perf_counter()
    if backend == "highs":
        res = scipy.optimize.linprog(
            lp.obj,
            A_ub=lp.to_coo().tocsr(),
            b_ub=lp.rhs,
            bounds=list(zip(lp.lb, lp.ub)),
            method="highs",
            options={
                "primal_feasibility_tolerance": config.feasibility_tol,
                "dual_feasibility_tolerance": config.optimality_tol,
            },
        )
        if res.status == 2:
            raise InfeasibleProblemError("LP is infeasible")
        if res.status == 3:
            raise RuntimeError("LP reported unbounded; costs should prevent this")
        if not res.success:
            raise ConvergenceError(f"LP solve failed: {res.message}")
        x = np.asarray(res.x)
        iterations = int(getattr(res, "nit", 0))
    elif backend == "simplex":
        A = lp.to_coo().toarray()
        b = lp.rhs.copy()
        extra_rows = []
        extra_rhs = []
        for k in range(lp.n_cols):
            if np.isfinite(lp.ub[k]):
                row = np.zeros(lp.n_cols)
                row[k] = 1.0
                extra_rows.append(row)
                extra_rhs.append(lp.ub[k])
        if extra_rows:
            A = np.vstack([A, np.array(extra_rows)])
            b = np.concatenate([b, np.array(extra_rhs)])
        res = solve_simplex(lp.obj, A, b, max_iterations=config.max_iterations)
        if res.status == "infeasible":
            raise InfeasibleProblemError("LP is infeasible")
        if res.status == "unbounded":
            raise RuntimeError("LP reported unbounded; costs should prevent this")
        if res.status == "iteration_limit":
            raise ConvergenceError("simplex iteration limit exceeded")
        x = res.x
        iterations = res.iterations
    else:
        raise ValueError(f"unknown backend: {config.backend!r}")
    wall_ms = 1000.0 * (time.perf_counter() - start)
    stats = {
        "backend": backend,
        "iterations": iterations,
        "wall_ms": wall_ms,
        "lp_objective": float(lp.obj @ x),
        "n_rows": lp.n_rows,
        "n_cols": lp.n_cols,
    }
    return x, stats


def solve_centralized(
    instance: PlanningInstance, config: SolverConfig | None = None
) -> Solution:
    """Solve the joint investment-assignment problem in one LP."""
    config = config or SolverConfig()
    lp = build_lp(instance)
    x, stats = solve_lp(lp, config)
    inv, asg = _extract_plans(instance, lp, x)
    cost = evaluate_objective(instance, inv, asg)
    report = check_feasibility(instance, inv, asg, tol=1e-6)
    stats["method"] = "centralized"
    return Solution(inv, asg, cost, report, stats)


def export_model(lp: StandardFormLP, path) -> None:
    """Write a built LP to an MPS file for external solvers."""
    from .mps import write_mps

    write_mps(lp, path)


def solve_base_model(instance: PlanningInstance) -> Solution:
    """No-assignment baseline: size each location to its own peak demand.

    With z fixed at zero the capacity constraint decouples per location and
    the optimum is ``c_i = beta * max_t(alpha * flow)``.  Equals the joint
    model whenever every pair is out of range.
    """
    start = time.perf_counter()
    c = instance.beta * instance.charging_demand.max(axis=0)
    over = c - instance.capacity_max
    if np.any(over > 0):
        i = int(np.argmax(over))
        raise InfeasibleProblemError(
            f"location {i} needs {c[i]:.6g} kW, above its maximum "
            f"{instance.capacity_max[i]:.6g}"
        )
    invest = float(c @ instance.unit_investment_cost)
    if invest > instance.budget:
        raise InfeasibleProblemError(
            f"baseline investment {invest:.6g} exceeds budget {instance.budget:.6g}"
        )
    inv = InvestmentPlan(c)
    asg = AssignmentPlan.zeros(instance)
    cost = evaluate_objective(instance, inv, asg)
    report = check_feasibility(instance, inv, asg, tol=1e-6)
    stats = {
        "method": "base",
        "backend": "closed_form",
        "iterations": 0,
        "wall_ms": 1000.0 * (time.perf_counter() - start),
    }
    return Solution(inv, asg, cost, report, stats)
