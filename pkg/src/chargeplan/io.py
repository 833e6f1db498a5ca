"""JSON serialization for instances and solutions.

Instance documents carry the version tag ``charge-plan-instance/1`` and name
fields exactly as on :class:`~chargeplan.model.PlanningInstance`.  Matrices
are row-major nested arrays; forbidden assignment-cost cells are written as
the string ``"forbidden"``.  Solution documents (``charge-plan-solution/1``)
store assignments sparsely as (t, i, j, value) triplets and embed a checksum
of the instance file so mismatched reporting can be detected.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .model import (
    FORBIDDEN,
    AssignmentPlan,
    ConstraintResidual,
    CostBreakdown,
    FeasibilityReport,
    InvestmentPlan,
    PlanningInstance,
    Solution,
)

INSTANCE_VERSION = "charge-plan-instance/1"
SOLUTION_VERSION = "charge-plan-solution/1"


def instance_to_dict(instance: PlanningInstance) -> dict:
    cost_rows = []
    for row in instance.assign_cost:
        cost_rows.append(
            ["forbidden" if math.isinf(v) else v for v in row.tolist()]
        )
    doc = {
        "version": INSTANCE_VERSION,
        "n_locations": instance.n_locations,
        "n_slots": instance.n_slots,
        "flow": instance.flow.tolist(),
        "alpha": instance.alpha.tolist(),
        "beta": instance.beta,
        "assign_cost": cost_rows,
        "delay": instance.delay.tolist(),
        "base_cost": instance.base_cost,
        "location_cost": instance.location_cost.tolist(),
        "budget": instance.budget,
        "capacity_max": instance.capacity_max.tolist(),
        "recurrence": instance.recurrence.tolist(),
        "range_limit": instance.range_limit,
    }
    if instance.distance is not None:
        doc["distance"] = instance.distance.tolist()
    if instance.coordinates is not None:
        doc["coordinates"] = instance.coordinates.tolist()
    return doc


def instance_from_dict(doc: dict) -> PlanningInstance:
    version = doc.get("version")
    if version != INSTANCE_VERSION:
        raise ValueError(f"unsupported instance version: {version!r}")
    cost = np.array(
        [
            [FORBIDDEN if v == "forbidden" else float(v) for v in row]
            for row in doc["assign_cost"]
        ]
    )
    return PlanningInstance(
        n_locations=doc["n_locations"],
        n_slots=doc["n_slots"],
        flow=np.array(doc["flow"], dtype=float),
        alpha=np.array(doc["alpha"], dtype=float),
        beta=float(doc["beta"]),
        assign_cost=cost,
        delay=np.array(doc["delay"], dtype=int),
        base_cost=float(doc["base_cost"]),
        location_cost=np.array(doc["location_cost"], dtype=float),
        budget=float(doc["budget"]),
        capacity_max=np.array(doc["capacity_max"], dtype=float),
        recurrence=np.array(doc["recurrence"], dtype=float),
        range_limit=float(doc["range_limit"]),
        distance=np.array(doc["distance"], dtype=float) if "distance" in doc else None,
        coordinates=(
            np.array(doc["coordinates"], dtype=float) if "coordinates" in doc else None
        ),
    )


def save_instance(instance: PlanningInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1))


def load_instance(path) -> PlanningInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def solution_to_dict(solution: Solution, instance_checksum: str | None = None) -> dict:
    triplets = [
        [t, i, j, v] for t, i, j, v in solution.assignment.nonzero_triplets()
    ]
    return {
        "version": SOLUTION_VERSION,
        "capacity": solution.investment.capacity.tolist(),
        "assignments": triplets,
        "n_slots": int(solution.assignment.z.shape[0]),
        "n_locations": int(solution.assignment.z.shape[1]),
        "cost": {
            "investment": solution.cost.investment,
            "assignment": solution.cost.assignment,
            "total": solution.cost.total,
        },
        "feasibility": {
            "tol": solution.feasibility.tol,
            "feasible": solution.feasibility.feasible,
            "residuals": {
                name: {"violation": r.violation, "where": list(r.where) if r.where else None}
                for name, r in solution.feasibility.residuals.items()
            },
        },
        "stats": solution.stats,
        "instance_checksum": instance_checksum,
    }


def solution_from_dict(doc: dict) -> Solution:
    version = doc.get("version")
    if version != SOLUTION_VERSION:
        raise ValueError(f"unsupported solution version: {version!r}")
    n, T = doc["n_locations"], doc["n_slots"]
    z = np.zeros((T, n, n))
    for t, i, j, v in doc["assignments"]:
        z[t, i, j] = v
    residuals = {
        name: ConstraintResidual(r["violation"], tuple(r["where"]) if r["where"] else None)
        for name, r in doc["feasibility"]["residuals"].items()
    }
    return Solution(
        investment=InvestmentPlan(np.array(doc["capacity"], dtype=float)),
        assignment=AssignmentPlan(z),
        cost=CostBreakdown(**doc["cost"]),
        feasibility=FeasibilityReport(residuals, doc["feasibility"]["tol"]),
        stats=doc.get("stats", {}),
    )


def save_solution(solution: Solution, path, instance_checksum: str | None = None) -> None:
    Path(path).write_text(
        json.dumps(solution_to_dict(solution, instance_checksum), indent=1)
    )


def load_solution(path) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()))
