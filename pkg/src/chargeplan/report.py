"""Result reporting: GeoJSON feature collections, flat CSV tables, rounding.

Maps are emitted as data only (RFC 7946); drawing them is out of scope.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import (
    AssignmentPlan,
    PlanningInstance,
    Solution,
    check_feasibility,
    evaluate_objective,
)


def aggregate_flows(
    solution: Solution, window: tuple[int, int] | None = None
) -> np.ndarray:
    """Sum assignments over a half-open slot window into an (n, n) matrix."""
    z = solution.assignment.z
    if window is None:
        window = (0, z.shape[0])
    lo, hi = window
    if not (0 <= lo < hi <= z.shape[0]):
        raise ValueError(f"invalid slot window {window}")
    return z[lo:hi].sum(axis=0)


def solution_geojson(
    instance: PlanningInstance,
    solution: Solution,
    window: tuple[int, int] | None = None,
    flow_atol: float = 1e-9,
) -> dict:
    """RFC 7946 feature collection for one solution.

    One point feature per location (capacity, land cost, net assignments
    over the window; positive means the location sends EVs away) and one
    line feature per nonzero aggregated flow.
    """
    if instance.coordinates is None:
        raise ValueError("instance carries no coordinates; cannot build GeoJSON")
    if solution.assignment.z.shape[1] != instance.n_locations:
        raise ValueError("solution does not match instance dimensions")
    coords = instance.coordinates
    flows = aggregate_flows(solution, window)
    net_sent = flows.sum(axis=1) - flows.sum(axis=0)
    features = []
    for i in range(instance.n_locations):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": list(coords[i])},
                "properties": {
                    "location": i,
                    "capacity_kw": float(solution.investment.capacity[i]),
                    "location_cost": float(instance.location_cost[i]),
                    "net_assignments": float(net_sent[i]),
                },
            }
        )
    for i in range(instance.n_locations):
        for j in range(instance.n_locations):
            if flows[i, j] > flow_atol:
                features.append(
                    {
                        "type": "Feature",
                        "geometry": {
                            "type": "LineString",
                            "coordinates": [list(coords[i]), list(coords[j])],
                        },
                        "properties": {
                            "from": i,
                            "to": j,
                            "vehicles": float(flows[i, j]),
                        },
                    }
                )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(instance, solution, path, window=None) -> None:
    Path(path).write_text(json.dumps(solution_geojson(instance, solution, window)))


def write_csv_tables(
    instance: PlanningInstance,
    solution: Solution,
    out_dir,
    window: tuple[int, int] | None = None,
) -> tuple[Path, Path]:
    """Write locations.csv and flows.csv; returns their paths."""
    if solution.assignment.z.shape[1] != instance.n_locations:
        raise ValueError("solution does not match instance dimensions")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    flows = aggregate_flows(solution, window)
    net_sent = flows.sum(axis=1) - flows.sum(axis=0)
    has_coords = instance.coordinates is not None

    loc_path = out_dir / "locations.csv"
    with open(loc_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["location", "capacity_kw", "location_cost", "net_assignments"]
        if has_coords:
            header += ["x", "y"]
        writer.writerow(header)
        for i in range(instance.n_locations):
            row = [
                i,
                f"{solution.investment.capacity[i]:.9g}",
                f"{instance.location_cost[i]:.9g}",
                f"{net_sent[i]:.9g}",
            ]
            if has_coords:
                row += [
                    f"{instance.coordinates[i, 0]:.9g}",
                    f"{instance.coordinates[i, 1]:.9g}",
                ]
            writer.writerow(row)

    flow_path = out_dir / "flows.csv"
    with open(flow_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to", "vehicles"])
        for i in range(instance.n_locations):
            for j in range(instance.n_locations):
                if flows[i, j] > 1e-9:
                    writer.writerow([i, j, f"{flows[i, j]:.9g}"])
    return loc_path, flow_path


def round_assignments(instance: PlanningInstance, solution: Solution) -> Solution:
    """Integer-rounded assignment variant with a fresh feasibility check.

    Capacities are kept; only z is rounded to the nearest integer, so the
    recheck quantifies how much feasibility degrades under integral flows.
    """
    z = np.rint(solution.assignment.z)
    inv = solution.investment
    asg = AssignmentPlan(z)
    cost = evaluate_objective(instance, inv, asg)
    report = check_feasibility(instance, inv, asg, tol=solution.feasibility.tol)
    stats = dict(solution.stats)
    stats["rounded"] = True
    return Solution(inv, asg, cost, report, stats)
