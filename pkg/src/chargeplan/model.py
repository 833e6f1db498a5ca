"""Core domain types for the joint charging-investment / EV-assignment problem.

The planning problem couples a one-time capacity investment decision ``c_i``
(kW at each location) with recurring assignment decisions ``z[t, i, j]``
(EVs redirected from location ``i`` to ``j`` in slot ``t``).  All types here
are immutable after construction and all operations are pure functions, so
they are safe to share across threads.

Pairs that are out of assignment range are encoded as structural zeros via
the ``FORBIDDEN`` cost marker (``math.inf``) rather than big-M costs, which
keeps the resulting LP well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Marker for assignment-cost cells where redirection is not allowed
#: (distance at or beyond the range limit).
FORBIDDEN = math.inf


class InfeasibleProblemError(Exception):
    """Raised when a solve path proves the instance has no feasible plan."""


class ConvergenceError(Exception):
    """Raised when an iterative solver exhausts its iteration budget."""


def _readonly(a, dtype=float) -> np.ndarray:
    out = np.asarray(a, dtype=dtype).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PlanningInstance:
    """Immutable problem data for one planning run.

    Matrices indexed over time use shape ``(n_slots, n_locations)``;
    pairwise matrices use shape ``(n_locations, n_locations)`` with the
    first index as the origin.  ``assign_cost[i, j]`` is the currency cost
    of redirecting one EV from ``i`` to ``j`` (``FORBIDDEN`` when out of
    range, exactly 0 on the diagonal).  ``delay[j, i]`` is the whole number
    of slots an EV needs to travel from ``j`` to ``i``.

    ``distance`` and ``coordinates`` are optional provenance payloads:
    raw pairwise kilometres (needed to re-derive costs when sweeping the
    range limit) and per-location (lon, lat) or (x, y) points (needed for
    spatial reports).
    """

    n_locations: int
    n_slots: int
    flow: np.ndarray
    alpha: np.ndarray
    beta: float
    assign_cost: np.ndarray
    delay: np.ndarray
    base_cost: float
    location_cost: np.ndarray
    budget: float
    capacity_max: np.ndarray
    recurrence: np.ndarray
    range_limit: float
    distance: np.ndarray | None = None
    coordinates: np.ndarray | None = None

    def __post_init__(self):
        n, T = int(self.n_locations), int(self.n_slots)
        if n <= 0 or T <= 0:
            raise ValueError("n_locations and n_slots must be positive")
        object.__setattr__(self, "n_locations", n)
        object.__setattr__(self, "n_slots", T)
        object.__setattr__(self, "flow", _readonly(self.flow))
        object.__setattr__(self, "alpha", _readonly(self.alpha))
        object.__setattr__(self, "assign_cost", _readonly(self.assign_cost))
        object.__setattr__(self, "delay", _readonly(self.delay, dtype=int))
        object.__setattr__(self, "location_cost", _readonly(self.location_cost))
        object.__setattr__(self, "capacity_max", _readonly(self.capacity_max))
        object.__setattr__(self, "recurrence", _readonly(self.recurrence))
        if self.distance is not None:
            object.__setattr__(self, "distance", _readonly(self.distance))
        if self.coordinates is not None:
            object.__setattr__(self, "coordinates", _readonly(self.coordinates))
        self._validate()

    def _validate(self):
        n, T = self.n_locations, self.n_slots
        if self.flow.shape != (T, n):
            raise ValueError(f"flow must have shape ({T}, {n}), got {self.flow.shape}")
        if self.alpha.shape != (T, n):
            raise ValueError(f"alpha must have shape ({T}, {n}), got {self.alpha.shape}")
        if self.assign_cost.shape != (n, n):
            raise ValueError("assign_cost must be square over locations")
        if self.delay.shape != (n, n):
            raise ValueError("delay must be square over locations")
        if self.location_cost.shape != (n,):
            raise ValueError("location_cost must have one entry per location")
        if self.capacity_max.shape != (n,):
            raise ValueError("capacity_max must have one entry per location")
        if self.recurrence.shape != (T,):
            raise ValueError("recurrence must have one entry per slot")
        if np.any(self.flow < 0):
            raise ValueError("flow entries must be non-negative")
        if np.any((self.alpha < 0) | (self.alpha > 1)):
            raise ValueError("alpha entries must lie in [0, 1]")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if np.any(np.diagonal(self.assign_cost) != 0):
            raise ValueError("assign_cost diagonal must be exactly 0")
        finite = np.isfinite(self.assign_cost)
        if np.any(self.assign_cost[finite] < 0):
            raise ValueError("assign_cost entries must be non-negative")
        if np.any(np.diagonal(self.delay) != 0):
            raise ValueError("delay diagonal must be 0")
        if np.any(self.delay < 0) or np.any(self.delay >= self.n_slots):
            raise ValueError("delay entries must lie in [0, n_slots)")
        if self.base_cost < 0 or np.any(self.location_cost < 0):
            raise ValueError("investment costs must be non-negative")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if np.any(self.capacity_max < 0):
            raise ValueError("capacity_max must be non-negative")
        if np.any(self.recurrence < 0):
            raise ValueError("recurrence must be non-negative")
        if self.distance is not None and self.distance.shape != (n, n):
            raise ValueError("distance must be square over locations")
        if self.coordinates is not None and self.coordinates.shape != (n, 2):
            raise ValueError("coordinates must have shape (n_locations, 2)")

    @property
    def charging_demand(self) -> np.ndarray:
        """Elementwise ``alpha * flow``: EVs requiring charge per (slot, location)."""
        return self.alpha * self.flow

    @property
    def unit_investment_cost(self) -> np.ndarray:
        """Per-kW investment cost ``base_cost + location_cost`` per location."""
        return self.base_cost + self.location_cost

    def forbidden_mask(self) -> np.ndarray:
        """Boolean (n, n) mask of pairs where assignment is structurally zero.

        Includes the diagonal: self-assignment is always forbidden.
        """
        mask = ~np.isfinite(self.assign_cost)
        np.fill_diagonal(mask, True)
        return mask


@dataclass(frozen=True)
class InvestmentPlan:
    """Installed charging capacity (kW) per location."""

    capacity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "capacity", _readonly(self.capacity))
        if self.capacity.ndim != 1:
            raise ValueError("capacity must be a vector")
        if not np.all(np.isfinite(self.capacity)):
            raise ValueError("capacity entries must be finite")

    @staticmethod
    def zeros(instance: PlanningInstance) -> "InvestmentPlan":
        return InvestmentPlan(np.zeros(instance.n_locations))


@dataclass(frozen=True)
class AssignmentPlan:
    """EV redirections ``z[t, i, j]`` (continuous-relaxed vehicle counts).

    Stored dense for vectorised evaluation; cells on the diagonal or on
    range-forbidden pairs are required to stay exactly zero and are rejected
    by :func:`evaluate_objective` when violated.
    """

    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _readonly(self.z))
        if self.z.ndim != 3 or self.z.shape[1] != self.z.shape[2]:
            raise ValueError("z must have shape (n_slots, n, n)")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("z entries must be finite")

    @staticmethod
    def zeros(instance: PlanningInstance) -> "AssignmentPlan":
        n, T = instance.n_locations, instance.n_slots
        return AssignmentPlan(np.zeros((T, n, n)))

    def nonzero_triplets(self, atol: float = 0.0):
        """Yield (t, i, j, value) for entries with |value| > atol."""
        ts, is_, js = np.nonzero(np.abs(self.z) > atol)
        for t, i, j in zip(ts.tolist(), is_.tolist(), js.tolist()):
            yield t, i, j, float(self.z[t, i, j])


@dataclass(frozen=True)
class CostBreakdown:
    """Objective value split into its two components (currency)."""

    investment: float
    assignment: float
    total: float


@dataclass(frozen=True)
class ConstraintResidual:
    """Worst violation of one constraint family, in its natural units."""

    violation: float
    where: tuple | None  # offending indices, or None when clean


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-constraint worst residuals for an (investment, assignment) pair.

    Residual units are raw: budget in currency, capacity families in kW,
    flow families in EV counts.  ``feasible`` holds exactly when every
    residual is at most ``tol``.
    """

    residuals: dict[str, ConstraintResidual]
    tol: float
    feasible: bool = field(init=False)

    def __post_init__(self):
        ok = all(r.violation <= self.tol for r in self.residuals.values())
        object.__setattr__(self, "feasible", ok)

    def max_violation(self) -> float:
        return max(r.violation for r in self.residuals.values())


@dataclass(frozen=True)
class Solution:
    """Plans plus evaluated cost, feasibility report, and solver statistics."""

    investment: InvestmentPlan
    assignment: AssignmentPlan
    cost: CostBreakdown
    feasibility: FeasibilityReport
    stats: dict


def delayed_inflow(z: np.ndarray, delay: np.ndarray) -> np.ndarray:
    """Total EVs arriving at each (slot, location), accounting for travel delay.

    ``inflow[t, i] = sum_j z[(t - delay[j, i]) mod T, j, i]``.  The slot index
    wraps cyclically: the horizon is treated as one period of a recurring
    cycle, so departures late in the horizon arrive at its start.
    """
    T, n, _ = z.shape
    inflow = np.zeros((T, n))
    base = np.arange(T)
    for j in range(n):
        for i in range(n):
            tau = int(delay[j, i])
            if tau == 0:
                inflow[:, i] += z[:, j, i]
            else:
                inflow[:, i] += z[(base - tau) % T, j, i]
    return inflow


def net_demand_matrix(instance: PlanningInstance, asg: AssignmentPlan) -> np.ndarray:
    """Delay-aware net charging demand (EV counts) for every (slot, location)."""
    outflow = asg.z.sum(axis=2)
    inflow = delayed_inflow(asg.z, instance.delay)
    return instance.charging_demand - outflow + inflow


def net_charging_demand(
    instance: PlanningInstance, asg: AssignmentPlan, i: int, t: int
) -> float:
    """Net charging demand at location ``i`` in slot ``t`` under ``asg``.

    Local demand ``alpha[t, i] * flow[t, i]`` minus EVs redirected away in
    slot ``t``, plus EVs from elsewhere that were dispatched ``delay[j, i]``
    slots earlier (cyclic wrap modulo ``n_slots``).
    """
    n, T = instance.n_locations, instance.n_slots
    if not (0 <= i < n and 0 <= t < T):
        raise IndexError(f"index (i={i}, t={t}) out of bounds")
    demand = instance.charging_demand[t, i] - asg.z[t, i, :].sum()
    for j in range(n):
        demand += asg.z[(t - int(instance.delay[j, i])) % T, j, i]
    return float(demand)


def evaluate_objective(
    instance: PlanningInstance, inv: InvestmentPlan, asg: AssignmentPlan
) -> CostBreakdown:
    """Evaluate the joint objective for a pair of plans.

    investment = sum_i c_i * (base_cost + location_cost_i)
    assignment = sum_t recurrence_t * sum_ij z[t, i, j] * assign_cost[i, j]

    Raises ``ValueError`` on dimension mismatch or if any structurally-zero
    cell (diagonal or forbidden pair) carries a nonzero assignment.
    """
    n, T = instance.n_locations, instance.n_slots
    if inv.capacity.shape != (n,):
        raise ValueError("investment plan does not match instance dimensions")
    if asg.z.shape != (T, n, n):
        raise ValueError("assignment plan does not match instance dimensions")
    mask = instance.forbidden_mask()
    if np.any(asg.z[:, mask] != 0):
        bad = np.argwhere(asg.z[:, mask] != 0)
        raise ValueError(
            f"nonzero assignment on a forbidden or diagonal cell (first at {bad[0]})"
        )
    investment = float(inv.capacity @ instance.unit_investment_cost)
    cost = np.where(mask, 0.0, instance.assign_cost)
    per_slot = np.einsum("tij,ij->t", asg.z, cost)
    assignment = float(instance.recurrence @ per_slot)
    return CostBreakdown(investment, assignment, investment + assignment)


def check_feasibility(
    instance: PlanningInstance,
    inv: InvestmentPlan,
    asg: AssignmentPlan,
    tol: float = 1e-6,
) -> FeasibilityReport:
    """Compute worst residuals of every constraint family.

    Always returns a report; never raises on infeasible plans.  Each residual
    is ``max(0, lhs - rhs)`` in the constraint's natural units, together with
    the offending indices of the worst violation.
    """
    n, T = instance.n_locations, instance.n_slots
    c, z = inv.capacity, asg.z
    res: dict[str, ConstraintResidual] = {}

    def worst(values: np.ndarray) -> ConstraintResidual:
        v = float(values.max(initial=0.0))
        if v <= 0:
            return ConstraintResidual(0.0, None)
        idx = np.unravel_index(int(np.argmax(values)), values.shape)
        return ConstraintResidual(v, tuple(int(k) for k in idx))

    invest = float(c @ instance.unit_investment_cost)
    res["budget"] = ConstraintResidual(max(0.0, invest - instance.budget), None)

    over = c - instance.capacity_max
    under = -c
    res["capacity_bounds"] = worst(np.maximum(over, under))

    outflow = z.sum(axis=2)  # (T, n)
    res["flow_conservation"] = worst(outflow - instance.charging_demand)

    net = net_demand_matrix(instance, asg)
    load = instance.beta * net
    upper = load - c[None, :]
    lower = -load
    res["capacity_satisfaction"] = worst(np.maximum(upper, lower))

    res["non_negativity"] = worst(-z)

    diag = np.abs(z[:, np.arange(n), np.arange(n)])
    res["diagonal"] = worst(diag)

    forbidden = ~np.isfinite(instance.assign_cost)
    if forbidden.any():
        res["range"] = worst(np.abs(z[:, forbidden]))
    else:
        res["range"] = ConstraintResidual(0.0, None)

    return FeasibilityReport(res, tol)
