"""Shared builders for small, fully explicit test instances."""

from __future__ import annotations

import numpy as np
import pytest

from chargeplan.model import FORBIDDEN, PlanningInstance


def make_instance(
    flow,
    *,
    alpha=None,
    beta=1.0,
    assign_cost=None,
    delay=None,
    base_cost=1.0,
    location_cost=None,
    budget=1e12,
    capacity_max=None,
    recurrence=None,
    range_limit=10.0,
    distance=None,
    coordinates=None,
) -> PlanningInstance:
    """Instance with explicit flow and permissive defaults elsewhere."""
    flow = np.asarray(flow, dtype=float)
    T, n = flow.shape
    if alpha is None:
        alpha = np.ones((T, n))
    if assign_cost is None:
        assign_cost = np.ones((n, n))
        np.fill_diagonal(assign_cost, 0.0)
    if delay is None:
        delay = np.zeros((n, n), dtype=int)
    if location_cost is None:
        location_cost = np.zeros(n)
    if capacity_max is None:
        capacity_max = np.full(n, 1e9)
    if recurrence is None:
        recurrence = np.ones(T)
    return PlanningInstance(
        n_locations=n,
        n_slots=T,
        flow=flow,
        alpha=np.asarray(alpha, dtype=float),
        beta=beta,
        assign_cost=np.asarray(assign_cost, dtype=float),
        delay=np.asarray(delay, dtype=int),
        base_cost=base_cost,
        location_cost=np.asarray(location_cost, dtype=float),
        budget=budget,
        capacity_max=np.asarray(capacity_max, dtype=float),
        recurrence=np.asarray(recurrence, dtype=float),
        range_limit=range_limit,
        distance=distance,
        coordinates=coordinates,
    )


def random_instance(rng: np.random.Generator, n=3, T=4, forbid_frac=0.3, **kw):
    """Random small instance with integer flows and some forbidden pairs."""
    flow = rng.integers(0, 4, size=(T, n)).astype(float)
    cost = rng.uniform(0.1, 2.0, size=(n, n))
    np.fill_diagonal(cost, 0.0)
    off = ~np.eye(n, dtype=bool)
    forbid = off & (rng.random((n, n)) < forbid_frac)
    cost[forbid] = FORBIDDEN
    delay = rng.integers(0, min(T, 3), size=(n, n))
    np.fill_diagonal(delay, 0)
    defaults = dict(
        alpha=np.ones((T, n)),
        beta=float(rng.uniform(0.5, 2.0)),
        assign_cost=cost,
        delay=delay,
        base_cost=float(rng.uniform(0.5, 2.0)),
        location_cost=rng.uniform(0.0, 1.0, size=n),
        recurrence=rng.uniform(0.5, 2.0, size=T),
    )
    defaults.update(kw)
    return make_instance(flow, **defaults)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
