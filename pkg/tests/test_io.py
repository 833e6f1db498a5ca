"""JSON round-trips for instances and solutions, plus version handling."""

import json

import numpy as np
import pytest

from chargeplan.central import solve_centralized
from chargeplan.datagen import GenParams, generate_instance
from chargeplan.io import (
    INSTANCE_VERSION,
    SOLUTION_VERSION,
    file_checksum,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_solution,
    save_instance,
    save_solution,
)
from chargeplan.model import FORBIDDEN

from conftest import make_instance, random_instance


def assert_instances_equal(a, b):
    assert a.n_locations == b.n_locations
    assert a.n_slots == b.n_slots
    np.testing.assert_array_equal(a.flow, b.flow)
    np.testing.assert_array_equal(a.alpha, b.alpha)
    assert a.beta == b.beta
    np.testing.assert_array_equal(a.assign_cost, b.assign_cost)
    np.testing.assert_array_equal(a.delay, b.delay)
    assert a.base_cost == b.base_cost
    np.testing.assert_array_equal(a.location_cost, b.location_cost)
    assert a.budget == b.budget
    np.testing.assert_array_equal(a.capacity_max, b.capacity_max)
    np.testing.assert_array_equal(a.recurrence, b.recurrence)
    assert a.range_limit == b.range_limit


class TestInstanceIO:
    def test_round_trip_with_forbidden_cells(self, tmp_path, rng):
        inst = random_instance(rng, forbid_frac=0.5)
        path = tmp_path / "instance.json"
        save_instance(inst, path)
        back = load_instance(path)
        assert_instances_equal(inst, back)

    def test_round_trip_with_optional_fields(self, tmp_path):
        inst = generate_instance(GenParams(n_locations=5, n_slots=12, seed=0))
        path = tmp_path / "instance.json"
        save_instance(inst, path)
        back = load_instance(path)
        np.testing.assert_array_equal(inst.distance, back.distance)
        np.testing.assert_array_equal(inst.coordinates, back.coordinates)

    def test_optional_fields_stay_optional(self, tmp_path):
        inst = make_instance(np.ones((2, 2)))
        path = tmp_path / "instance.json"
        save_instance(inst, path)
        doc = json.loads(path.read_text())
        assert "distance" not in doc
        assert "coordinates" not in doc
        assert load_instance(path).distance is None

    def test_forbidden_serialized_as_string(self):
        cost = np.array([[0.0, FORBIDDEN], [1.0, 0.0]])
        inst = make_instance(np.ones((1, 2)), assign_cost=cost)
        doc = instance_to_dict(inst)
        assert doc["assign_cost"][0][1] == "forbidden"
        assert doc["version"] == INSTANCE_VERSION
        back = instance_from_dict(doc)
        assert back.assign_cost[0, 1] == FORBIDDEN

    def test_wrong_version_rejected(self):
        inst = make_instance(np.ones((1, 1)))
        doc = instance_to_dict(inst)
        doc["version"] = "charge-plan-instance/99"
        with pytest.raises(ValueError, match="version"):
            instance_from_dict(doc)

    def test_save_is_deterministic(self, tmp_path, rng):
        inst = random_instance(rng)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(inst, p1)
        save_instance(inst, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert file_checksum(p1) == file_checksum(p2)


class TestSolutionIO:
    def test_round_trip_preserves_everything(self, tmp_path, rng):
        inst = random_instance(rng)
        sol = solve_centralized(inst)
        path = tmp_path / "solution.json"
        save_solution(sol, path, instance_checksum="abc123")
        back = load_solution(path)
        np.testing.assert_array_equal(back.investment.capacity, sol.investment.capacity)
        np.testing.assert_array_equal(back.assignment.z, sol.assignment.z)
        assert back.cost.total == sol.cost.total
        assert back.cost.investment == sol.cost.investment
        assert back.feasibility.feasible == sol.feasibility.feasible
        assert back.feasibility.tol == sol.feasibility.tol
        for name, res in sol.feasibility.residuals.items():
            assert back.feasibility.residuals[name].violation == res.violation
            assert back.feasibility.residuals[name].where == res.where
        assert back.stats["method"] == "centralized"

    def test_assignments_stored_sparsely(self, tmp_path, rng):
        inst = random_instance(rng)
        sol = solve_centralized(inst)
        path = tmp_path / "solution.json"
        save_solution(sol, path)
        doc = json.loads(path.read_text())
        assert doc["version"] == SOLUTION_VERSION
        nnz = int((sol.assignment.z != 0).sum())
        assert len(doc["assignments"]) == nnz
        for t, i, j, v in doc["assignments"]:
            assert sol.assignment.z[t, i, j] == v

    def test_checksum_embedded(self, tmp_path, rng):
        inst = random_instance(rng)
        ipath = tmp_path / "instance.json"
        save_instance(inst, ipath)
        sol = solve_centralized(inst)
        spath = tmp_path / "solution.json"
        save_solution(sol, spath, instance_checksum=file_checksum(ipath))
        doc = json.loads(spath.read_text())
        assert doc["instance_checksum"] == file_checksum(ipath)

    def test_wrong_version_rejected(self, tmp_path, rng):
        inst = random_instance(rng)
        sol = solve_centralized(inst)
        path = tmp_path / "solution.json"
        save_solution(sol, path)
        doc = json.loads(path.read_text())
        doc["version"] = "something-else/1"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="version"):
            load_solution(path)
