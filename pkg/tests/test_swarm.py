import json
import math

import numpy as np
import pytest

from vsnsim.swarm import Sensor, Swarm, generate_swarm, shortest_hops, transition_row


def make_swarm(positions, radius, capacity=10.0):
    sensors = [Sensor(id=i, position=p, capacity=capacity) for i, p in enumerate(positions)]
    return Swarm(sensors, radius)


def enumerate_shortest(swarm, src, dst):
    """Brute-force oracle: minimum length over all simple paths."""
    best = None
    stack = [(src, 0, {src})]
    while stack:
        node, depth, seen = stack.pop()
        if node == dst:
            if best is None or depth < best:
                best = depth
            continue
        for nxt in swarm.neighbors(node):
            if nxt not in seen:
                stack.append((nxt, depth + 1, seen | {nxt}))
    return best


class TestGeometry:
    def test_edge_within_radius(self):
        swarm = make_swarm([(0.5, 0.5), (0.55, 0.5)], radius=0.1)
        assert (0, 1) in swarm.edges()

    def test_no_edge_beyond_radius(self):
        swarm = make_swarm([(0.5, 0.5), (0.65, 0.5)], radius=0.1)
        assert swarm.edges() == set()

    def test_adjacency_matches_pairwise_check(self):
        swarm = generate_swarm(60, 0.2, 1.0, 2.0, seed=3)
        expected = set()
        for i in range(60):
            for j in range(i + 1, 60):
                d = math.dist(swarm.sensors[i].position, swarm.sensors[j].position)
                if d <= 0.2:
                    expected.add((i, j))
        assert swarm.edges() == expected

    def test_generation_is_deterministic(self):
        a = generate_swarm(100, 0.1, 50, 100, seed=7)
        b = generate_swarm(100, 0.1, 50, 100, seed=7)
        assert a.edges() == b.edges()
        assert all(s1.position == s2.position and s1.capacity == s2.capacity
                   for s1, s2 in zip(a.sensors, b.sensors))

    def test_capacities_within_range(self):
        swarm = generate_swarm(200, 0.1, 50, 100, seed=1)
        caps = [s.capacity for s in swarm.sensors]
        assert min(caps) >= 50 and max(caps) <= 100

    @pytest.mark.parametrize("count,radius", [(0, 0.1), (-3, 0.1), (5, 0.0), (5, -1.0)])
    def test_invalid_generation_arguments(self, count, radius):
        with pytest.raises(ValueError):
            generate_swarm(count, radius, 1.0, 2.0, seed=0)

    def test_invalid_capacity_range(self):
        with pytest.raises(ValueError):
            generate_swarm(5, 0.1, 10.0, 5.0, seed=0)
        with pytest.raises(ValueError):
            generate_swarm(5, 0.1, 0.0, 5.0, seed=0)

    def test_sensor_validation(self):
        with pytest.raises(ValueError):
            Sensor(id=0, position=(1.5, 0.0), capacity=1.0)
        with pytest.raises(ValueError):
            Sensor(id=0, position=(0.5, 0.5), capacity=0.0)


class TestTransitionRow:
    def test_three_neighbors_gives_quarter(self):
        swarm = make_swarm([(0.5, 0.5), (0.55, 0.5), (0.5, 0.55), (0.45, 0.5)], radius=0.12)
        row = transition_row(swarm, 0)
        assert row.entries == {0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25}

    def test_isolated_sensor_self_one(self):
        swarm = make_swarm([(0.1, 0.1), (0.9, 0.9)], radius=0.1)
        row = transition_row(swarm, 0)
        assert row.entries == {0: 1.0}

    def test_path_middle_node_thirds(self):
        swarm = make_swarm([(0.1, 0.5), (0.2, 0.5), (0.3, 0.5)], radius=0.12)
        row = transition_row(swarm, 1)
        assert row.entries == pytest.approx({0: 1 / 3, 1: 1 / 3, 2: 1 / 3})

    def test_rows_sum_to_one_and_support(self):
        swarm = generate_swarm(80, 0.15, 1.0, 2.0, seed=11)
        for i in swarm.ids():
            row = transition_row(swarm, i)
            assert sum(row.entries.values()) == pytest.approx(1.0, abs=1e-12)
            assert row.support() == {i} | set(swarm.neighbors(i))
            assert all(p >= 0 for p in row.entries.values())

    def test_unknown_id_rejected(self):
        swarm = make_swarm([(0.5, 0.5)], radius=0.1)
        with pytest.raises(ValueError):
            transition_row(swarm, 5)


class TestShortestHops:
    def test_adjacent_pair(self):
        swarm = make_swarm([(0.1, 0.5), (0.18, 0.5)], radius=0.1)
        assert shortest_hops(swarm, 0, 1) == 1

    def test_self_distance_zero(self):
        swarm = make_swarm([(0.1, 0.5), (0.18, 0.5)], radius=0.1)
        assert shortest_hops(swarm, 0, 0) == 0

    def test_disconnected_is_none(self):
        swarm = make_swarm([(0.1, 0.1), (0.9, 0.9)], radius=0.1)
        assert shortest_hops(swarm, 0, 1) is None

    def test_matches_path_enumeration_on_small_swarms(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            count = int(rng.integers(2, 9))
            swarm = generate_swarm(count, 0.35, 1.0, 2.0, seed=100 + trial)
            for i in range(count):
                for j in range(count):
                    assert shortest_hops(swarm, i, j) == enumerate_shortest(swarm, i, j)


class TestSerialization:
    def test_json_round_trip(self):
        swarm = generate_swarm(40, 0.12, 50, 100, seed=9)
        clone = Swarm.from_json(swarm.to_json())
        assert clone.radius == swarm.radius
        assert clone.edges() == swarm.edges()
        for a, b in zip(swarm.sensors, clone.sensors):
            assert a == b

    def test_json_is_valid_document(self):
        swarm = generate_swarm(3, 0.2, 1.0, 2.0, seed=0)
        doc = json.loads(swarm.to_json())
        assert {"radius", "sensors"} <= set(doc)
        assert len(doc["sensors"]) == 3
