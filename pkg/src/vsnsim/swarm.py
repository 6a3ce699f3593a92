"""Substrate swarm model: sensor placement, geometric connectivity, capacities.

A swarm is a random geometric graph over the unit square: two sensors are
linked whenever their Euclidean distance is at most the transmission radius.
The module also provides the per-sensor contact-probability rows used by the
gossip engine (uniform over self plus neighbors) and hop-count queries.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sensor:
    """One participatory sensor: index, planar position, sensing capacity."""

    id: int
    position: tuple[float, float]
    capacity: float

    def __post_init__(self) -> None:
        x, y = self.position
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ValueError(f"sensor {self.id}: position {self.position} outside the unit square")
        if not self.capacity > 0.0:
            raise ValueError(f"sensor {self.id}: capacity must be positive, got {self.capacity}")

    def distance_to(self, point: tuple[float, float]) -> float:
        return math.hypot(self.position[0] - point[0], self.position[1] - point[1])


@dataclass(frozen=True)
class TransitionRow:
    """Contact probabilities of one sensor: 1/(deg+1) on itself and each neighbor."""

    owner: int
    entries: dict[int, float]

    def support(self) -> set[int]:
        return set(self.entries)


class Swarm:
    """Immutable geometric random graph of sensors.

    Adjacency is derived once from positions and the radius; instances are
    safe to share read-only across concurrently running simulations.
    """

    def __init__(self, sensors: list[Sensor], radius: float):
        if not sensors:
            raise ValueError("swarm needs at least one sensor")
        if not radius > 0.0:
            raise ValueError(f"radius must be positive, got {radius}")
        for idx, s in enumerate(sensors):
            if s.id != idx:
                raise ValueError(f"sensor ids must be 0..P-1 in order; got id {s.id} at index {idx}")
        self.sensors: tuple[Sensor, ...] = tuple(sensors)
        self.radius = float(radius)
        self._positions = np.array([s.position for s in sensors], dtype=float)
        self._neighbors = self._build_adjacency()
        self._hops_cache: dict[int, np.ndarray] = {}

    def _build_adjacency(self) -> tuple[tuple[int, ...], ...]:
        pos = self._positions
        diff = pos[:, None, :] - pos[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        within = dist2 <= self.radius * self.radius + 0.0
        np.fill_diagonal(within, False)
        return tuple(tuple(np.flatnonzero(row).tolist()) for row in within)

    def __len__(self) -> int:
        return len(self.sensors)

    @property
    def count(self) -> int:
        return len(self.sensors)

    def ids(self) -> range:
        return range(len(self.sensors))

    def neighbors(self, i: int) -> tuple[int, ...]:
        self._check_id(i)
        return self._neighbors[i]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def edges(self) -> set[tuple[int, int]]:
        """Symmetric edge set as (i, j) pairs with i < j."""
        return {(i, j) for i in self.ids() for j in self._neighbors[i] if i < j}

    def _check_id(self, i: int) -> None:
        if not isinstance(i, (int, np.integer)) or not (0 <= i < len(self.sensors)):
            raise ValueError(f"unknown sensor id {i!r}")

    def hops_from(self, i: int) -> np.ndarray:
        """BFS hop counts from sensor i to every sensor; -1 where unreachable."""
        self._check_id(i)
        cached = self._hops_cache.get(i)
        if cached is not None:
            return cached
        dist = np.full(len(self.sensors), -1, dtype=int)
        dist[i] = 0
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for w in self._neighbors[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        self._hops_cache[i] = dist
        return dist

    def to_json(self) -> str:
        doc = {
            "radius": self.radius,
            "sensors": [
                {"id": s.id, "position": [s.position[0], s.position[1]], "capacity": s.capacity}
                for s in self.sensors
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Swarm":
        doc = json.loads(text)
        sensors = [
            Sensor(id=int(e["id"]), position=(float(e["position"][0]), float(e["position"][1])),
                   capacity=float(e["capacity"]))
            for e in sorted(doc["sensors"], key=lambda e: int(e["id"]))
        ]
        return cls(sensors, float(doc["radius"]))


def generate_swarm(count: int, radius: float, capacity_low: float, capacity_high: float,
                   seed: int) -> Swarm:
    """Generate a seeded swarm: uniform positions on the unit square, uniform capacities."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if capacity_low > capacity_high:
        raise ValueError(f"capacity_low {capacity_low} exceeds capacity_high {capacity_high}")
    if not capacity_low > 0.0:
        raise ValueError(f"capacities must be positive, got capacity_low {capacity_low}")
    rng = np.random.default_rng(seed)
    positions = rng.random((count, 2))
    capacities = rng.uniform(capacity_low, capacity_high, count)
    sensors = [
        Sensor(id=i, position=(float(positions[i, 0]), float(positions[i, 1])),
               capacity=float(capacities[i]))
        for i in range(count)
    ]
    return Swarm(sensors, radius)


def transition_row(swarm: Swarm, i: int) -> TransitionRow:
    """Uniform contact row of sensor i: probability 1/(deg(i)+1) on itself and each neighbor."""
    nbrs = swarm.neighbors(i)
    p = 1.0 / (len(nbrs) + 1)
    entries = {i: p}
    for j in nbrs:
        entries[j] = p
    return TransitionRow(owner=i, entries=entries)


def shortest_hops(swarm: Swarm, i: int, j: int) -> int | None:
    """Shortest path length in hops between i and j; None if disconnected."""
    swarm._check_id(j)
    d = int(swarm.hops_from(i)[j])
    return d if d >= 0 else None
