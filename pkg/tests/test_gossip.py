import math

import numpy as np
import pytest

from vsnsim.gossip import (EpidemicSpread, GossipMessage, ProtocolHook, default_max_slots,
                           run_protocol, schedule_slot)
from vsnsim.swarm import Sensor, Swarm, generate_swarm


def path_swarm(count, spacing=0.08, radius=0.1):
    sensors = [Sensor(id=i, position=(0.05 + i * spacing, 0.5), capacity=1.0)
               for i in range(count)]
    return Swarm(sensors, radius)


def connected_swarm(count, radius, seed_start=0):
    """First seeded swarm (scanning seeds) whose graph is connected."""
    for seed in range(seed_start, seed_start + 200):
        swarm = generate_swarm(count, radius, 1.0, 2.0, seed=seed)
        if np.all(swarm.hops_from(0) >= 0):
            return swarm
    raise AssertionError("no connected swarm found")


class NullProtocol(ProtocolHook):
    def __init__(self, swarm):
        super().__init__(swarm.ids())
        self._active.clear()

    def on_contact(self, initiator, target):
        return []


class TestScheduleSlot:
    def test_empty_active_set(self):
        swarm = path_swarm(3)
        assert schedule_slot(swarm, set(), np.random.default_rng(0)) == []

    def test_isolated_sensor_never_contacts(self):
        swarm = Swarm([Sensor(0, (0.1, 0.1), 1.0), Sensor(1, (0.9, 0.9), 1.0)], 0.1)
        for seed in range(20):
            assert schedule_slot(swarm, {0}, np.random.default_rng(seed)) == []

    def test_deterministic_under_seed(self):
        swarm = path_swarm(2)
        a = [schedule_slot(swarm, {0, 1}, np.random.default_rng(42)) for _ in range(1)]
        b = [schedule_slot(swarm, {0, 1}, np.random.default_rng(42)) for _ in range(1)]
        assert a == b

    def test_contacts_only_neighbors(self):
        swarm = path_swarm(5)
        for seed in range(30):
            for i, j in schedule_slot(swarm, set(swarm.ids()), np.random.default_rng(seed)):
                assert j in swarm.neighbors(i)


class TestRunProtocol:
    def test_inactive_protocol_stops_immediately(self):
        swarm = path_swarm(3)
        trace = run_protocol(swarm, NullProtocol(swarm), rng=0)
        assert trace.slots_used == 0
        assert trace.total_messages == 0
        assert not trace.timed_out

    def test_epidemic_on_path_informs_all(self):
        swarm = path_swarm(3)
        protocol = EpidemicSpread(swarm, seeds=[0])
        trace = run_protocol(swarm, protocol, rng=1)
        assert protocol.informed == {0, 1, 2}
        assert trace.slots_used >= 2  # two hops cannot be covered in one slot
        assert protocol.spread_slot() >= 2

    def test_epidemic_covers_connected_swarm(self):
        swarm = connected_swarm(50, 0.25)
        protocol = EpidemicSpread(swarm, seeds=[7])
        trace = run_protocol(swarm, protocol, max_slots=default_max_slots(50), rng=3)
        assert protocol.informed == set(swarm.ids())
        assert not trace.timed_out

    def test_epidemic_stops_at_component(self):
        swarm = Swarm([Sensor(0, (0.1, 0.1), 1.0), Sensor(1, (0.15, 0.1), 1.0),
                       Sensor(2, (0.9, 0.9), 1.0)], 0.1)
        protocol = EpidemicSpread(swarm, seeds=[0])
        trace = run_protocol(swarm, protocol, rng=0)
        assert protocol.informed == {0, 1}
        assert not trace.timed_out  # unreachable sensors do not hold the engine open

    def test_trace_is_deterministic(self):
        swarm = generate_swarm(40, 0.2, 1.0, 2.0, seed=5)
        traces = []
        for _ in range(2):
            protocol = EpidemicSpread(swarm, seeds=[3])
            traces.append(run_protocol(swarm, protocol, rng=11))
        assert traces[0].slots_used == traces[1].slots_used
        assert traces[0].total_messages == traces[1].total_messages
        assert np.array_equal(traces[0].messages_per_sensor, traces[1].messages_per_sensor)

    def test_message_conservation(self):
        swarm = connected_swarm(30, 0.25)

        class Counting(EpidemicSpread):
            def __init__(self, swarm, seeds):
                super().__init__(swarm, seeds)
                self.emitted = 0

            def on_contact(self, initiator, target):
                msgs = super().on_contact(initiator, target)
                self.emitted += len(msgs)
                return msgs

        protocol = Counting(swarm, seeds=[0])
        trace = run_protocol(swarm, protocol, rng=2)
        assert trace.total_messages == protocol.emitted
        assert trace.total_messages == int(trace.messages_per_sensor.sum())

    def test_timeout_flag_on_tiny_budget(self):
        swarm = connected_swarm(30, 0.25)
        protocol = EpidemicSpread(swarm, seeds=[0])
        trace = run_protocol(swarm, protocol, max_slots=1, rng=2)
        assert trace.timed_out
        assert trace.slots_used == 1

    def test_event_log_records_contacts(self):
        swarm = path_swarm(3)
        events = []
        protocol = EpidemicSpread(swarm, seeds=[0])
        run_protocol(swarm, protocol, rng=1, on_event=events.append)
        assert events
        assert {"slot", "initiator", "target", "kinds"} <= set(events[0])
        assert any(e["kinds"] for e in events)


class TestSpreadScaling:
    def test_spread_time_subquadratic(self):
        # Fixed radius, growing swarm: spread slots should grow far slower
        # than linearly in the sensor count.
        sizes = [50, 100, 200, 400]
        slots = []
        for count in sizes:
            swarm = connected_swarm(count, 0.25)
            protocol = EpidemicSpread(swarm, seeds=[0])
            run_protocol(swarm, protocol, rng=17)
            slots.append(protocol.spread_slot())
        logs = np.log([max(s, 1) for s in slots])
        logp = np.log(sizes)
        slope = np.polyfit(logp, logs, 1)[0]
        assert slope < 1.2, (sizes, slots)

    def test_messages_per_sensor_bounded(self):
        swarm = connected_swarm(200, 0.15)
        protocol = EpidemicSpread(swarm, seeds=[0])
        trace = run_protocol(swarm, protocol, rng=19)
        assert trace.total_messages / len(swarm) <= 10.0
