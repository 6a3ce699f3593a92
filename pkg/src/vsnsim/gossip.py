"""Time-slotted randomized gossip engine.

Each slot, every active sensor samples one outcome from its contact row
(self or a neighbor, all equally likely); self-samples produce no contact.
A protocol hook carries the actual push/pull behavior. The engine counts
every exchanged message against its sender and detects quiescence: an
initiator whose contact moved nothing goes inactive, and protocols
reactivate sensors whenever their state is updated by an incoming exchange.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .swarm import Swarm


@dataclass(frozen=True)
class GossipMessage:
    """One transmitted payload: attributed to its sender, tagged with a kind."""

    sender: int
    kind: str
    size: int = 1  # payload size in vector units (request/domain/row payloads)


@dataclass
class GossipTrace:
    slots_used: int
    messages_per_sensor: np.ndarray
    total_messages: int
    timed_out: bool = False


class ProtocolHook:
    """Behavioral contract for gossip protocols.

    `on_contact` must be deterministic given the protocol state and the pair.
    An inactive sensor initiates no contacts but may still be contacted.
    Subclasses call `activate` whenever an exchange mutates a sensor's state
    so the engine's quiescence rule ("stop after a fruitless contact, restart
    on updates") works unchanged.
    """

    def __init__(self, participants: Iterable[int]):
        self._participants = tuple(sorted(participants))
        self._active: set[int] = set(self._participants)

    @property
    def participants(self) -> tuple[int, ...]:
        return self._participants

    def is_active(self, i: int) -> bool:
        return i in self._active

    def active_ids(self) -> list[int]:
        return sorted(self._active)

    def activate(self, i: int) -> None:
        if i in self._participant_set():
            self._active.add(i)

    def deactivate(self, i: int) -> None:
        self._active.discard(i)

    def _participant_set(self) -> frozenset[int]:
        cached = getattr(self, "_pset", None)
        if cached is None:
            cached = frozenset(self._participants)
            self._pset = cached
        return cached

    def begin_slot(self, slot: int) -> None:
        """Called by the engine at the start of each slot (1-based)."""

    def on_contact(self, initiator: int, target: int) -> list[GossipMessage]:
        raise NotImplementedError

    def after_contact(self, initiator: int, target: int, messages: list[GossipMessage]) -> None:
        """Default quiescence rule: a fruitless contact deactivates the initiator."""
        if not messages:
            self.deactivate(initiator)

    def is_done(self) -> bool:
        """Optional early-out for protocols that can tell no further progress is possible."""
        return False


class EpidemicSpread(ProtocolHook):
    """Push/pull dissemination of a single payload token.

    Push happens when the target lacks the token, pull when the initiator
    lacks it. An initiator stops only once both parties hold the token, so
    uninformed sensors keep searching and the token reaches every sensor
    reachable from the seeds.
    """

    def __init__(self, swarm: Swarm, seeds: Iterable[int], kind: str = "request", size: int = 1):
        super().__init__(swarm.ids())
        self.informed: set[int] = set(seeds)
        if not self.informed:
            raise ValueError("at least one seed sensor is required")
        for s in self.informed:
            swarm._check_id(s)
        self._kind = kind
        self._size = size
        self.informed_at: dict[int, int] = {s: 0 for s in self.informed}
        self._slot = 0
        # Spread can only cover the seeds' connected components; the engine
        # may stop once coverage is complete.
        reachable: set[int] = set()
        for s in self.informed:
            reachable.update(np.flatnonzero(swarm.hops_from(s) >= 0).tolist())
        self._reachable = reachable

    def begin_slot(self, slot: int) -> None:
        self._slot = slot

    def on_inform(self, i: int) -> None:
        """Subclass hook: called once when sensor i first receives the token."""

    def _inform(self, i: int) -> None:
        self.informed.add(i)
        self.informed_at[i] = self._slot
        self.activate(i)
        self.on_inform(i)

    def _can_share(self, i: int) -> bool:
        # A sensor cannot forward a token within the slot it received it.
        return i in self.informed and self.informed_at[i] < self._slot

    def on_contact(self, initiator: int, target: int) -> list[GossipMessage]:
        if self._can_share(initiator) and target not in self.informed:
            self._inform(target)
            return [GossipMessage(sender=initiator, kind=self._kind, size=self._size)]
        if self._can_share(target) and initiator not in self.informed:
            self._inform(initiator)
            return [GossipMessage(sender=target, kind=self._kind, size=self._size)]
        return []

    def after_contact(self, initiator: int, target: int, messages: list[GossipMessage]) -> None:
        # Stop only when both ends already hold the token; an uninformed
        # initiator keeps searching even after a fruitless contact.
        if not messages and initiator in self.informed and target in self.informed:
            self.deactivate(initiator)

    def is_done(self) -> bool:
        return self.informed >= self._reachable

    def spread_slot(self) -> int:
        """Slot at which the last informed sensor received the token."""
        return max(self.informed_at.values())


class _ContactSampler:
    """Vectorized per-slot sampling: one uniform draw per active sensor over self+neighbors."""

    def __init__(self, neighbors_by_id: dict[int, tuple[int, ...]]):
        ids = sorted(neighbors_by_id)
        self._index = {i: k for k, i in enumerate(ids)}
        options = [np.array([i] + list(neighbors_by_id[i]), dtype=np.int64) for i in ids]
        self._lens = np.array([len(o) for o in options], dtype=np.int64)
        self._offsets = np.concatenate([[0], np.cumsum(self._lens)[:-1]])
        self._flat = np.concatenate(options) if options else np.empty(0, dtype=np.int64)

    def sample(self, active: list[int], rng: np.random.Generator) -> list[tuple[int, int]]:
        if not active:
            return []
        rows = np.array([self._index[i] for i in active], dtype=np.int64)
        u = rng.random(len(active))
        picks = self._flat[self._offsets[rows] + (u * self._lens[rows]).astype(np.int64)]
        return [(i, int(t)) for i, t in zip(active, picks) if i != t]


def default_max_slots(count: int) -> int:
    """Engine slot budget: an order above the expected epidemic spread time."""
    return max(1, math.ceil(10 * count * math.log2(max(count, 2))))


def schedule_slot(swarm: Swarm, active: set[int], rng: np.random.Generator) -> list[tuple[int, int]]:
    """Sample one contact attempt per active sensor; self-samples yield no contact."""
    for i in active:
        swarm._check_id(i)
    sampler = _ContactSampler({i: swarm.neighbors(i) for i in active})
    return sampler.sample(sorted(active), rng)


def run_protocol(swarm: Swarm, protocol: ProtocolHook, max_slots: int | None = None,
                 rng: np.random.Generator | int = 0,
                 on_event: Callable[[dict], None] | None = None) -> GossipTrace:
    """Drive a protocol until quiescence, completion, or the slot budget runs out.

    Contacts within a slot are processed in ascending initiator id; a target
    may be contacted by several initiators in the same slot.
    """
    if max_slots is None:
        max_slots = default_max_slots(len(swarm))
    if max_slots < 1:
        raise ValueError(f"max_slots must be positive, got {max_slots}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    counts = np.zeros(len(swarm), dtype=np.int64)
    sampler = _ContactSampler({i: swarm.neighbors(i) for i in protocol.participants})
    slots = 0
    while slots < max_slots:
        active = protocol.active_ids()
        if not active or protocol.is_done():
            break
        protocol.begin_slot(slots + 1)
        for initiator, target in sampler.sample(active, rng):
            messages = protocol.on_contact(initiator, target)
            for msg in messages:
                counts[msg.sender] += 1
            if on_event is not None:
                on_event({"slot": slots + 1, "initiator": initiator, "target": target,
                          "kinds": [m.kind for m in messages]})
            protocol.after_contact(initiator, target, messages)
        slots += 1
    timed_out = bool(protocol.active_ids()) and not protocol.is_done() and slots >= max_slots
    return GossipTrace(slots_used=slots, messages_per_sensor=counts,
                       total_messages=int(counts.sum()), timed_out=timed_out)
