"""Four-phase randomized virtualization of a sensing task onto the swarm.

Phase I spreads the task request epidemically and every informed sensor
derives its virtual domain (which virtual sensors it could realize).
Phase II gossips nonempty domains up to the hop bound so each sensor can
discard virtual sensors whose required virtual neighbors are unsupported
anywhere nearby. Phase III floods per-candidate benefit rows, decremented
per forwarding hop, so each sensor accumulates the best V candidates it has
seen. Phase IV solves a masked assignment problem locally at every sensor
holding V candidates; the best feasible solution wins.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .gossip import (EpidemicSpread, GossipMessage, GossipTrace, ProtocolHook,
                     default_max_slots, run_protocol)
from .matching import WeightMatrix, hungarian_max_weight
from .swarm import Sensor, Swarm, shortest_hops

TOPOLOGIES = ("complete", "cycle", "star")


def virtual_links_for(topology: str, v_count: int) -> frozenset[tuple[int, int]]:
    """Canonical undirected link set over virtual ids 1..V for a named topology."""
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    if v_count < 1:
        raise ValueError(f"v_count must be >= 1, got {v_count}")
    ids = range(1, v_count + 1)
    if topology == "complete":
        links = {(a, b) for a, b in itertools.combinations(ids, 2)}
    elif topology == "star":
        links = {(1, k) for k in range(2, v_count + 1)}
    else:  # cycle
        if v_count == 1:
            links = set()
        elif v_count == 2:
            links = {(1, 2)}
        else:
            links = {(k, k + 1) for k in range(1, v_count)}
            links.add((1, v_count))
    return frozenset(links)


@dataclass(frozen=True)
class VsnRequest:
    """A virtual sensing task: V virtual sensors, their topology, and placement limits."""

    v_count: int
    topology: str
    virtual_links: frozenset[tuple[int, int]]
    center: tuple[float, float]
    task_radius: float
    demands: tuple[float, ...]
    hop_bound: int
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.virtual_links != virtual_links_for(self.topology, self.v_count):
            raise ValueError(f"virtual_links inconsistent with a {self.topology} topology of size {self.v_count}")
        if len(self.demands) != self.v_count:
            raise ValueError(f"expected {self.v_count} demands, got {len(self.demands)}")
        if any(d <= 0 for d in self.demands):
            raise ValueError("demands must all be positive")
        if self.task_radius < 0:
            raise ValueError(f"task_radius must be nonnegative, got {self.task_radius}")
        if self.hop_bound < 1:
            raise ValueError(f"hop_bound must be >= 1, got {self.hop_bound}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("incentives alpha and beta must be nonnegative")

    @classmethod
    def build(cls, v_count: int, topology: str, center: tuple[float, float],
              task_radius: float, demands: Iterable[float], hop_bound: int,
              alpha: float = 1.0, beta: float = 1.0) -> "VsnRequest":
        return cls(v_count=v_count, topology=topology,
                   virtual_links=virtual_links_for(topology, v_count),
                   center=(float(center[0]), float(center[1])),
                   task_radius=float(task_radius),
                   demands=tuple(float(d) for d in demands),
                   hop_bound=int(hop_bound), alpha=float(alpha), beta=float(beta))

    @cached_property
    def _neighbor_map(self) -> dict[int, tuple[int, ...]]:
        nbrs: dict[int, list[int]] = {j: [] for j in range(1, self.v_count + 1)}
        for a, b in self.virtual_links:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return {j: tuple(sorted(v)) for j, v in nbrs.items()}

    def virtual_neighbors(self, j: int) -> tuple[int, ...]:
        return self._neighbor_map[j]


@dataclass(frozen=True)
class VirtualDomain:
    """Virtual sensors a participatory sensor can realize (empty outside the task area)."""

    owner: int
    members: frozenset[int]


def compute_domain(sensor: Sensor, request: VsnRequest) -> VirtualDomain:
    """Capacity- and locality-filtered set of virtual ids sensor could realize."""
    if sensor.distance_to(request.center) > request.task_radius:
        return VirtualDomain(owner=sensor.id, members=frozenset())
    members = frozenset(j for j in range(1, request.v_count + 1)
                        if sensor.capacity >= request.demands[j - 1])
    return VirtualDomain(owner=sensor.id, members=members)


# ---------------------------------------------------------------------------
# Phase I: request dissemination
# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    domains: dict[int, VirtualDomain]
    eligible: set[int]
    trace: GossipTrace
    spread_slot: int


def run_search(swarm: Swarm, request: VsnRequest, seeds: Iterable[int],
               max_slots: int | None = None, rng: np.random.Generator | int = 0,
               on_event: Callable[[dict], None] | None = None) -> SearchResult:
    """Spread the request push/pull-epidemically; informed sensors compute domains."""
    protocol = EpidemicSpread(swarm, seeds, kind="request")
    trace = run_protocol(swarm, protocol, max_slots=max_slots, rng=rng, on_event=on_event)
    domains = {i: compute_domain(swarm.sensors[i], request) for i in sorted(protocol.informed)}
    eligible = {i for i, dom in domains.items() if dom.members}
    return SearchResult(domains=domains, eligible=eligible, trace=trace,
                        spread_slot=protocol.spread_slot())


# ---------------------------------------------------------------------------
# Phase II: domain pruning
# ---------------------------------------------------------------------------

class _DomainExchange(ProtocolHook):
    """Push/pull of nonempty virtual domains, forwarded at most hop_bound hops."""

    def __init__(self, request: VsnRequest, domains: dict[int, VirtualDomain]):
        super().__init__(domains.keys())
        self._hop_bound = request.hop_bound
        self.received: dict[int, dict[int, tuple[frozenset[int], int]]] = {
            p: {p: (dom.members, 0)} for p, dom in domains.items()
        }

    def _transfer(self, src: int, dst: int) -> list[GossipMessage]:
        out = []
        dst_rec = self.received[dst]
        for origin, (members, hop) in list(self.received[src].items()):
            if origin == dst or origin in dst_rec:
                continue
            if hop >= self._hop_bound or not members:
                continue
            dst_rec[origin] = (members, hop + 1)
            out.append(GossipMessage(sender=src, kind="domain"))
        if out:
            self.activate(dst)
        return out

    def on_contact(self, initiator: int, target: int) -> list[GossipMessage]:
        pushed = self._transfer(initiator, target)
        pulled = self._transfer(target, initiator)
        return pushed + pulled


def _prune_members(members: frozenset[int], others: list[frozenset[int]],
                   request: VsnRequest) -> frozenset[int]:
    """Delete virtual ids with some required neighbor unsupported by any held domain."""
    mem = set(members)
    changed = True
    while changed:
        changed = False
        for j in sorted(mem):
            for j2 in request.virtual_neighbors(j):
                if j2 in mem or any(j2 in dom for dom in others):
                    continue
                mem.discard(j)
                changed = True
                break
    return frozenset(mem)


def prune_domains(swarm: Swarm, request: VsnRequest, domains: dict[int, VirtualDomain],
                  max_slots: int | None = None, rng: np.random.Generator | int = 0,
                  on_event: Callable[[dict], None] | None = None,
                  ) -> tuple[dict[int, VirtualDomain], GossipTrace]:
    """Exchange domains to quiescence, then prune each sensor's own domain locally."""
    protocol = _DomainExchange(request, domains)
    trace = run_protocol(swarm, protocol, max_slots=max_slots, rng=rng, on_event=on_event)
    pruned = {}
    for p, dom in domains.items():
        others = [mem for origin, (mem, _) in protocol.received[p].items() if origin != p]
        pruned[p] = VirtualDomain(owner=p, members=_prune_members(dom.members, others, request))
    return pruned, trace


# ---------------------------------------------------------------------------
# Phase III: benefit matrix construction
# ---------------------------------------------------------------------------

@dataclass
class BenefitState:
    """One sensor's view of candidate sensors and their per-virtual-id benefits."""

    owner: int
    v_count: int
    rows: dict[int, list[float]] = field(default_factory=dict)
    totals: dict[int, float] = field(default_factory=dict)
    hops: dict[int, int] = field(default_factory=dict)

    @property
    def candidates(self) -> set[int]:
        return set(self.rows)

    @property
    def min_total(self) -> float:
        """Smallest candidate row total; pinned to 0 until V candidates are held."""
        if len(self.rows) < self.v_count:
            return 0.0
        return min(self.totals.values())

    @property
    def min_candidate(self) -> int | None:
        if len(self.rows) < self.v_count:
            return None
        return min(self.totals, key=lambda c: (self.totals[c], c))


def _initial_row(sensor: Sensor, request: VsnRequest, members: frozenset[int]) -> list[float]:
    row = []
    for j in range(1, request.v_count + 1):
        if j in members:
            row.append(request.alpha * (sensor.capacity - request.demands[j - 1]) / sensor.capacity
                       + request.beta)
        else:
            row.append(0.0)
    return row


class _BenefitExchange(ProtocolHook):
    """Push/pull of candidate benefit rows filtered by the receiver's running minimum.

    A row is offered only when its hop-decremented total beats the receiver's
    minimum and the receiver would actually keep it; each accepted transfer
    is one V-sized message.
    """

    def __init__(self, swarm: Swarm, request: VsnRequest, domains: dict[int, VirtualDomain]):
        super().__init__(domains.keys())
        self._v = request.v_count
        self._hop_bound = request.hop_bound
        self._dec = request.beta / request.hop_bound
        self.states: dict[int, BenefitState] = {}
        for p, dom in domains.items():
            state = BenefitState(owner=p, v_count=self._v)
            if dom.members:
                row = _initial_row(swarm.sensors[p], request, dom.members)
                state.rows[p] = row
                state.totals[p] = sum(row)
                state.hops[p] = 0
            self.states[p] = state

    def _transfer(self, src: int, dst: int) -> list[GossipMessage]:
        out = []
        src_state = self.states[src]
        dst_state = self.states[dst]
        for cand, row in list(src_state.rows.items()):
            if cand == dst:
                continue
            hop = src_state.hops[cand]
            if hop >= self._hop_bound:
                continue
            nonzero = sum(1 for v in row if v > 0.0)
            if src_state.totals[cand] - self._dec * nonzero <= dst_state.min_total:
                continue
            new_row = [v - self._dec if v > self._dec else 0.0 for v in row]
            new_total = sum(new_row)
            if cand in dst_state.rows:
                # Keep whichever row has the larger total; ties keep the held one.
                if new_total <= dst_state.totals[cand]:
                    continue
            elif len(dst_state.rows) >= self._v:
                evict = dst_state.min_candidate
                del dst_state.rows[evict]
                del dst_state.totals[evict]
                del dst_state.hops[evict]
            dst_state.rows[cand] = new_row
            dst_state.totals[cand] = new_total
            dst_state.hops[cand] = hop + 1
            out.append(GossipMessage(sender=src, kind="benefit-row"))
        if out:
            self.activate(dst)
        return out

    def on_contact(self, initiator: int, target: int) -> list[GossipMessage]:
        pushed = self._transfer(initiator, target)
        pulled = self._transfer(target, initiator)
        return pushed + pulled


def build_benefit_matrices(swarm: Swarm, request: VsnRequest,
                           domains: dict[int, VirtualDomain],
                           max_slots: int | None = None,
                           rng: np.random.Generator | int = 0,
                           on_event: Callable[[dict], None] | None = None,
                           ) -> tuple[dict[int, BenefitState], GossipTrace]:
    """Flood benefit rows (pruned domains in, candidate states out)."""
    protocol = _BenefitExchange(swarm, request, domains)
    trace = run_protocol(swarm, protocol, max_slots=max_slots, rng=rng, on_event=on_event)
    return protocol.states, trace


# ---------------------------------------------------------------------------
# Phase IV: local assignment and cloud-side selection
# ---------------------------------------------------------------------------

@dataclass
class Virtualization:
    """A candidate realization: V selected sensors and their virtual-id assignment.

    Carries the virtual link set it realizes so downstream estimation can
    recover the induced substrate topology from the solution alone.
    """

    selected: frozenset[int]
    mapping: dict[int, int]          # sensor id -> virtual id (bijective)
    solver: int
    virtual_links: frozenset[tuple[int, int]] = frozenset()
    benefit: float = 0.0
    feasible: bool = False
    local_objective: float = 0.0

    def inverse(self) -> dict[int, int]:
        return {j: i for i, j in self.mapping.items()}

    def to_json_dict(self) -> dict:
        return {
            "selected": sorted(self.selected),
            "mapping": {str(i): j for i, j in sorted(self.mapping.items())},
            "solver": self.solver,
            "benefit": self.benefit,
            "feasible": self.feasible,
        }


def solve_local_assignment(state: BenefitState, domains: dict[int, VirtualDomain],
                           request: VsnRequest) -> Virtualization | None:
    """Max-weight assignment of the V held candidates to virtual ids, domain-masked."""
    v = request.v_count
    if len(state.rows) != v:
        raise ValueError(f"local assignment needs exactly {v} candidates, "
                         f"got {len(state.rows)} at sensor {state.owner}")
    cands = sorted(state.rows)
    weights = np.array([state.rows[c] for c in cands], dtype=float)
    allowed = np.array([[(j + 1) in domains[c].members for j in range(v)] for c in cands])
    result = hungarian_max_weight(WeightMatrix(weights, allowed))
    if result is None:
        return None
    perm, objective = result
    mapping = {cands[i]: perm[i] + 1 for i in range(v)}
    return Virtualization(selected=frozenset(cands), mapping=mapping,
                          solver=state.owner, virtual_links=request.virtual_links,
                          local_objective=objective)


def total_benefit(v: Virtualization, swarm: Swarm, request: VsnRequest) -> float:
    """Substrate-level benefit of a virtualization; also refreshes its feasible flag.

    Spare-capacity terms accrue per mapped sensor; link terms accrue per
    virtual link using substrate shortest-path hops. Disconnected mapped
    pairs contribute nothing and mark the solution infeasible, as does any
    pair beyond the hop bound.
    """
    if len(v.mapping) != len(set(v.mapping.values())):
        raise ValueError("mapping must be bijective")
    alpha, beta, bound = request.alpha, request.beta, request.hop_bound
    total = 0.0
    for i, j in sorted(v.mapping.items()):
        cap = swarm.sensors[i].capacity
        total += alpha * (cap - request.demands[j - 1]) / cap
    inverse = v.inverse()
    feasible = True
    for j1, j2 in sorted(request.virtual_links):
        hops = shortest_hops(swarm, inverse[j1], inverse[j2])
        if hops is None:
            feasible = False
            continue
        if hops > bound:
            feasible = False
        total += beta * (bound - hops) / bound
    v.benefit = total
    v.feasible = feasible
    return total


def benefit_upper_bound(request: VsnRequest, swarm: Swarm) -> float:
    """Best conceivable benefit: max-capacity sensors, single-hop link realizations."""
    c_max = max(s.capacity for s in swarm.sensors)
    total = sum(request.alpha * max(c_max - d, 0.0) / c_max for d in request.demands)
    total += len(request.virtual_links) * request.beta * (request.hop_bound - 1) / request.hop_bound
    return total


def select_virtualization(solutions: Iterable[Virtualization]) -> Virtualization | None:
    """Maximum-benefit feasible solution; ties go to the lowest solver id."""
    best = None
    for sol in solutions:
        if not sol.feasible:
            continue
        if best is None or sol.benefit > best.benefit or \
                (sol.benefit == best.benefit and sol.solver < best.solver):
            best = sol
    return best


# ---------------------------------------------------------------------------
# End-to-end driver
# ---------------------------------------------------------------------------

@dataclass
class RadvOutcome:
    search: SearchResult
    pruned: dict[int, VirtualDomain]
    states: dict[int, BenefitState]
    solutions: list[Virtualization]
    selected: Virtualization | None
    prune_trace: GossipTrace
    benefit_trace: GossipTrace

    @property
    def accepted(self) -> bool:
        return self.selected is not None

    def phase_messages(self) -> int:
        return (self.search.trace.total_messages + self.prune_trace.total_messages
                + self.benefit_trace.total_messages)


def virtualize(swarm: Swarm, request: VsnRequest, seeds: Iterable[int],
               max_slots: int | None = None,
               rng: np.random.Generator | int = 0,
               on_event: Callable[[dict], None] | None = None) -> RadvOutcome:
    """Run all four phases and the cloud-side selection for one request."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if max_slots is None:
        max_slots = default_max_slots(len(swarm))
    search = run_search(swarm, request, seeds, max_slots=max_slots, rng=rng, on_event=on_event)
    pruned, prune_trace = prune_domains(swarm, request, search.domains,
                                        max_slots=max_slots, rng=rng, on_event=on_event)
    states, benefit_trace = build_benefit_matrices(swarm, request, pruned,
                                                   max_slots=max_slots, rng=rng,
                                                   on_event=on_event)
    solutions = []
    for p in sorted(states):
        state = states[p]
        if len(state.rows) != request.v_count:
            continue
        sol = solve_local_assignment(state, pruned, request)
        if sol is None:
            continue
        total_benefit(sol, swarm, request)
        solutions.append(sol)
    selected = select_virtualization(solutions)
    return RadvOutcome(search=search, pruned=pruned, states=states,
                       solutions=solutions, selected=selected,
                       prune_trace=prune_trace, benefit_trace=benefit_trace)
