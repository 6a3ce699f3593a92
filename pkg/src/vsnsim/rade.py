"""Distributed consensus estimation on the virtualized topology.

Two solvers share the same update equations: a synchronous baseline where
every sensor refreshes its primal, auxiliary, and multiplier variables each
round and broadcasts to all virtual neighbors, and a randomized asynchronous
variant where sensors gossip pairwise, keep stale caches of neighbor values,
and transmit a variable only while its own stopping condition is still
unmet. Per-sensor stopping uses state-dependent primal and dual tolerances.

The runs couple each sensor over its closed virtual neighborhood: the
constraint set pairs every estimate with its own auxiliary as well as its
neighbors'. Neighbor-only coupling provably cannot force consensus on
bipartite virtual topologies (star, even cycles) -- agreement then holds
within each bipartition block but not across -- and the self pair is the
minimal repair. Self pairs transmit nothing, so message accounting is
unchanged: one parameter-sized message per transmitted estimate or
auxiliary vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gossip import _ContactSampler
from .radv import Virtualization
from .sensing import EstimationTask, MeasurementModel


@dataclass(frozen=True)
class ToleranceSpec:
    eps_abs: float
    eps_rel: float

    def __post_init__(self) -> None:
        if not (self.eps_abs > 0 and self.eps_rel > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class EstimatorState:
    """Shared synchronous solver state, keyed by participating sensor id.

    `neighbors[i]` lists the coupling partners of sensor i; the multiplier
    and penalty maps are keyed by exactly the induced directed pairs.
    """

    neighbors: dict[int, tuple[int, ...]]
    theta: dict[int, np.ndarray]
    z: dict[int, np.ndarray]
    z_prev: dict[int, np.ndarray]
    lam: dict[tuple[int, int], np.ndarray]
    rho: dict[tuple[int, int], float]
    iteration: int = 0
    messages: dict[int, int] = field(default_factory=dict)
    stopped_primal: dict[int, bool] = field(default_factory=dict)
    stopped_dual: dict[int, bool] = field(default_factory=dict)

    @classmethod
    def initial(cls, neighbors: dict[int, tuple[int, ...]], n: int,
                rho_default: float) -> "EstimatorState":
        ids = sorted(neighbors)
        pairs = [(i, j) for i in ids for j in neighbors[i]]
        return cls(
            neighbors=neighbors,
            theta={i: np.zeros(n) for i in ids},
            z={i: np.zeros(n) for i in ids},
            z_prev={i: np.zeros(n) for i in ids},
            lam={p: np.zeros(n) for p in pairs},
            rho={p: rho_default for p in pairs},
            messages={i: 0 for i in ids},
            stopped_primal={i: False for i in ids},
            stopped_dual={i: False for i in ids},
        )


def virtual_adjacency(v: Virtualization) -> dict[int, tuple[int, ...]]:
    """Substrate-sensor adjacency induced by the virtual links through the mapping."""
    inverse = v.inverse()
    nbrs: dict[int, list[int]] = {i: [] for i in sorted(v.selected)}
    for j1, j2 in v.virtual_links:
        a, b = inverse[j1], inverse[j2]
        nbrs[a].append(b)
        nbrs[b].append(a)
    return {i: tuple(sorted(js)) for i, js in nbrs.items()}


def coupling_map(adjacency: dict[int, tuple[int, ...]]) -> dict[int, tuple[int, ...]]:
    """Closed-neighborhood coupling partners; isolated sensors stay uncoupled."""
    return {i: tuple(sorted(nbrs + (i,))) if nbrs else () for i, nbrs in adjacency.items()}


def theta_update(i: int, state: EstimatorState, model: MeasurementModel,
                 neighbors: tuple[int, ...] | None = None) -> np.ndarray:
    """Minimize the local augmented objective over sensor i's estimate."""
    nbrs = state.neighbors[i] if neighbors is None else tuple(neighbors)
    n = model.matrix.shape[1]
    lhs = model.matrix.T @ model.matrix
    rhs = model.matrix.T @ model.readings
    if nbrs:
        lhs = lhs + sum(state.rho[(i, j)] for j in nbrs) * np.eye(n)
        for j in nbrs:
            rhs = rhs + state.lam[(i, j)] + state.rho[(i, j)] * state.z[j]
    return np.linalg.solve(lhs, rhs)


def z_update(i: int, state: EstimatorState, neighbors: tuple[int, ...] | None = None,
             v_count: int | None = None, paper_literal: bool = False) -> np.ndarray:
    """Auxiliary update: average of coupled estimates corrected by multipliers.

    Normalizes by the coupling count (the stationary point of the augmented
    objective); `paper_literal` divides by the sensor count instead, which
    coincides only on complete topologies.
    """
    nbrs = state.neighbors[i] if neighbors is None else tuple(neighbors)
    if not nbrs:
        return state.theta[i].copy()
    acc = np.zeros_like(state.z[i])
    for j in nbrs:
        acc = acc + state.theta[j] - state.lam[(j, i)] / state.rho[(j, i)]
    if paper_literal:
        if v_count is None:
            raise ValueError("paper_literal normalization needs v_count")
        return acc / v_count
    return acc / len(nbrs)


def lambda_update(pair: tuple[int, int], state: EstimatorState) -> np.ndarray:
    """Multiplier step for one directed coupling (j, i): lam -= rho * (theta_j - z_i)."""
    j, i = pair
    return state.lam[pair] - state.rho[pair] * (state.theta[j] - state.z[i])


def stopping_check(i: int, state: EstimatorState, tol: ToleranceSpec,
                   v_count: int) -> tuple[bool, bool]:
    """Per-sensor primal and dual conditions against state-dependent tolerances."""
    sq = math.sqrt(v_count)
    theta_i, z_i = state.theta[i], state.z[i]
    eps_pri = sq * tol.eps_abs + tol.eps_rel * max(float(np.linalg.norm(theta_i)),
                                                   float(np.linalg.norm(-z_i)))
    dual_scale = 0.0
    for j in state.neighbors[i]:
        dual_scale += float(np.linalg.norm(state.rho[(j, i)] * state.lam[(j, i)]))
    eps_dual = sq * tol.eps_abs + tol.eps_rel * dual_scale
    primal_ok = float(np.linalg.norm(theta_i - z_i)) < eps_pri
    dual_ok = float(np.linalg.norm(z_i - state.z_prev[i])) < eps_dual
    return primal_ok, dual_ok


@dataclass
class EstimationResult:
    algorithm: str
    estimates: dict[int, np.ndarray]
    iterations: int
    messages: int
    converged: bool
    messages_per_sensor: dict[int, int]

    def mean_estimate(self) -> np.ndarray:
        return np.mean(list(self.estimates.values()), axis=0)


def _models_by_sensor(v: Virtualization, task: EstimationTask) -> dict[int, MeasurementModel]:
    return {i: task.models[j - 1] for i, j in v.mapping.items()}


def admm_run(virtualization: Virtualization, task: EstimationTask, tol: ToleranceSpec,
             rho_default: float = 1.0, max_iters: int = 10000,
             paper_literal: bool = False) -> EstimationResult:
    """Synchronous rounds: all theta updates, then all z, then all multipliers.

    Every round each sensor ships its estimate and auxiliary vector to every
    virtual neighbor; the run stops once all sensors meet both conditions.
    """
    v_count = len(virtualization.selected)
    adjacency = virtual_adjacency(virtualization)
    state = EstimatorState.initial(coupling_map(adjacency), task.param_dim, rho_default)
    models = _models_by_sensor(virtualization, task)
    ids = sorted(adjacency)
    pairs = sorted(state.lam)
    converged = False
    while state.iteration < max_iters:
        state.theta = {i: theta_update(i, state, models[i]) for i in ids}
        state.z_prev = dict(state.z)
        state.z = {i: z_update(i, state, v_count=v_count, paper_literal=paper_literal)
                   for i in ids}
        for pair in pairs:
            state.lam[pair] = lambda_update(pair, state)
        for i in ids:
            state.messages[i] += 2 * len(adjacency[i])
        state.iteration += 1
        done = True
        for i in ids:
            if adjacency[i]:
                primal_ok, dual_ok = stopping_check(i, state, tol, v_count)
            else:
                primal_ok = dual_ok = True  # uncoupled sensor: nothing left to agree on
            state.stopped_primal[i] = primal_ok
            state.stopped_dual[i] = dual_ok
            done = done and primal_ok and dual_ok
        if done:
            converged = True
            break
    return EstimationResult(
        algorithm="admm",
        estimates={i: state.theta[i].copy() for i in ids},
        iterations=state.iteration,
        messages=sum(state.messages.values()),
        converged=converged,
        messages_per_sensor=dict(state.messages),
    )


class _RadeNode:
    """One sensor's private view: own variables, neighbor caches, multiplier copies."""

    __slots__ = ("theta", "z", "z_prev", "cache_theta", "cache_z", "lam_out", "lam_in",
                 "lam_self", "primal_ok", "dual_ok", "eps_pri", "eps_dual", "nbrs",
                 "solve_mat", "rhs_base", "rho", "messages")

    def __init__(self, n: int, nbrs: tuple[int, ...], model: MeasurementModel, rho: float,
                 tol: ToleranceSpec, v_count: int):
        self.nbrs = nbrs
        self.rho = rho
        self.theta = np.zeros(n)
        self.z = np.zeros(n)
        self.z_prev = np.zeros(n)
        self.cache_theta = {j: np.zeros(n) for j in nbrs}
        self.cache_z = {j: np.zeros(n) for j in nbrs}
        self.lam_out = {j: np.zeros(n) for j in nbrs}   # own copy of lam[(me, j)]
        self.lam_in = {j: np.zeros(n) for j in nbrs}    # own copy of lam[(j, me)]
        self.lam_self = np.zeros(n)                     # lam[(me, me)]
        self.primal_ok = False
        self.dual_ok = False
        self.eps_pri = math.sqrt(v_count) * tol.eps_abs
        self.eps_dual = math.sqrt(v_count) * tol.eps_abs
        self.messages = 0
        gram = model.matrix.T @ model.matrix
        self.rhs_base = model.matrix.T @ model.readings
        if nbrs:
            self.solve_mat = np.linalg.inv(gram + rho * (len(nbrs) + 1) * np.eye(n))
        else:
            # Uncoupled sensor: its local least-squares answer is final.
            self.theta = np.linalg.solve(gram, self.rhs_base)
            self.z = self.theta.copy()
            self.z_prev = self.z.copy()
            self.primal_ok = True
            self.dual_ok = True
            self.solve_mat = None

    def recompute(self, peer: int, tol: ToleranceSpec, v_count: int,
                  paper_literal: bool) -> None:
        """Advance the contacted pair's multipliers, then refresh theta, z, flags.

        Multipliers move only for the peer just communicated with (plus the
        self pair) and do so before the primal refresh, from the values that
        were actually exchanged: both parties then apply identical multiplier
        steps, keeping their copies aligned. Integrating stale residuals for
        silent neighbors on every contact would drive the copies apart and
        stall the whole system short of consensus.
        """
        if not self.nbrs:
            return
        count = len(self.nbrs) + 1
        self.lam_out[peer] = self.lam_out[peer] - self.rho * (self.theta - self.cache_z[peer])
        self.lam_in[peer] = self.lam_in[peer] - self.rho * (self.cache_theta[peer] - self.z)
        self.lam_self = self.lam_self - self.rho * (self.theta - self.z)
        rhs = self.rhs_base + self.lam_self + self.rho * self.z
        for j in self.nbrs:
            rhs = rhs + self.lam_out[j] + self.rho * self.cache_z[j]
        self.theta = self.solve_mat @ rhs
        self.z_prev = self.z
        acc = self.theta - self.lam_self / self.rho
        for j in self.nbrs:
            acc = acc + self.cache_theta[j] - self.lam_in[j] / self.rho
        self.z = acc / (v_count if paper_literal else count)
        sq = math.sqrt(v_count)
        self.eps_pri = sq * tol.eps_abs + tol.eps_rel * max(float(np.linalg.norm(self.theta)),
                                                            float(np.linalg.norm(self.z)))
        dual_scale = sum(float(np.linalg.norm(self.rho * self.lam_in[j])) for j in self.nbrs)
        dual_scale += float(np.linalg.norm(self.rho * self.lam_self))
        self.eps_dual = sq * tol.eps_abs + tol.eps_rel * dual_scale
        self.primal_ok = float(np.linalg.norm(self.theta - self.z)) < self.eps_pri
        self.dual_ok = float(np.linalg.norm(self.z - self.z_prev)) < self.eps_dual


def rade_run(virtualization: Virtualization, task: EstimationTask, tol: ToleranceSpec,
             rho_default: float = 1.0, seed: int | np.random.Generator = 0,
             max_slots: int = 200000, paper_literal: bool = False,
             disjoint_pairs: bool = False) -> EstimationResult:
    """Randomized asynchronous estimation over the virtual topology.

    Each slot, every sensor with an unmet stopping condition contacts one
    uniformly chosen virtual neighbor (or itself, producing no contact).
    A vector crosses the link while its owner's stopping condition is unmet
    or while the receiver's copy of it has drifted out of the owner's
    tolerance; both parties then recompute all variables from the freshest
    values they hold. (Gating purely on the stopping conditions deadlocks:
    once every dual condition holds, auxiliaries are never sent again, so
    neighbor caches freeze inconsistently and the last primal conditions
    can never be met.)
    """
    adjacency = virtual_adjacency(virtualization)
    v_count = len(virtualization.selected)
    n = task.param_dim
    models = _models_by_sensor(virtualization, task)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    nodes = {i: _RadeNode(n, adjacency[i], models[i], rho_default, tol, v_count)
             for i in sorted(adjacency)}
    sampler = _ContactSampler(adjacency)
    slots = 0
    converged = False
    while slots < max_slots:
        active = [i for i in sorted(nodes) if not (nodes[i].primal_ok and nodes[i].dual_ok)]
        if not active:
            converged = True
            break
        contacts = sampler.sample(active, rng)
        if disjoint_pairs:
            engaged: set[int] = set()
            kept = []
            for i, j in contacts:
                if i in engaged or j in engaged:
                    continue
                engaged.update((i, j))
                kept.append((i, j))
            contacts = kept
        for i, j in contacts:
            ni, nj = nodes[i], nodes[j]
            if not ni.primal_ok or \
                    float(np.linalg.norm(ni.theta - nj.cache_theta[i])) >= ni.eps_pri:
                nj.cache_theta[i] = ni.theta
                ni.messages += 1
            if not ni.dual_ok or \
                    float(np.linalg.norm(ni.z - nj.cache_z[i])) >= ni.eps_dual:
                nj.cache_z[i] = ni.z
                ni.messages += 1
            if not nj.primal_ok or \
                    float(np.linalg.norm(nj.theta - ni.cache_theta[j])) >= nj.eps_pri:
                ni.cache_theta[j] = nj.theta
                nj.messages += 1
            if not nj.dual_ok or \
                    float(np.linalg.norm(nj.z - ni.cache_z[j])) >= nj.eps_dual:
                ni.cache_z[j] = nj.z
                nj.messages += 1
            ni.recompute(j, tol, v_count, paper_literal)
            nj.recompute(i, tol, v_count, paper_literal)
        slots += 1
    if not converged:
        converged = all(nd.primal_ok and nd.dual_ok for nd in nodes.values())
    return EstimationResult(
        algorithm="rade",
        estimates={i: nd.theta.copy() for i, nd in nodes.items()},
        iterations=slots,
        messages=sum(nd.messages for nd in nodes.values()),
        converged=converged,
        messages_per_sensor={i: nd.messages for i, nd in nodes.items()},
    )
