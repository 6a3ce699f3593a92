"""Scenario configuration, end-to-end experiment execution, result emission.

A scenario is a flat ``key = value`` text file (see ``SCENARIO_KEYS`` for the
schema). Each replication generates a fresh swarm and request, runs the
four-phase virtualization, and, when a feasible solution is selected, builds
a synthetic estimation task and runs the requested estimators. Records are
emitted as CSV or JSON with a fixed column set.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .radv import (TOPOLOGIES, VsnRequest, benefit_upper_bound, virtualize)
from .rade import ToleranceSpec, admm_run, rade_run
from .sensing import centralized_ls, generate_estimation_task, mse
from .swarm import generate_swarm

ALGORITHMS = ("ls", "admm", "rade")

CSV_COLUMNS = [
    "scenario_id", "seed", "P", "V", "topology", "accepted", "benefit", "upper_bound",
    "search_slots", "prune_slots", "benefit_slots", "msgs_per_sensor",
    "algo", "iterations", "messages", "mse", "converged",
]


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


@dataclass(frozen=True)
class Scenario:
    scenario_id: str = "scenario"
    # swarm
    swarm_count: int = 0
    swarm_radius: float = 0.1
    capacity_low: float = 50.0
    capacity_high: float = 100.0
    # request
    v_count: int = 0
    topology: str = ""
    task_radius: float = 0.2
    demand_low: float = 25.0
    demand_high: float = 50.0
    hop_bound: int = 20
    alpha: float = 1.0
    beta: float = 1.0
    center_policy: str = "inset"
    # estimation task
    n: int = 5
    m: int = 20
    sigma: float = 0.1
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    rho: float = 1.0
    # experiment
    replications: int = 1
    seed_base: int = 0
    algorithms: tuple[str, ...] = ("ls", "admm", "rade")
    search_seeds: int = 1
    max_gossip_slots: int = 0          # 0 = automatic budget from swarm size
    estimator_max_iters: int = 10000
    estimator_max_slots: int = 200000
    rade_disjoint_pairs: bool = False
    z_normalization: str = "degree"    # degree | paper-literal


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_algorithms(text: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    for name in names:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}; expected from {ALGORITHMS}")
    return names


SCENARIO_KEYS: dict[str, Callable[[str], object]] = {
    "scenario_id": str,
    "swarm_count": int,
    "swarm_radius": float,
    "capacity_low": float,
    "capacity_high": float,
    "v_count": int,
    "topology": str,
    "task_radius": float,
    "demand_low": float,
    "demand_high": float,
    "hop_bound": int,
    "alpha": float,
    "beta": float,
    "center_policy": str,
    "n": int,
    "m": int,
    "sigma": float,
    "eps_abs": float,
    "eps_rel": float,
    "rho": float,
    "replications": int,
    "seed_base": int,
    "algorithms": _parse_algorithms,
    "search_seeds": int,
    "max_gossip_slots": int,
    "estimator_max_iters": int,
    "estimator_max_slots": int,
    "rade_disjoint_pairs": _parse_bool,
    "z_normalization": str,
}

REQUIRED_KEYS = ("swarm_count", "v_count", "topology")


def parse_scenario_text(text: str, scenario_id_default: str = "scenario") -> Scenario:
    """Parse and validate a flat key=value scenario document."""
    values: dict[str, object] = {}
    problems: list[str] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCENARIO_KEYS:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            problems.append(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
            continue
        seen[key] = lineno
        try:
            values[key] = SCENARIO_KEYS[key](value)
        except ValueError as exc:
            problems.append(f"line {lineno}: bad value for {key!r}: {exc}")
    for key in REQUIRED_KEYS:
        if key not in values:
            problems.append(f"missing required key {key!r}")
    if problems:
        raise ScenarioError("; ".join(problems))
    values.setdefault("scenario_id", scenario_id_default)
    scenario = Scenario(**values)
    _validate(scenario)
    return scenario


def _validate(s: Scenario) -> None:
    problems = []
    if s.swarm_count < 1:
        problems.append("swarm_count must be >= 1")
    if s.swarm_radius <= 0:
        problems.append("swarm_radius must be positive")
    if not (0 < s.capacity_low <= s.capacity_high):
        problems.append("capacities must satisfy 0 < capacity_low <= capacity_high")
    if s.v_count < 1:
        problems.append("v_count must be >= 1")
    if s.topology not in TOPOLOGIES:
        problems.append(f"topology must be one of {TOPOLOGIES}")
    if s.task_radius < 0:
        problems.append("task_radius must be nonnegative")
    if not (0 < s.demand_low <= s.demand_high):
        problems.append("demands must satisfy 0 < demand_low <= demand_high")
    if s.hop_bound < 1:
        problems.append("hop_bound must be >= 1")
    if s.alpha < 0 or s.beta < 0:
        problems.append("alpha and beta must be nonnegative")
    if s.center_policy not in ("inset", "uniform"):
        problems.append("center_policy must be 'inset' or 'uniform'")
    if s.n < 1 or s.m < 1:
        problems.append("n and m must be >= 1")
    if s.sigma < 0:
        problems.append("sigma must be nonnegative")
    if s.eps_abs <= 0 or s.eps_rel <= 0:
        problems.append("tolerances must be positive")
    if s.rho <= 0:
        problems.append("rho must be positive")
    if s.replications < 1:
        problems.append("replications must be >= 1")
    if s.search_seeds < 1:
        problems.append("search_seeds must be >= 1")
    if s.max_gossip_slots < 0:
        problems.append("max_gossip_slots must be >= 0")
    if s.estimator_max_iters < 1 or s.estimator_max_slots < 1:
        problems.append("estimator budgets must be >= 1")
    if s.z_normalization not in ("degree", "paper-literal"):
        problems.append("z_normalization must be 'degree' or 'paper-literal'")
    if problems:
        raise ScenarioError("; ".join(problems))


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file; raises ScenarioError with diagnostics."""
    path = Path(path)
    text = path.read_text()
    return parse_scenario_text(text, scenario_id_default=path.stem)


@dataclass(frozen=True)
class EstimatorRecord:
    algo: str
    iterations: int
    messages: int
    mse: float
    converged: bool


@dataclass
class MetricRecord:
    scenario_id: str
    seed: int
    swarm_count: int
    v_count: int
    topology: str
    accepted: bool
    benefit: float | None
    upper_bound: float
    search_slots: int
    prune_slots: int
    benefit_slots: int
    search_messages: int
    prune_messages: int
    benefit_messages: int
    msgs_per_sensor: float
    spread_slot: int
    estimators: tuple[EstimatorRecord, ...] = ()
    error: str = ""

    def phase_messages(self) -> int:
        return self.search_messages + self.prune_messages + self.benefit_messages

    def aggregate_messages(self) -> int:
        return self.phase_messages() + sum(e.messages for e in self.estimators)


def ls_message_equivalent(v_count: int, m: int, n: int) -> int:
    """Centralized baseline cost in parameter-sized message units."""
    return math.ceil(v_count * m / n)


def _replication_record(scenario: Scenario, rep: int,
                        on_event: Callable[[dict], None] | None = None) -> MetricRecord:
    root = np.random.SeedSequence((scenario.seed_base, rep))
    children = root.spawn(8)

    def child_int(k: int) -> int:
        return int(children[k].generate_state(2, np.uint64)[0])

    swarm = generate_swarm(scenario.swarm_count, scenario.swarm_radius,
                           scenario.capacity_low, scenario.capacity_high, child_int(0))
    req_rng = np.random.default_rng(children[1])
    if scenario.center_policy == "inset" and scenario.task_radius <= 0.5:
        lo, hi = scenario.task_radius, 1.0 - scenario.task_radius
    else:
        lo, hi = 0.0, 1.0
    center = (float(req_rng.uniform(lo, hi)), float(req_rng.uniform(lo, hi)))
    demands = req_rng.uniform(scenario.demand_low, scenario.demand_high, scenario.v_count)
    request = VsnRequest.build(scenario.v_count, scenario.topology, center,
                               scenario.task_radius, demands, scenario.hop_bound,
                               scenario.alpha, scenario.beta)
    seed_rng = np.random.default_rng(children[2])
    seeds = [int(s) for s in seed_rng.choice(scenario.swarm_count,
                                             size=min(scenario.search_seeds, scenario.swarm_count),
                                             replace=False)]
    max_slots = scenario.max_gossip_slots if scenario.max_gossip_slots > 0 else None
    outcome = virtualize(swarm, request, seeds, max_slots=max_slots,
                         rng=np.random.default_rng(children[3]), on_event=on_event)
    upper = benefit_upper_bound(request, swarm)
    record = MetricRecord(
        scenario_id=scenario.scenario_id,
        seed=scenario.seed_base + rep,
        swarm_count=scenario.swarm_count,
        v_count=scenario.v_count,
        topology=scenario.topology,
        accepted=outcome.accepted,
        benefit=outcome.selected.benefit if outcome.accepted else None,
        upper_bound=upper,
        search_slots=outcome.search.trace.slots_used,
        prune_slots=outcome.prune_trace.slots_used,
        benefit_slots=outcome.benefit_trace.slots_used,
        search_messages=outcome.search.trace.total_messages,
        prune_messages=outcome.prune_trace.total_messages,
        benefit_messages=outcome.benefit_trace.total_messages,
        msgs_per_sensor=outcome.phase_messages() / scenario.swarm_count,
        spread_slot=outcome.search.spread_slot,
    )
    if not outcome.accepted or not scenario.algorithms:
        return record
    task = generate_estimation_task(scenario.n, scenario.m, scenario.v_count,
                                    scenario.sigma, child_int(5))
    tol = ToleranceSpec(eps_abs=scenario.eps_abs, eps_rel=scenario.eps_rel)
    paper_literal = scenario.z_normalization == "paper-literal"
    chosen = outcome.selected
    estimators: list[EstimatorRecord] = []
    for algo in scenario.algorithms:
        if algo == "ls":
            estimate = centralized_ls(task)
            estimators.append(EstimatorRecord(
                algo="ls", iterations=0,
                messages=ls_message_equivalent(scenario.v_count, scenario.m, scenario.n),
                mse=mse(estimate, task.truth), converged=True))
        elif algo == "admm":
            result = admm_run(chosen, task, tol, rho_default=scenario.rho,
                              max_iters=scenario.estimator_max_iters,
                              paper_literal=paper_literal)
            estimators.append(EstimatorRecord(
                algo="admm", iterations=result.iterations, messages=result.messages,
                mse=mse(result.mean_estimate(), task.truth), converged=result.converged))
        else:
            result = rade_run(chosen, task, tol, rho_default=scenario.rho,
                              seed=np.random.default_rng(children[6]),
                              max_slots=scenario.estimator_max_slots,
                              paper_literal=paper_literal,
                              disjoint_pairs=scenario.rade_disjoint_pairs)
            estimators.append(EstimatorRecord(
                algo="rade", iterations=result.iterations, messages=result.messages,
                mse=mse(result.mean_estimate(), task.truth), converged=result.converged))
    record.estimators = tuple(estimators)
    return record


def run_experiment(scenario: Scenario, parallel: int = 1,
                   on_event: Callable[[dict], None] | None = None) -> list[MetricRecord]:
    """Run every replication; failures are captured in the record, not raised."""
    reps = range(scenario.replications)
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_replication_record, [scenario] * scenario.replications, reps))
    records = []
    for rep in reps:
        try:
            records.append(_replication_record(scenario, rep, on_event=on_event))
        except Exception as exc:  # individual replication failures are not fatal
            records.append(MetricRecord(
                scenario_id=scenario.scenario_id, seed=scenario.seed_base + rep,
                swarm_count=scenario.swarm_count, v_count=scenario.v_count,
                topology=scenario.topology, accepted=False, benefit=None,
                upper_bound=0.0, search_slots=0, prune_slots=0, benefit_slots=0,
                search_messages=0, prune_messages=0, benefit_messages=0,
                msgs_per_sensor=0.0, spread_slot=0, error=str(exc)))
    return records


def _format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _result_rows(records: Iterable[MetricRecord]) -> list[dict[str, object]]:
    rows = []
    for rec in records:
        base = {
            "scenario_id": rec.scenario_id,
            "seed": rec.seed,
            "P": rec.swarm_count,
            "V": rec.v_count,
            "topology": rec.topology,
            "accepted": rec.accepted,
            "benefit": rec.benefit,
            "upper_bound": rec.upper_bound,
            "search_slots": rec.search_slots,
            "prune_slots": rec.prune_slots,
            "benefit_slots": rec.benefit_slots,
            "msgs_per_sensor": rec.msgs_per_sensor,
        }
        if rec.estimators:
            for est in rec.estimators:
                row = dict(base)
                row.update({"algo": est.algo, "iterations": est.iterations,
                            "messages": est.messages, "mse": est.mse,
                            "converged": est.converged})
                rows.append(row)
        else:
            row = dict(base)
            row.update({"algo": None, "iterations": None, "messages": None,
                        "mse": None, "converged": None})
            rows.append(row)
    return rows


def emit_results(records: Iterable[MetricRecord], format: str, path: str | Path) -> None:
    """Write records to path as CSV or JSON with the fixed column set."""
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    rows = _result_rows(records)
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_format_value(row[col]) for col in CSV_COLUMNS])
    else:
        with path.open("w") as fh:
            json.dump([{col: row[col] for col in CSV_COLUMNS} for row in rows], fh, indent=2)
            fh.write("\n")
