"""Gossip-based sensor network virtualization and distributed consensus estimation.

The package simulates a swarm of participatory sensors, virtualizes a
requested sensor network onto it through a four-phase randomized gossip
algorithm, and then estimates an unknown parameter vector on the virtual
topology with a synchronous consensus solver and a randomized asynchronous
one. A harness plus CLI runs seeded experiment scenarios end to end.
"""

from .swarm import Sensor, Swarm, TransitionRow, generate_swarm, shortest_hops, transition_row
from .gossip import (EpidemicSpread, GossipMessage, GossipTrace, ProtocolHook,
                     default_max_slots, run_protocol, schedule_slot)
from .matching import WeightMatrix, brute_force_matching, hungarian_max_weight
from .sensing import (EstimationTask, MeasurementModel, centralized_ls,
                      generate_estimation_task, mse)
from .radv import (BenefitState, RadvOutcome, SearchResult, VirtualDomain, Virtualization,
                   VsnRequest, benefit_upper_bound, build_benefit_matrices, compute_domain,
                   prune_domains, run_search, select_virtualization, solve_local_assignment,
                   total_benefit, virtual_links_for, virtualize)
from .rade import (EstimationResult, EstimatorState, ToleranceSpec, admm_run, lambda_update,
                   rade_run, stopping_check, theta_update, virtual_adjacency, z_update)
from .harness import (MetricRecord, Scenario, ScenarioError, emit_results, load_scenario,
                      run_experiment)

__all__ = [
    "Sensor", "Swarm", "TransitionRow", "generate_swarm", "shortest_hops", "transition_row",
    "EpidemicSpread", "GossipMessage", "GossipTrace", "ProtocolHook", "default_max_slots",
    "run_protocol", "schedule_slot",
    "WeightMatrix", "brute_force_matching", "hungarian_max_weight",
    "EstimationTask", "MeasurementModel", "centralized_ls", "generate_estimation_task", "mse",
    "BenefitState", "RadvOutcome", "SearchResult", "VirtualDomain", "Virtualization",
    "VsnRequest", "benefit_upper_bound", "build_benefit_matrices", "compute_domain",
    "prune_domains", "run_search", "select_virtualization", "solve_local_assignment",
    "total_benefit", "virtual_links_for", "virtualize",
    "EstimationResult", "EstimatorState", "ToleranceSpec", "admm_run", "lambda_update",
    "rade_run", "stopping_check", "theta_update", "virtual_adjacency", "z_update",
    "MetricRecord", "Scenario", "ScenarioError", "emit_results", "load_scenario",
    "run_experiment",
]
