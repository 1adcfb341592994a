"""volsim: deterministic vehicle-to-RSU task offloading simulator.

Closed-form latency/energy cost model, synthetic mobility, a discrete-event
engine, and a hybrid decision layer (offload classifier + tabular
Q-learning + PSO batch re-assignment) with comparison baselines.
"""

__version__ = "0.1.0"

from volsim._kernels import backend_name
from volsim.domain import (ChannelParams, CostBreakdown, CostWeights, RsuState,
                           TaskSpec, VehicleState, channel_gain, evaluate_local,
                           evaluate_offload, reward_from_cost, transmission_rate)
from volsim.mobility import (ScenarioConfig, World, candidate_rsus,
                             generate_scenario, step_mobility)
from volsim.simengine import MetricsReport, TaskOutcome, generate_task_arrivals, run
from volsim.strategies import Decision, Observation

__all__ = [
    "ChannelParams", "CostBreakdown", "CostWeights", "Decision",
    "MetricsReport", "Observation", "RsuState", "ScenarioConfig", "TaskSpec",
    "TaskOutcome", "VehicleState", "World", "backend_name", "candidate_rsus",
    "channel_gain", "evaluate_local", "evaluate_offload",
    "generate_scenario", "generate_task_arrivals", "reward_from_cost", "run",
    "step_mobility", "transmission_rate",
]
