"""Offloading decision layer.

A strategy is any object with `decide(obs) -> Decision | None`. Returning
None defers the task into the strategy's current batch window; the engine
then calls `flush_window(now)` at the window boundary and dispatches the
returned (task_id, Decision) pairs. Optional hooks: `notify(outcome)` after
a task reaches a terminal status, `cancel(task_id)` when a buffered task
expires, `finish()` at the end of a run, and the `batch_window_s` attribute
(a positive float enables engine-side batching).

Baselines: always-local, nearest-RSU, uniform-random, and the greedy oracle
(per-task argmin over the closed-form costs). The hybrid pipeline gates
with the trained classifier, acts with the greedy Q policy, and jointly
re-optimizes each batch window with PSO.
"""

from dataclasses import dataclass, replace

import numpy as np

from volsim import domain
from volsim.errors import ZeroRateError


@dataclass(frozen=True)
class Candidate:
    """One in-range RSU as seen by the deciding vehicle."""

    rsu: domain.RsuState
    distance_m: float
    rate_bps: float
    queued_cycles: float


@dataclass(frozen=True)
class Observation:
    """Everything a strategy may look at for one task decision."""

    task: domain.TaskSpec
    vehicle: domain.VehicleState
    candidates: tuple
    clock: float


@dataclass(frozen=True)
class Decision:
    """Local execution (rsu_id None) or offload to a named RSU."""

    rsu_id: int | None = None

    @property
    def is_offload(self):
        return self.rsu_id is not None

    @classmethod
    def local(cls):
        return cls(None)

    @classmethod
    def offload(cls, rsu_id):
        return cls(int(rsu_id))

    def label(self):
        return "local" if self.rsu_id is None else f"offload:{self.rsu_id}"


def candidate_cost(obs, cand, weights, include_queue=True):
    """Offload cost of one candidate from its observed rate and backlog."""
    return domain.offload_breakdown(
        obs.task.data_size_bits, obs.task.total_cycles, cand.rate_bps,
        cand.rsu.cpu_frequency, cand.queued_cycles, obs.vehicle.tx_power,
        weights, include_queue)


def option_costs(obs, weights):
    """All feasible (cost, Decision) options; zero-rate candidates skipped."""
    options = [(domain.evaluate_local(obs.task, obs.vehicle, weights).cost,
                Decision.local())]
    for cand in obs.candidates:
        try:
            cost = candidate_cost(obs, cand, weights).cost
        except ZeroRateError:
            continue
        options.append((cost, Decision.offload(cand.rsu.id)))
    return options


def decide_local_only(obs):
    return Decision.local()


def decide_nearest(obs):
    if obs.candidates:
        return Decision.offload(obs.candidates[0].rsu.id)
    return Decision.local()


def decide_random(obs, rng):
    """Uniform over local plus every candidate."""
    n = len(obs.candidates)
    pick = int(rng.integers(n + 1))
    if pick == 0:
        return Decision.local()
    return Decision.offload(obs.candidates[pick - 1].rsu.id)


def decide_greedy_oracle(obs, weights):
    """Myopic argmin over all options; ties prefer local, then lower rsu id."""
    options = option_costs(obs, weights)
    return min(options, key=lambda o: (o[0], o[1].is_offload, o[1].rsu_id or 0))[1]


class LocalOnlyStrategy:
    name = "local"

    def decide(self, obs):
        return decide_local_only(obs)


class NearestStrategy:
    name = "nearest"

    def decide(self, obs):
        return decide_nearest(obs)


class RandomStrategy:
    name = "random"

    def __init__(self, rng):
        self.rng = rng

    def decide(self, obs):
        return decide_random(obs, self.rng)


class GreedyOracleStrategy:
    name = "greedy"

    def __init__(self, weights):
        self.weights = weights

    def decide(self, obs):
        return decide_greedy_oracle(obs, self.weights)


class RecordingStrategy:
    """Wraps a strategy and keeps every observation it decided on."""

    def __init__(self, inner):
        self.inner = inner
        self.observations = []

    def decide(self, obs):
        self.observations.append(obs)
        return self.inner.decide(obs)

    def notify(self, outcome):
        if hasattr(self.inner, "notify"):
            self.inner.notify(outcome)

    def finish(self):
        if hasattr(self.inner, "finish"):
            self.inner.finish()


class HybridStrategy:
    """Gate (classifier) -> act (greedy Q policy) -> refine (PSO batch).

    Stage 1 predicts whether offloading beats local execution; below the
    threshold the task runs locally at once. Stage 2 picks local or a
    candidate slot from the Q-table. When batching is enabled, gate-passing
    tasks are instead buffered and each window is jointly re-assigned by
    PSO, which overrides stage 2. Without a trained model and Q-table the
    strategy degrades to the greedy oracle.
    """

    name = "hybrid"

    def __init__(self, model, qtable, weights, bins=None, pso_config=None,
                 gate_threshold=0.5, batch_window_s=None):
        from volsim import pso as pso_mod  # deferred: pso imports strategy types
        from volsim import rl as rl_mod

        self._pso = pso_mod
        self._rl = rl_mod
        self.model = model
        self.qtable = qtable
        self.weights = weights
        self.bins = bins
        self.pso_config = pso_config if pso_config is not None else pso_mod.PsoConfig()
        self.gate_threshold = gate_threshold
        if batch_window_s is None:
            batch_window_s = self.pso_config.batch_window_s
        self.batch_window_s = batch_window_s if batch_window_s and batch_window_s > 0 else None
        self._window = []          # buffered observations, arrival order
        self._window_index = 0
        self.last_pso_history = None

    @property
    def _trained(self):
        return self.model is not None and self.qtable is not None

    def _rl_greedy(self, obs):
        key = self._rl.discretize(obs, self.bins)
        n_valid = 1 + min(len(obs.candidates), self.bins.max_candidates)
        action = self._rl.select_action(self.qtable, key, 0.0, None, n_valid=n_valid)
        if action == 0:
            return Decision.local()
        return Decision.offload(obs.candidates[action - 1].rsu.id)

    def decide(self, obs):
        if not self._trained:
            return decide_greedy_oracle(obs, self.weights)
        from volsim import predictor as predictor_mod
        p = predictor_mod.predict(self.model, predictor_mod.features(obs))
        if p < self.gate_threshold:
            return Decision.local()
        if self.batch_window_s is None:
            return self._rl_greedy(obs)
        self._window.append(self._reachable_after_wait(obs))
        return None

    def _reachable_after_wait(self, obs):
        """Drop candidates the vehicle could out-run while the window fills."""
        margin = obs.vehicle.speed * self.batch_window_s
        kept = tuple(c for c in obs.candidates
                     if c.distance_m + margin <= c.rsu.coverage_radius)
        if len(kept) == len(obs.candidates):
            return obs
        return replace(obs, candidates=kept)

    def flush_window(self, now):
        """Jointly re-assign the buffered window with PSO; clears the buffer."""
        window = self._window
        self._window = []
        if not window:
            return []
        seed = int(np.random.SeedSequence(
            (self.pso_config.seed, self._window_index)).generate_state(1)[0])
        self._window_index += 1
        assignments, _, history = self._pso.optimize_window(
            window, self.weights, self.pso_config, seed=seed)
        self.last_pso_history = history
        out = []
        for obs, a in zip(window, assignments):
            if a == 0:
                out.append((obs.task.id, Decision.local()))
            else:
                out.append((obs.task.id, Decision.offload(obs.candidates[a - 1].rsu.id)))
        return out

    def cancel(self, task_id):
        self._window = [o for o in self._window if o.task.id != task_id]
