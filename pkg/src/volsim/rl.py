"""Tabular Q-learning offloading agent.

State keys discretize an observation into SNR, backlog, task size, vehicle
speed, and candidate-count bins (4*4*3*3*4 = 576 keys). Actions are Local
plus up to three candidate slots; Candidate_i is valid only when the
observation has more than i candidates. The update is the standard Bellman
step Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)) with the max
taken over the valid actions of s'.

Training runs one full scenario per episode; each task decision is one RL
step. The per-step reward is the negated realized cost of the decision
(latency plus lam * energy, as simulated), and s' is the state observed at
that vehicle's next task. Transitions without a successor (episode end)
bootstrap with 0.
"""

import math
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from volsim.domain import ChannelParams, CostWeights
from volsim.errors import InvalidConfigError
from volsim.mobility import STREAM_POLICY, seeded_stream
from volsim.strategies import Decision

SNR_EDGES_DB = (0.0, 10.0, 20.0)
LOAD_EDGES_S = (0.1, 1.0, 5.0)


class StateKey(NamedTuple):
    snr_bin: int
    load_bin: int
    size_bin: int
    speed_bin: int
    candidate_count: int


@dataclass(frozen=True)
class BinSpec:
    """Fixed discretization edges; terciles come from the scenario ranges."""

    size_range: tuple
    speed_range: tuple
    bandwidth: float
    snr_edges_db: tuple = SNR_EDGES_DB
    load_edges_s: tuple = LOAD_EDGES_S
    max_candidates: int = 3

    @classmethod
    def from_scenario(cls, scenario, channel=None):
        channel = channel if channel is not None else ChannelParams()
        return cls(size_range=tuple(scenario.task_size_range),
                   speed_range=tuple(scenario.speed_range),
                   bandwidth=channel.bandwidth,
                   max_candidates=min(3, scenario.max_candidates))


def _tercile_bin(value, lo, hi):
    span = hi - lo
    if span <= 0:
        return 0
    edges = (lo + span / 3.0, lo + 2.0 * span / 3.0)
    return bisect_left(edges, value)


def discretize(obs, bins):
    """Deterministic state key; boundary values land in the lower bin."""
    if obs.candidates:
        best = obs.candidates[0]
        snr_linear = 2.0 ** (best.rate_bps / bins.bandwidth) - 1.0
        snr_db = 10.0 * math.log10(snr_linear) if snr_linear > 0 else -math.inf
        snr_bin = bisect_left(bins.snr_edges_db, snr_db)
        backlog_s = best.queued_cycles / best.rsu.cpu_frequency
        load_bin = bisect_left(bins.load_edges_s, backlog_s)
    else:
        snr_bin = 0
        load_bin = 0
    return StateKey(
        snr_bin=snr_bin,
        load_bin=load_bin,
        size_bin=_tercile_bin(obs.task.data_size_bits, *bins.size_range),
        speed_bin=_tercile_bin(obs.vehicle.speed, *bins.speed_range),
        candidate_count=min(len(obs.candidates), bins.max_candidates))


class QTable:
    """Sparse map from state key to per-action value estimates.

    Missing entries read as zero. Action 0 is Local; action i is the
    (i-1)-th candidate slot.
    """

    def __init__(self, n_actions=4):
        self.n_actions = n_actions
        self.table = {}
        self.visits = {}

    def row(self, key):
        return self.table.get(key)

    def value(self, key, action):
        row = self.table.get(key)
        return float(row[action]) if row is not None else 0.0

    def best_value(self, key, n_valid=None):
        n_valid = self.n_actions if n_valid is None else n_valid
        row = self.table.get(key)
        return float(np.max(row[:n_valid])) if row is not None else 0.0

    def _row_mut(self, key):
        row = self.table.get(key)
        if row is None:
            row = np.zeros(self.n_actions)
            self.table[key] = row
            self.visits[key] = np.zeros(self.n_actions, dtype=np.int64)
        return row

    def to_json_dict(self):
        return {
            "n_actions": self.n_actions,
            "entries": {",".join(map(str, k)): [float(v) for v in row]
                        for k, row in sorted(self.table.items())},
            "visits": {",".join(map(str, k)): [int(v) for v in row]
                       for k, row in sorted(self.visits.items())},
        }

    @classmethod
    def from_json_dict(cls, data):
        q = cls(n_actions=int(data["n_actions"]))
        for key_str, row in data["entries"].items():
            key = StateKey(*(int(p) for p in key_str.split(",")))
            q.table[key] = np.asarray(row, dtype=float)
        for key_str, row in data.get("visits", {}).items():
            key = StateKey(*(int(p) for p in key_str.split(",")))
            q.visits[key] = np.asarray(row, dtype=np.int64)
        return q


def select_action(qtable, key, epsilon, rng, n_valid=None):
    """Epsilon-greedy over the valid action prefix; ties pick the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    n_valid = qtable.n_actions if n_valid is None else max(1, n_valid)
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n_valid))
    row = qtable.row(key)
    if row is None:
        return 0
    return int(np.argmax(row[:n_valid]))


def q_update(qtable, key, action, reward, next_key, alpha, gamma, n_valid_next=None):
    """One Bellman update; touches exactly the (key, action) entry.

    next_key None means terminal: the bootstrap term is zero.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must be in [0, 1)")
    best_next = 0.0 if next_key is None else qtable.best_value(next_key, n_valid_next)
    row = qtable._row_mut(key)
    row[action] += alpha * (reward + gamma * best_next - row[action])
    qtable.visits[key][action] += 1
    return qtable


@dataclass(frozen=True)
class RlConfig:
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_episodes: int | None = None  # None -> 80% of episodes
    episodes: int = 300
    episode_duration: float | None = None      # None -> scenario duration

    def validate(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidConfigError(f"alpha must be in (0, 1] (got {self.alpha!r})")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidConfigError(f"gamma must be in [0, 1) (got {self.gamma!r})")
        for name in ("epsilon_start", "epsilon_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfigError(f"{name} must be in [0, 1] (got {v!r})")
        if self.epsilon_end > self.epsilon_start:
            raise InvalidConfigError("epsilon_end must be <= epsilon_start")
        if self.episodes < 1:
            raise InvalidConfigError(f"episodes must be >= 1 (got {self.episodes!r})")
        if self.epsilon_decay_episodes is not None and self.epsilon_decay_episodes < 0:
            raise InvalidConfigError("epsilon_decay_episodes must be >= 0")
        if self.episode_duration is not None and self.episode_duration <= 0:
            raise InvalidConfigError("episode_duration must be > 0")
        return self

    def epsilon_at(self, episode):
        decay = self.epsilon_decay_episodes
        if decay is None:
            decay = int(0.8 * self.episodes)
        if decay <= 0:
            return self.epsilon_end
        frac = min(1.0, episode / decay)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


class _Pending:
    __slots__ = ("key", "action", "n_valid", "reward", "next_key", "next_valid",
                 "has_next")

    def __init__(self, key, action, n_valid):
        self.key = key
        self.action = action
        self.n_valid = n_valid
        self.reward = None
        self.next_key = None
        self.next_valid = None
        self.has_next = False


class QLearningStrategy:
    """Engine-facing epsilon-greedy agent that learns online.

    s' for a transition is the state at the same vehicle's next task; the
    reward is the negated realized cost reported by the engine. Updates fire
    as soon as both pieces are known, in event order.
    """

    name = "rl-training"

    def __init__(self, qtable, bins, weights, rng, alpha, gamma, epsilon=1.0):
        self.qtable = qtable
        self.bins = bins
        self.weights = weights
        self.rng = rng
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon
        self._pending = {}
        self._last_task_by_vehicle = {}

    def decide(self, obs):
        key = discretize(obs, self.bins)
        n_valid = 1 + min(len(obs.candidates), self.bins.max_candidates)
        vid = obs.vehicle.id
        prev_tid = self._last_task_by_vehicle.get(vid)
        if prev_tid is not None:
            prev = self._pending.get(prev_tid)
            if prev is not None and not prev.has_next:
                prev.next_key = key
                prev.next_valid = n_valid
                prev.has_next = True
                self._finalize(prev_tid)
        action = select_action(self.qtable, key, self.epsilon, self.rng, n_valid)
        self._pending[obs.task.id] = _Pending(key, action, n_valid)
        self._last_task_by_vehicle[vid] = obs.task.id
        if action == 0:
            return Decision.local()
        return Decision.offload(obs.candidates[action - 1].rsu.id)

    def notify(self, outcome):
        p = self._pending.get(outcome.task_id)
        if p is None:
            return
        p.reward = -(outcome.latency_s + self.weights.lam * outcome.energy_j)
        self._finalize(outcome.task_id)

    def _finalize(self, task_id):
        p = self._pending.get(task_id)
        if p is None or p.reward is None or not p.has_next:
            return
        q_update(self.qtable, p.key, p.action, p.reward, p.next_key,
                 self.alpha, self.gamma, p.next_valid)
        del self._pending[task_id]

    def finish(self):
        """Close out transitions with no successor state (episode end)."""
        for tid in sorted(self._pending):
            p = self._pending[tid]
            if p.reward is not None:
                q_update(self.qtable, p.key, p.action, p.reward, None,
                         self.alpha, self.gamma)
        self._pending.clear()
        self._last_task_by_vehicle.clear()


def train(scenario, rl_config, channel=None, weights=None):
    """Run episode simulations and learn a QTable.

    Every episode replays the same seeded scenario; exploration randomness
    continues across episodes from the policy stream. Returns the table and
    the mean per-step reward of each episode.
    """
    from volsim import simengine

    scenario.validate()
    rl_config.validate()
    channel = channel if channel is not None else ChannelParams()
    weights = weights if weights is not None else CostWeights()
    if rl_config.episode_duration is not None:
        scenario = replace(scenario, duration=rl_config.episode_duration)
    bins = BinSpec.from_scenario(scenario, channel)
    qtable = QTable(n_actions=1 + bins.max_candidates)
    rng = seeded_stream(scenario.seed, STREAM_POLICY)
    agent = QLearningStrategy(qtable, bins, weights, rng,
                              rl_config.alpha, rl_config.gamma)
    reward_history = []
    for episode in range(rl_config.episodes):
        agent.epsilon = rl_config.epsilon_at(episode)
        report = simengine.run(scenario, agent, channel=channel, weights=weights)
        reward_history.append(report.reward_history[0] if report.reward_history else 0.0)
    return qtable, reward_history
