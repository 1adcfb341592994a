"""Discrete-event simulation of task lifecycles and metric accounting.

Each task runs generate -> decide -> (transmit -> queue ->) execute and ends
in exactly one terminal status. Events are processed in (time, sequence)
order; sequence breaks ties FIFO. A single run is strictly single-threaded;
independent runs may execute in parallel.

Modeling rules:

* Transmission rate is frozen at dispatch; uplink transmissions to the same
  RSU serialize FIFO, as does RSU execution.
* A task that cannot finish by its deadline fails at the deadline. Work it
  actually performed until the abort is charged pro-rata (energy, airtime,
  server busy time); work it never started is not charged and does not
  occupy the server.
* Latency of a failed task counts the time from creation to the failure;
  means are over all generated tasks.
* Channel airtime is accumulated only inside [0, duration], so utilization
  stays in [0, 1] even though lifecycle events drain past the generation
  horizon.
"""

import heapq
import math
from dataclasses import dataclass, replace

from volsim import domain
from volsim.errors import InvalidConfigError
from volsim.mobility import (STREAM_MOBILITY, STREAM_TASKS, candidate_rsus,
                             generate_scenario, seeded_stream, step_mobility)
from volsim.strategies import Candidate, Decision, Observation

EVENT_TASK_ARRIVAL = "task_arrival"
EVENT_TX_COMPLETE = "tx_complete"
EVENT_EXEC_COMPLETE = "exec_complete"
EVENT_DEADLINE_EXPIRY = "deadline_expiry"
EVENT_MOBILITY_TICK = "mobility_tick"

COMPLETED = "completed"
FAILED_DEADLINE = "failed_deadline"
FAILED_OUT_OF_RANGE = "failed_out_of_range"
FAILED_NO_CANDIDATE = "failed_no_candidate"
ALL_STATUSES = (COMPLETED, FAILED_DEADLINE, FAILED_OUT_OF_RANGE, FAILED_NO_CANDIDATE)


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    task_id: int | None = None


@dataclass(frozen=True)
class TaskOutcome:
    task_id: int
    decision: Decision
    status: str
    latency_s: float
    energy_j: float
    completed_at: float


@dataclass(frozen=True)
class MetricsReport:
    mean_latency_s: float
    mean_energy_j: float
    offloading_ratio: float
    throughput_bps: float
    failure_rate: float
    channel_utilization: float
    reward_history: tuple
    totals: dict

    @property
    def total_tasks(self):
        return sum(self.totals.values())


def generate_task_arrivals(config, rng=None):
    """Per-vehicle Poisson task stream over [0, duration), seeded.

    Sizes, intensities, and deadline offsets are uniform in their configured
    ranges. Returns TaskSpecs in generation (vehicle-major) order; ids follow
    that order.
    """
    config.validate()
    if rng is None:
        rng = seeded_stream(config.seed, STREAM_TASKS)
    mean_gap = 1.0 / config.arrival_rate_per_vehicle
    size_lo, size_hi = config.task_size_range
    int_lo, int_hi = config.intensity_range
    dl_lo, dl_hi = config.deadline_range
    tasks = []
    next_id = 0
    for vid in range(config.vehicle_count):
        t = 0.0
        while True:
            t += rng.exponential(mean_gap)
            if t >= config.duration:
                break
            size = rng.uniform(size_lo, size_hi)
            intensity = rng.uniform(int_lo, int_hi)
            deadline = t + rng.uniform(dl_lo, dl_hi)
            tasks.append(domain.TaskSpec.make(
                id=next_id, vehicle_id=vid, data_size_bits=size,
                intensity_cycles_per_bit=intensity, created_at=t, deadline=deadline))
            next_id += 1
    return tasks


class _TaskRec:
    __slots__ = ("spec", "obs", "decision", "status", "dispatched", "deferred",
                 "latency", "energy", "completed_at", "full_energy",
                 "fail_status", "fail_energy")

    def __init__(self, spec):
        self.spec = spec
        self.obs = None
        self.decision = None
        self.status = None
        self.dispatched = False
        self.deferred = False
        self.latency = 0.0
        self.energy = 0.0
        self.completed_at = 0.0
        self.full_energy = 0.0
        self.fail_status = None
        self.fail_energy = 0.0


class Simulation:
    """One deterministic run of (config, strategy, channel, weights)."""

    def __init__(self, config, strategy, channel=None, weights=None,
                 world=None, outcome_sink=None):
        config.validate()
        self.config = config
        self.strategy = strategy
        self.world = world if world is not None else generate_scenario(config, channel, weights)
        self.channel = self.world.channel
        self.weights = self.world.weights
        self.outcome_sink = outcome_sink
        self.tasks = generate_task_arrivals(config)
        self.recs = {t.id: _TaskRec(t) for t in self.tasks}
        self.batch_window = getattr(strategy, "batch_window_s", None)
        if self.batch_window is not None:
            ratio = self.batch_window / config.dt
            if abs(ratio - round(ratio)) > 1e-9 or self.batch_window <= 0:
                raise InvalidConfigError(
                    "batch_window_s must be a positive multiple of dt "
                    f"(window {self.batch_window}, dt {config.dt})")
        self._mobility_rng = seeded_stream(config.seed, STREAM_MOBILITY)
        self._heap = []
        self._seq = 0
        self.clock = 0.0
        self._last_tick = 0.0
        self._uplink_free = {}
        self._exec_free = {}
        self._airtime = 0.0
        self._pending = {}
        self._flush_at = None

    # -- event plumbing -------------------------------------------------

    def _push(self, time, kind, task_id=None):
        heapq.heappush(self._heap, (time, self._seq, Event(time, kind, task_id)))
        self._seq += 1

    def _schedule_ticks(self):
        dt, duration = self.config.dt, self.config.duration
        n = int(math.floor(duration / dt + 1e-9))
        for k in range(1, n + 1):
            self._push(k * dt, EVENT_MOBILITY_TICK)
        if n * dt < duration - 1e-9:
            self._push(duration, EVENT_MOBILITY_TICK)

    # -- observation ----------------------------------------------------

    def _backlog_cycles(self, rsu):
        return max(0.0, self._exec_free.get(rsu.id, 0.0) - self.clock) * rsu.cpu_frequency

    def _observe(self, task, vehicle):
        cands = []
        for rid, dist in candidate_rsus(vehicle, self.world, self.config.max_candidates):
            rsu = self.world.rsus[rid]
            backlog = self._backlog_cycles(rsu)
            rate = domain.rate_at_distance(dist, vehicle.tx_power, self.channel)
            cands.append(Candidate(rsu=replace(rsu, queued_cycles=backlog),
                                   distance_m=dist, rate_bps=rate,
                                   queued_cycles=backlog))
        return Observation(task=task, vehicle=vehicle, candidates=tuple(cands),
                           clock=self.clock)

    # -- dispatch -------------------------------------------------------

    def _resolve(self, rec, status, latency, energy, at):
        rec.status = status
        rec.latency = latency
        rec.energy = energy
        rec.completed_at = at
        outcome = TaskOutcome(
            task_id=rec.spec.id,
            decision=rec.decision if rec.decision is not None else Decision.local(),
            status=status, latency_s=latency, energy_j=energy, completed_at=at)
        if self.outcome_sink is not None:
            self.outcome_sink.append(outcome)
        if hasattr(self.strategy, "notify"):
            self.strategy.notify(outcome)

    def _count_airtime(self, start, length):
        horizon = self.config.duration
        lo = min(start, horizon)
        hi = min(start + length, horizon)
        if hi > lo:
            self._airtime += hi - lo

    def _dispatch(self, rec, decision, now):
        rec.decision = decision
        rec.dispatched = True
        if decision.is_offload:
            self._dispatch_offload(rec, decision.rsu_id, now)
        else:
            self._dispatch_local(rec, now)

    def _dispatch_local(self, rec, now):
        task = rec.spec
        vehicle = self.world.vehicles[task.vehicle_id]
        t_local = task.total_cycles / vehicle.cpu_frequency
        full = (vehicle.energy_coefficient * task.total_cycles
                * vehicle.cpu_frequency * vehicle.cpu_frequency)
        end = now + t_local
        if end <= task.deadline:
            rec.full_energy = full
            self._push(end, EVENT_EXEC_COMPLETE, task.id)
        else:
            rec.fail_status = (FAILED_NO_CANDIDATE if not rec.obs.candidates
                               else FAILED_DEADLINE)
            rec.fail_energy = full * ((task.deadline - now) / t_local)

    def _dispatch_offload(self, rec, rsu_id, now):
        task = rec.spec
        vehicle = self.world.vehicles[task.vehicle_id]
        rsu = self.world.rsus[rsu_id]
        dist = domain.distance_between(vehicle.position, rsu.position)
        if dist > rsu.coverage_radius:
            self._resolve(rec, FAILED_OUT_OF_RANGE, now - task.created_at, 0.0, now)
            return
        rate = domain.rate_at_distance(dist, vehicle.tx_power, self.channel)
        if rate <= 0.0:
            self._resolve(rec, FAILED_OUT_OF_RANGE, now - task.created_at, 0.0, now)
            return
        t_tx = task.data_size_bits / rate
        t_exec = task.total_cycles / rsu.cpu_frequency
        deadline = task.deadline
        tx_start = max(now, self._uplink_free.get(rsu_id, 0.0))
        tx_end = tx_start + t_tx
        if tx_end > deadline:
            rec.fail_status = FAILED_DEADLINE
            if tx_start < deadline:  # transmission aborts mid-air
                airtime = deadline - tx_start
                rec.fail_energy = vehicle.tx_power * airtime
                self._uplink_free[rsu_id] = deadline
                self._count_airtime(tx_start, airtime)
            return
        self._uplink_free[rsu_id] = tx_end
        self._count_airtime(tx_start, t_tx)
        energy = vehicle.tx_power * t_tx
        self._push(tx_end, EVENT_TX_COMPLETE, task.id)
        exec_start = max(tx_end, self._exec_free.get(rsu_id, 0.0))
        exec_end = exec_start + t_exec
        if exec_end <= deadline:
            self._exec_free[rsu_id] = exec_end
            rec.full_energy = energy
            self._push(exec_end, EVENT_EXEC_COMPLETE, task.id)
        else:
            rec.fail_status = FAILED_DEADLINE
            rec.fail_energy = energy  # full transmission already spent
            if exec_start < deadline:  # server worked until the abort
                self._exec_free[rsu_id] = deadline

    # -- handlers -------------------------------------------------------

    def _on_arrival(self, ev):
        rec = self.recs[ev.task_id]
        task = rec.spec
        vehicle = self.world.vehicles[task.vehicle_id]
        rec.obs = self._observe(task, vehicle)
        self._push(task.deadline, EVENT_DEADLINE_EXPIRY, task.id)
        decision = self.strategy.decide(rec.obs)
        if decision is None:
            if self.batch_window is None:
                raise InvalidConfigError(
                    "strategy deferred a decision but has no batch_window_s")
            rec.deferred = True
            self._pending[task.id] = rec
            if self._flush_at is None:
                w = self.batch_window
                self._flush_at = (math.floor(self.clock / w + 1e-9) + 1) * w
        else:
            self._dispatch(rec, decision, self.clock)

    def _on_deadline(self, ev):
        rec = self.recs[ev.task_id]
        if rec.status is not None:
            return
        task = rec.spec
        if rec.deferred and not rec.dispatched:
            self._pending.pop(task.id, None)
            if hasattr(self.strategy, "cancel"):
                self.strategy.cancel(task.id)
            status = FAILED_NO_CANDIDATE if not rec.obs.candidates else FAILED_DEADLINE
            self._resolve(rec, status, task.deadline - task.created_at, 0.0, task.deadline)
            return
        if rec.fail_status is None:
            # completion scheduled exactly at the deadline; ExecComplete wins
            return
        self._resolve(rec, rec.fail_status, task.deadline - task.created_at,
                      rec.fail_energy, task.deadline)

    def _on_exec_complete(self, ev):
        rec = self.recs[ev.task_id]
        if rec.status is not None:
            return
        self._resolve(rec, COMPLETED, self.clock - rec.spec.created_at,
                      rec.full_energy, self.clock)

    def _on_tick(self, ev):
        step = ev.time - self._last_tick
        if step > 0:
            self.world = step_mobility(self.world, step, self._mobility_rng)
            self._last_tick = ev.time
        if self.batch_window is not None and self._pending:
            final = ev.time >= self.config.duration - 1e-9
            if final or (self._flush_at is not None and ev.time >= self._flush_at - 1e-9):
                self._flush(ev.time)

    def _flush(self, now):
        self._flush_at = None
        for task_id, decision in self.strategy.flush_window(now):
            rec = self.recs.get(task_id)
            if rec is None or rec.status is not None or rec.dispatched:
                continue
            self._pending.pop(task_id, None)
            self._dispatch(rec, decision, now)
        if self._pending:
            missing = sorted(self._pending)
            raise RuntimeError(f"strategy failed to flush buffered tasks {missing}")

    # -- main loop ------------------------------------------------------

    def run(self):
        for task in self.tasks:
            self._push(task.created_at, EVENT_TASK_ARRIVAL, task.id)
        self._schedule_ticks()
        handlers = {
            EVENT_TASK_ARRIVAL: self._on_arrival,
            EVENT_DEADLINE_EXPIRY: self._on_deadline,
            EVENT_EXEC_COMPLETE: self._on_exec_complete,
            EVENT_MOBILITY_TICK: self._on_tick,
            EVENT_TX_COMPLETE: lambda ev: None,
        }
        while self._heap:
            time, _, ev = heapq.heappop(self._heap)
            if time < self.clock - 1e-9:
                raise RuntimeError("event time regression")
            self.clock = max(self.clock, time)
            handlers[ev.kind](ev)
        if hasattr(self.strategy, "finish"):
            self.strategy.finish()
        return self._metrics()

    def _metrics(self):
        recs = [self.recs[t.id] for t in self.tasks]
        for rec in recs:
            if rec.status is None:
                raise RuntimeError(f"task {rec.spec.id} never reached a terminal status")
        n = len(recs)
        totals = {status: 0 for status in ALL_STATUSES}
        for rec in recs:
            totals[rec.status] += 1
        offloaded = [r for r in recs if r.decision is not None and r.decision.is_offload]
        completed_offload_bits = sum(
            r.spec.data_size_bits for r in offloaded if r.status == COMPLETED)
        lam = self.weights.lam
        duration = self.config.duration
        if n:
            mean_latency = sum(r.latency for r in recs) / n
            mean_energy = sum(r.energy for r in recs) / n
            mean_reward = sum(-(r.latency + lam * r.energy) for r in recs) / n
            failure = sum(1 for r in recs if r.status != COMPLETED) / n
            ratio = len(offloaded) / n
        else:
            mean_latency = mean_energy = mean_reward = failure = ratio = 0.0
        return MetricsReport(
            mean_latency_s=mean_latency,
            mean_energy_j=mean_energy,
            offloading_ratio=ratio,
            throughput_bps=completed_offload_bits / duration,
            failure_rate=failure,
            channel_utilization=self._airtime / (duration * len(self.world.rsus)),
            reward_history=(mean_reward,) if n else (),
            totals=totals)


def run(config, strategy, channel=None, weights=None, world=None, outcome_sink=None):
    """Simulate one scenario under one strategy; returns the MetricsReport.

    Pass `outcome_sink` (a list) to also collect per-task TaskOutcome records.
    `world` overrides the generated initial world (positions, hardware) while
    keeping the config-seeded task stream and mobility.
    """
    sim = Simulation(config, strategy, channel=channel, weights=weights,
                     world=world, outcome_sink=outcome_sink)
    report = sim.run()
    if report.total_tasks != len(sim.tasks):
        raise RuntimeError("task conservation violated")
    return report
