"""Particle swarm optimization: generic continuous core plus the task
assignment fitness used by the hybrid strategy's batch windows.

The velocity update is v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x) with
fresh uniform r1, r2 per dimension, clamped to +/-v_max; positions clamp to
the bounds. Personal/global bests update on strict improvement only, so the
global best history is non-increasing by construction. Each particle draws
from its own RNG stream: permuting particle order never changes any
particle's trajectory, and per-step draws stay identical whether fitness
evaluations run serially or concurrently.

Window assignment encoding: one coordinate per task, decoded by
round-and-clamp to {0..k_i} where 0 means local execution and j means the
task's j-th candidate RSU. Offloaded cycles accumulate per RSU across the
window in task order, so co-assigned tasks see each other's load.
"""

import math
from dataclasses import dataclass

import numpy as np

from volsim import _kernels, domain
from volsim.errors import InvalidConfigError, NonFiniteFitnessError


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 30
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    v_max: float | None = None        # None -> 0.5 * (hi - lo) per dimension
    bounds: tuple | None = None       # (lo, hi) applied to every dimension
    seed: int = 0
    batch_window_s: float = 1.0       # hybrid batching window; <= 0 disables

    def validate(self):
        if not isinstance(self.particles, int) or self.particles < 1:
            raise InvalidConfigError(f"particles must be >= 1 (got {self.particles!r})")
        if not isinstance(self.iterations, int) or self.iterations < 1:
            raise InvalidConfigError(f"iterations must be >= 1 (got {self.iterations!r})")
        if not 0.0 <= self.inertia <= 1.0:
            raise InvalidConfigError(f"inertia must be in [0, 1] (got {self.inertia!r})")
        if self.cognitive < 0 or self.social < 0:
            raise InvalidConfigError("cognitive and social weights must be >= 0")
        if self.v_max is not None and self.v_max <= 0:
            raise InvalidConfigError(f"v_max must be > 0 (got {self.v_max!r})")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not lo < hi:
                raise InvalidConfigError(f"bounds must satisfy lo < hi (got {self.bounds!r})")
        if not isinstance(self.seed, int):
            raise InvalidConfigError(f"seed must be an integer (got {self.seed!r})")
        return self


class Swarm:
    """Particle population with per-particle RNG streams and best tracking."""

    def __init__(self, positions, velocities, pbest_pos, pbest_fit,
                 gbest_pos, gbest_fit, gens, lo, hi, v_max):
        self.positions = positions
        self.velocities = velocities
        self.pbest_pos = pbest_pos
        self.pbest_fit = pbest_fit
        self.gbest_pos = gbest_pos
        self.gbest_fit = gbest_fit
        self.gens = gens
        self.lo = lo
        self.hi = hi
        self.v_max = v_max


def _resolve_bounds(dim, config, bounds):
    if bounds is None:
        bounds = config.bounds
    if bounds is None:
        raise InvalidConfigError("bounds are required (config.bounds or argument)")
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (2,):
        lo = np.full(dim, arr[0])
        hi = np.full(dim, arr[1])
    elif arr.shape == (dim, 2):
        lo = arr[:, 0].copy()
        hi = arr[:, 1].copy()
    else:
        raise InvalidConfigError("bounds must be (lo, hi) or one pair per dimension")
    if not np.all(lo < hi):
        raise InvalidConfigError("bounds must satisfy lo < hi in every dimension")
    return lo, hi


def _check_fitness(value, particle_index):
    f = float(value)
    if not math.isfinite(f):
        raise NonFiniteFitnessError(particle_index, value)
    return f


def init_swarm(dim, config, fitness, seed=None, bounds=None):
    """Seeded swarm: positions uniform in bounds, velocities in +/-v_max,
    bests from the initial fitness evaluation."""
    config.validate()
    if dim < 1:
        raise InvalidConfigError(f"dim must be >= 1 (got {dim!r})")
    lo, hi = _resolve_bounds(dim, config, bounds)
    v_max = (np.full(dim, config.v_max) if config.v_max is not None
             else 0.5 * (hi - lo))
    root = np.random.SeedSequence(config.seed if seed is None else seed)
    gens = [np.random.Generator(np.random.PCG64(child))
            for child in root.spawn(config.particles)]
    n = config.particles
    positions = np.empty((n, dim))
    velocities = np.empty((n, dim))
    for i, gen in enumerate(gens):
        positions[i] = lo + gen.random(dim) * (hi - lo)
        velocities[i] = -v_max + gen.random(dim) * (2.0 * v_max)
    pbest_pos = positions.copy()
    pbest_fit = np.array([_check_fitness(fitness(positions[i].copy()), i)
                          for i in range(n)])
    best_i = int(np.argmin(pbest_fit))
    return Swarm(positions, velocities, pbest_pos, pbest_fit,
                 pbest_pos[best_i].copy(), float(pbest_fit[best_i]),
                 gens, lo, hi, v_max)


def step(swarm, fitness, config):
    """One synchronized velocity/position update plus best refresh."""
    n, dim = swarm.positions.shape
    r1 = np.empty((n, dim))
    r2 = np.empty((n, dim))
    for i, gen in enumerate(swarm.gens):
        r1[i] = gen.random(dim)
        r2[i] = gen.random(dim)
    _kernels.impl.pso_step(swarm.positions, swarm.velocities, swarm.pbest_pos,
                           swarm.gbest_pos, r1, r2, config.inertia,
                           config.cognitive, config.social, swarm.v_max,
                           swarm.lo, swarm.hi)
    for i in range(n):
        f = _check_fitness(fitness(swarm.positions[i].copy()), i)
        if f < swarm.pbest_fit[i]:
            swarm.pbest_fit[i] = f
            swarm.pbest_pos[i] = swarm.positions[i]
    for i in range(n):
        if swarm.pbest_fit[i] < swarm.gbest_fit:
            swarm.gbest_fit = float(swarm.pbest_fit[i])
            swarm.gbest_pos = swarm.pbest_pos[i].copy()
    return swarm


def optimize(fitness, dim, config, seed=None, bounds=None):
    """Full PSO run; returns (best_position, best_fitness, history) where
    history holds the global best after each iteration (non-increasing)."""
    swarm = init_swarm(dim, config, fitness, seed=seed, bounds=bounds)
    history = []
    for _ in range(config.iterations):
        step(swarm, fitness, config)
        history.append(swarm.gbest_fit)
    return swarm.gbest_pos.copy(), swarm.gbest_fit, history


# -- window assignment fitness -----------------------------------------


class _WindowPack:
    """Flattened arrays for one decision window, kernel-ready."""

    def __init__(self, observations, weights):
        n = len(observations)
        cand_start = np.zeros(n + 1, dtype=np.int32)
        cand_rsu, cand_rate, cand_fj, cand_backlog = [], [], [], []
        data_bits = np.empty(n)
        cycles = np.empty(n)
        local_time = np.empty(n)
        local_energy = np.empty(n)
        tx_power = np.empty(n)
        rsu_index = {}
        for i, obs in enumerate(observations):
            usable = [c for c in obs.candidates if c.rate_bps > 0.0]
            cand_start[i + 1] = cand_start[i] + len(usable)
            for cand in usable:
                rid = cand.rsu.id
                if rid not in rsu_index:
                    rsu_index[rid] = len(rsu_index)
                cand_rsu.append(rsu_index[rid])
                cand_rate.append(cand.rate_bps)
                cand_fj.append(cand.rsu.cpu_frequency)
                cand_backlog.append(cand.queued_cycles)
            data_bits[i] = obs.task.data_size_bits
            cycles[i] = obs.task.total_cycles
            local = domain.evaluate_local(obs.task, obs.vehicle, weights)
            local_time[i] = local.time_s
            local_energy[i] = local.energy_j
            tx_power[i] = obs.vehicle.tx_power
        self.n_tasks = n
        self.cand_start = cand_start
        self.cand_rsu = np.asarray(cand_rsu, dtype=np.int32)
        self.cand_rate = np.asarray(cand_rate, dtype=float)
        self.cand_fj = np.asarray(cand_fj, dtype=float)
        self.cand_backlog = np.asarray(cand_backlog, dtype=float)
        self.data_bits = data_bits
        self.cycles = cycles
        self.local_time = local_time
        self.local_energy = local_energy
        self.tx_power = tx_power
        self.lam = weights.lam
        self.max_candidates = int(np.max(np.diff(cand_start))) if n else 0
        self._scratch = np.zeros(max(1, len(rsu_index)))

    def cost(self, coords):
        return _kernels.impl.assignment_cost(
            np.ascontiguousarray(coords, dtype=float), self.cand_start,
            self.cand_rsu, self.cand_rate, self.cand_fj, self.cand_backlog,
            self.data_bits, self.cycles, self.local_time, self.local_energy,
            self.tx_power, self.lam, self._scratch)

    def candidate_count(self, i):
        return int(self.cand_start[i + 1] - self.cand_start[i])


def make_window_fitness(observations, weights):
    """(fitness callable, pack) for one window; pack arrays are built once."""
    pack = _WindowPack(observations, weights)
    return pack.cost, pack


def assignment_fitness(position, window_tasks, weights):
    """Weighted total cost of the assignment encoded by `position`."""
    fitness, _ = make_window_fitness(window_tasks, weights)
    return fitness(position)


def decode_assignment(position, observations):
    """Round-and-clamp each coordinate to {0..k_i} (0 = local)."""
    out = []
    for c, obs in zip(position, observations):
        k = sum(1 for cand in obs.candidates if cand.rate_bps > 0.0)
        a = int(math.floor(c + 0.5))
        out.append(min(max(a, 0), k))
    return out


def optimize_window(observations, weights, config, seed=None):
    """PSO over one window; returns (assignments, best_fitness, history)."""
    fitness, pack = make_window_fitness(observations, weights)
    dim = pack.n_tasks
    if dim == 0:
        return [], 0.0, []
    bounds = (-0.5, pack.max_candidates + 0.5)
    best_pos, best_fit, history = optimize(fitness, dim, config,
                                           seed=seed, bounds=bounds)
    return decode_assignment(best_pos, observations), best_fit, history


def enumerate_window_best(observations, weights):
    """Exhaustive argmin over all decodable assignments (test oracle scale)."""
    fitness, pack = make_window_fitness(observations, weights)
    n = pack.n_tasks
    best = (math.inf, None)
    counts = [pack.candidate_count(i) for i in range(n)]

    def rec(i, coords):
        nonlocal best
        if i == n:
            f = fitness(np.asarray(coords, dtype=float))
            if f < best[0]:
                best = (f, list(coords))
            return
        for a in range(counts[i] + 1):
            rec(i + 1, coords + [float(a)])

    rec(0, [])
    return best[1], best[0]
