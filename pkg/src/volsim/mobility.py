"""Scenario generation and vehicle movement.

Two synthetic, fully deterministic mobility models:

* highway_ring — vehicles advance along the x axis at constant speed and
  wrap modulo the area width.
* manhattan_grid — vehicles move along the edges of a square grid, turning
  left/right/straight with probabilities 0.25/0.25/0.5 at intersections.

Placement, mobility, task generation, and policy randomness each use their
own RNG stream derived from the master seed, so adding a strategy or
changing the task load never perturbs trajectories.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from volsim.domain import (ChannelParams, CostWeights, RsuState, VehicleState,
                           distance_between)
from volsim.errors import InvalidConfigError

HIGHWAY_RING = "highway_ring"
MANHATTAN_GRID = "manhattan_grid"
MOBILITY_KINDS = (HIGHWAY_RING, MANHATTAN_GRID)

# Fixed sub-stream indices off the master seed.
STREAM_PLACEMENT = 0
STREAM_MOBILITY = 1
STREAM_TASKS = 2
STREAM_POLICY = 3


def seeded_stream(seed, stream_index):
    """Independent Generator for one concern, derived from the master seed."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(stream_index,))))


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario shape, load, and hardware parameters (all configurable)."""

    area: tuple = (2000.0, 2000.0)
    vehicle_count: int = 200
    rsu_count: int = 15
    mobility_kind: str = HIGHWAY_RING
    speed_range: tuple = (10.0, 30.0)
    arrival_rate_per_vehicle: float = 0.02
    task_size_range: tuple = (8e6, 8e7)
    intensity_range: tuple = (500.0, 1000.0)
    deadline_range: tuple = (2.0, 10.0)
    duration: float = 300.0
    dt: float = 0.5
    seed: int = 1
    block_size_m: float = 100.0
    max_candidates: int = 3
    vehicle_cpu_hz: float = 1e9
    rsu_cpu_hz: float = 1e10
    tx_power_w: float = 0.1
    energy_coefficient: float = 1e-27
    coverage_radius_m: float = 300.0

    def validate(self):
        """Raise InvalidConfigError naming the first violated field."""
        def positive(name, value):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfigError(f"{name} must be > 0 (got {value!r})")

        def pair(name, value, lo_gt=0.0):
            if (not isinstance(value, (tuple, list)) or len(value) != 2
                    or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in value)):
                raise InvalidConfigError(f"{name} must be a (lo, hi) pair (got {value!r})")
            lo, hi = value
            if lo <= lo_gt - 1e-300 and lo_gt > 0:
                raise InvalidConfigError(f"{name} lower bound must be > 0 (got {lo!r})")
            if lo > hi:
                raise InvalidConfigError(f"{name} must satisfy lo <= hi (got {value!r})")

        if not isinstance(self.vehicle_count, int) or self.vehicle_count <= 0:
            raise InvalidConfigError(f"vehicle_count must be a positive integer "
                                     f"(got {self.vehicle_count!r})")
        if not isinstance(self.rsu_count, int) or self.rsu_count <= 0:
            raise InvalidConfigError(f"rsu_count must be a positive integer "
                                     f"(got {self.rsu_count!r})")
        if (not isinstance(self.area, (tuple, list)) or len(self.area) != 2
                or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in self.area)):
            raise InvalidConfigError(f"area must be a (width, height) pair (got {self.area!r})")
        positive("area width", self.area[0])
        positive("area height", self.area[1])
        if self.mobility_kind not in MOBILITY_KINDS:
            raise InvalidConfigError(f"mobility_kind must be one of {MOBILITY_KINDS} "
                                     f"(got {self.mobility_kind!r})")
        pair("speed_range", self.speed_range, lo_gt=-1.0)
        if self.speed_range[0] < 0:
            raise InvalidConfigError("speed_range lower bound must be >= 0")
        positive("arrival_rate_per_vehicle", self.arrival_rate_per_vehicle)
        pair("task_size_range", self.task_size_range)
        pair("intensity_range", self.intensity_range)
        pair("deadline_range", self.deadline_range)
        positive("dt", self.dt)
        positive("duration", self.duration)
        if self.duration < self.dt:
            raise InvalidConfigError("duration must be >= dt")
        if not isinstance(self.seed, int):
            raise InvalidConfigError(f"seed must be an integer (got {self.seed!r})")
        positive("block_size_m", self.block_size_m)
        if self.mobility_kind == MANHATTAN_GRID:
            if (math.floor(self.area[0] / self.block_size_m) < 1
                    or math.floor(self.area[1] / self.block_size_m) < 1):
                raise InvalidConfigError("block_size_m must fit at least one block "
                                         "in each area dimension for manhattan_grid")
        if not isinstance(self.max_candidates, int) or self.max_candidates < 1:
            raise InvalidConfigError(f"max_candidates must be >= 1 "
                                     f"(got {self.max_candidates!r})")
        positive("vehicle_cpu_hz", self.vehicle_cpu_hz)
        positive("rsu_cpu_hz", self.rsu_cpu_hz)
        positive("tx_power_w", self.tx_power_w)
        positive("energy_coefficient", self.energy_coefficient)
        positive("coverage_radius_m", self.coverage_radius_m)
        return self


@dataclass(frozen=True)
class World:
    """Snapshot of the simulated scene at one instant."""

    clock: float
    vehicles: tuple
    rsus: tuple
    channel: ChannelParams
    weights: CostWeights
    config: ScenarioConfig


def rsu_grid_positions(area, count):
    """Even grid of cell centers covering the area, row-major, first `count`."""
    w, h = area
    cols = min(count, max(1, math.ceil(math.sqrt(count * w / h))))
    rows = math.ceil(count / cols)
    positions = []
    for r in range(rows):
        for c in range(cols):
            if len(positions) == count:
                break
            positions.append(((c + 0.5) * w / cols, (r + 0.5) * h / rows))
    return positions


def _place_vehicle(config, rng):
    """(position, heading) draw for one vehicle; draw order is fixed."""
    w, h = config.area
    if config.mobility_kind == HIGHWAY_RING:
        x = rng.uniform(0.0, w)
        y = rng.uniform(0.0, h)
        return (x, y), 0.0
    b = config.block_size_m
    nx = math.floor(w / b) + 1   # vertical road lines at x = 0, b, ...
    ny = math.floor(h / b) + 1
    span_x = (nx - 1) * b
    span_y = (ny - 1) * b
    axis = int(rng.integers(2))
    line = int(rng.integers(ny if axis == 0 else nx))
    offset = rng.uniform(0.0, span_x if axis == 0 else span_y)
    forward = int(rng.integers(2))
    if axis == 0:  # horizontal road: move along x
        return (offset, line * b), (0.0 if forward else math.pi)
    return (line * b, offset), (math.pi / 2 if forward else 3 * math.pi / 2)


def generate_scenario(config, channel=None, weights=None):
    """Build the initial World: seeded uniform vehicles, gridded RSUs."""
    config.validate()
    channel = channel if channel is not None else ChannelParams()
    weights = weights if weights is not None else CostWeights()
    rng = seeded_stream(config.seed, STREAM_PLACEMENT)
    lo, hi = config.speed_range
    vehicles = []
    for i in range(config.vehicle_count):
        position, heading = _place_vehicle(config, rng)
        speed = rng.uniform(lo, hi)
        vehicles.append(VehicleState(
            id=i, position=position, speed=speed, heading=heading,
            cpu_frequency=config.vehicle_cpu_hz, tx_power=config.tx_power_w,
            energy_coefficient=config.energy_coefficient))
    rsus = tuple(
        RsuState(id=j, position=pos, cpu_frequency=config.rsu_cpu_hz,
                 coverage_radius=config.coverage_radius_m)
        for j, pos in enumerate(rsu_grid_positions(config.area, config.rsu_count)))
    return World(clock=0.0, vehicles=tuple(vehicles), rsus=rsus,
                 channel=channel, weights=weights, config=config)


# Manhattan direction encoding: 0 = +x, 1 = +y, 2 = -x, 3 = -y.
_DIR_FROM_HEADING = {0: 0, 1: 1, 2: 2, 3: 3}


def _heading_to_dir(heading):
    return int(round(heading / (math.pi / 2))) % 4


def _dir_to_heading(direction):
    return direction * (math.pi / 2)


def _node_index(value, block):
    return int(round(value / block))


def _is_node(value, block):
    return abs(value - round(value / block) * block) < 1e-6


def _has_room(direction, ix, iy, nx, ny):
    if direction == 0:
        return ix < nx - 1
    if direction == 1:
        return iy < ny - 1
    if direction == 2:
        return ix > 0
    return iy > 0


def _choose_turn(direction, ix, iy, nx, ny, rng):
    """Straight/left/right with 0.5/0.25/0.25, filtered to in-grid options."""
    options = [(direction, 0.5), ((direction + 1) % 4, 0.25), ((direction - 1) % 4, 0.25)]
    valid = [(d, p) for d, p in options if _has_room(d, ix, iy, nx, ny)]
    if not valid:
        return (direction + 2) % 4
    total = sum(p for _, p in valid)
    u = rng.random() * total
    acc = 0.0
    for d, p in valid:
        acc += p
        if u <= acc:
            return d
    return valid[-1][0]


def _step_manhattan(vehicle, config, dt, rng):
    b = config.block_size_m
    w, h = config.area
    nx = math.floor(w / b) + 1
    ny = math.floor(h / b) + 1
    x, y = vehicle.position
    direction = _heading_to_dir(vehicle.heading)
    remaining = vehicle.speed * dt
    while remaining > 1e-12:
        moving = x if direction in (0, 2) else y
        at_node = _is_node(moving, b)
        if at_node:
            ix, iy = _node_index(x, b), _node_index(y, b)
            x, y = ix * b, iy * b  # kill accumulated drift
            direction = _choose_turn(direction, ix, iy, nx, ny, rng)
            moving = x if direction in (0, 2) else y
        if direction in (0, 1):
            idx = math.floor(moving / b + 1e-9)
            target = (idx + 1) * b
            dist = target - moving
        else:
            idx = math.ceil(moving / b - 1e-9)
            target = (idx - 1) * b
            dist = moving - target
        step = min(remaining, dist)
        arrived = step >= dist - 1e-12
        if direction == 0:
            x = target if arrived else x + step
        elif direction == 1:
            y = target if arrived else y + step
        elif direction == 2:
            x = target if arrived else x - step
        else:
            y = target if arrived else y - step
        remaining -= step
    return replace(vehicle, position=(x, y), heading=_dir_to_heading(direction))


def step_mobility(world, dt, rng=None):
    """Advance every vehicle by dt seconds; returns a new World.

    manhattan_grid needs the mobility RNG stream for turn draws;
    highway_ring ignores it.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    config = world.config
    if config.mobility_kind == HIGHWAY_RING:
        width = config.area[0]
        vehicles = tuple(
            replace(v, position=((v.position[0] + v.speed * dt) % width, v.position[1]))
            for v in world.vehicles)
    else:
        if rng is None:
            raise ValueError("manhattan_grid mobility requires an RNG stream")
        vehicles = tuple(_step_manhattan(v, config, dt, rng) for v in world.vehicles)
    return replace(world, clock=world.clock + dt, vehicles=vehicles)


def candidate_rsus(vehicle, world, k):
    """Up to k in-coverage RSUs as (rsu_id, distance), nearest first,
    distance ties broken by lower id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    reachable = []
    for rsu in world.rsus:
        d = distance_between(vehicle.position, rsu.position)
        if d <= rsu.coverage_radius:
            reachable.append((d, rsu.id))
    reachable.sort()
    return [(rid, d) for d, rid in reachable[:k]]
