import math

import numpy as np
import pytest

from volsim.domain import (ChannelParams, CostWeights, RsuState, TaskSpec,
                           VehicleState)
from volsim.mobility import HIGHWAY_RING, MANHATTAN_GRID, ScenarioConfig
from volsim.strategies import Candidate, Observation


def make_vehicle(vid=0, position=(0.0, 0.0), speed=15.0, heading=0.0,
                 cpu=1e9, tx_power=0.1, kappa=1e-27):
    return VehicleState(id=vid, position=position, speed=speed, heading=heading,
                        cpu_frequency=cpu, tx_power=tx_power,
                        energy_coefficient=kappa)


def make_rsu(rid=0, position=(0.0, 0.0), cpu=1e10, coverage=300.0, queued=0.0):
    return RsuState(id=rid, position=position, cpu_frequency=cpu,
                    coverage_radius=coverage, queued_cycles=queued)


def make_task(tid=0, vid=0, size=8e6, intensity=500.0, created=0.0, deadline=100.0):
    return TaskSpec.make(id=tid, vehicle_id=vid, data_size_bits=size,
                         intensity_cycles_per_bit=intensity, created_at=created,
                         deadline=deadline)


def random_observation(rng, max_candidates=3, allow_empty=True):
    """Random but well-formed observation (candidates sorted by distance)."""
    task = make_task(tid=int(rng.integers(1e6)), size=rng.uniform(8e6, 8e7),
                     intensity=rng.uniform(500, 1000))
    vehicle = make_vehicle(speed=rng.uniform(0, 30), cpu=rng.uniform(2e8, 2e9))
    lo = 0 if allow_empty else 1
    n = int(rng.integers(lo, max_candidates + 1))
    dists = np.sort(rng.uniform(1.0, 290.0, size=n))
    cands = []
    for i, d in enumerate(dists):
        rsu = make_rsu(rid=i, position=(float(d), 0.0),
                       cpu=rng.uniform(5e9, 2e10),
                       queued=rng.uniform(0, 5e10))
        cands.append(Candidate(rsu=rsu, distance_m=float(d),
                               rate_bps=rng.uniform(1e6, 1e8),
                               queued_cycles=rsu.queued_cycles))
    return Observation(task=task, vehicle=vehicle, candidates=tuple(cands), clock=0.0)


def small_ring_config(**over):
    """Fast scenario for engine tests."""
    base = dict(area=(900.0, 20.0), vehicle_count=8, rsu_count=3,
                mobility_kind=HIGHWAY_RING, speed_range=(10.0, 25.0),
                arrival_rate_per_vehicle=0.08, task_size_range=(8e6, 3.2e7),
                intensity_range=(500.0, 1000.0), deadline_range=(2.0, 10.0),
                duration=40.0, dt=0.5, seed=7, vehicle_cpu_hz=2.5e8)
    base.update(over)
    return ScenarioConfig(**base)


def desk_config(**over):
    """Desk-scale comparison scenario: 50 vehicles, 5 RSUs, 200 s, full
    RSU coverage, local execution too slow to meet deadlines."""
    base = dict(area=(1500.0, 300.0), vehicle_count=50, rsu_count=5,
                mobility_kind=MANHATTAN_GRID, speed_range=(10.0, 20.0),
                arrival_rate_per_vehicle=0.055, task_size_range=(8e6, 3.2e7),
                intensity_range=(500.0, 1000.0), deadline_range=(2.0, 10.0),
                duration=200.0, dt=0.5, seed=11, vehicle_cpu_hz=2.5e8,
                block_size_m=100.0)
    base.update(over)
    return ScenarioConfig(**base)


def gap_config(**over):
    """Desk variant with coverage holes: both offload labels occur."""
    return desk_config(area=(4000.0, 300.0), vehicle_count=100, **over)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def channel():
    return ChannelParams()


@pytest.fixture
def weights():
    return CostWeights(0.5)
