"""Closed-form cost model for local execution and vehicle-to-RSU offloading.

All operations are pure functions of their inputs. Scalar math dispatches to
the active kernel backend (compiled or pure) through `volsim._kernels`.
"""

import math
from dataclasses import dataclass

from volsim import _kernels
from volsim.errors import ZeroRateError


@dataclass(frozen=True)
class TaskSpec:
    """One computational task emitted by a vehicle."""

    id: int
    vehicle_id: int
    data_size_bits: float
    intensity_cycles_per_bit: float
    total_cycles: float
    created_at: float
    deadline: float

    def __post_init__(self):
        if self.data_size_bits <= 0:
            raise ValueError("data_size_bits must be > 0")
        if self.intensity_cycles_per_bit <= 0:
            raise ValueError("intensity_cycles_per_bit must be > 0")
        if self.total_cycles != self.data_size_bits * self.intensity_cycles_per_bit:
            raise ValueError("total_cycles must equal data_size_bits * intensity_cycles_per_bit")
        if self.deadline <= self.created_at:
            raise ValueError("deadline must be after created_at")

    @classmethod
    def make(cls, id, vehicle_id, data_size_bits, intensity_cycles_per_bit,
             created_at, deadline):
        return cls(id, vehicle_id, data_size_bits, intensity_cycles_per_bit,
                   data_size_bits * intensity_cycles_per_bit, created_at, deadline)


@dataclass(frozen=True)
class VehicleState:
    id: int
    position: tuple
    speed: float
    heading: float
    cpu_frequency: float
    tx_power: float
    energy_coefficient: float

    def __post_init__(self):
        if self.cpu_frequency <= 0:
            raise ValueError("cpu_frequency must be > 0")
        if self.tx_power <= 0:
            raise ValueError("tx_power must be > 0")
        if self.energy_coefficient <= 0:
            raise ValueError("energy_coefficient must be > 0")
        if self.speed < 0:
            raise ValueError("speed must be >= 0")


@dataclass(frozen=True)
class RsuState:
    id: int
    position: tuple
    cpu_frequency: float
    coverage_radius: float
    queued_cycles: float = 0.0

    def __post_init__(self):
        if self.cpu_frequency <= 0:
            raise ValueError("cpu_frequency must be > 0")
        if self.coverage_radius <= 0:
            raise ValueError("coverage_radius must be > 0")
        if self.queued_cycles < 0:
            raise ValueError("queued_cycles must be >= 0")


@dataclass(frozen=True)
class ChannelParams:
    """Uplink channel: bandwidth B, noise power N0, and the log-distance
    path loss h = g0 * max(d, min_distance)^(-alpha)."""

    bandwidth: float = 1e7
    noise_power: float = 1e-13
    reference_gain: float = 1e-4
    path_loss_exponent: float = 3.0
    min_distance: float = 1.0

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        if self.reference_gain <= 0:
            raise ValueError("reference_gain must be > 0")
        if self.path_loss_exponent < 1:
            raise ValueError("path_loss_exponent must be >= 1")
        if self.min_distance <= 0:
            raise ValueError("min_distance must be > 0")


@dataclass(frozen=True)
class CostWeights:
    """lam converts joules into the latency cost scale: cost = time + lam * energy."""

    lam: float = 0.5

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass(frozen=True)
class CostBreakdown:
    time_s: float
    energy_j: float
    cost: float
    t_tx: float = 0.0
    t_wait: float = 0.0
    t_exec: float = 0.0


def distance_between(a, b):
    """Euclidean distance between two (x, y) positions."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def channel_gain(distance, params):
    """Path loss gain at the given distance, clamped at min_distance."""
    return _kernels.impl.channel_gain(distance, params.reference_gain,
                                      params.path_loss_exponent, params.min_distance)


def snr_linear(distance, tx_power, params):
    """Linear receive SNR P_tx * h / N0 at the given distance."""
    return _kernels.impl.snr(distance, params.reference_gain, params.path_loss_exponent,
                             params.min_distance, tx_power, params.noise_power)


def snr_db(distance, tx_power, params):
    """Receive SNR in dB; -inf when the linear SNR underflows to zero."""
    s = snr_linear(distance, tx_power, params)
    return 10.0 * math.log10(s) if s > 0 else -math.inf


def rate_at_distance(distance, tx_power, params):
    """Shannon uplink rate in bit/s at the given distance."""
    return _kernels.impl.tx_rate(distance, params.reference_gain,
                                 params.path_loss_exponent, params.min_distance,
                                 tx_power, params.noise_power, params.bandwidth)


def transmission_rate(vehicle, rsu, params):
    """Shannon uplink rate between a vehicle and an RSU in bit/s."""
    d = distance_between(vehicle.position, rsu.position)
    return rate_at_distance(d, vehicle.tx_power, params)


def evaluate_local(task, vehicle, weights):
    """Cost of running the task on the vehicle: time C/f, energy kappa*C*f^2."""
    t, e, c = _kernels.impl.local_cost(task.total_cycles, vehicle.cpu_frequency,
                                       vehicle.energy_coefficient, weights.lam)
    return CostBreakdown(time_s=t, energy_j=e, cost=c)


def offload_breakdown(data_bits, total_cycles, rate_bps, rsu_cpu_hz,
                      queued_cycles, tx_power, weights, include_queue=True):
    """Offload cost from an already-known rate and backlog.

    Raises ZeroRateError when rate_bps is 0 (out of effective range).
    """
    if rate_bps <= 0.0:
        raise ZeroRateError("transmission rate is zero; offload infeasible")
    t_tx, t_wait, t_exec, t, e, c = _kernels.impl.offload_cost(
        data_bits, rate_bps, total_cycles, rsu_cpu_hz, queued_cycles,
        tx_power, weights.lam, include_queue)
    return CostBreakdown(time_s=t, energy_j=e, cost=c,
                         t_tx=t_tx, t_wait=t_wait, t_exec=t_exec)


def evaluate_offload(task, vehicle, rsu, params, weights, include_queue=True):
    """Cost of offloading: transmit D/R, optionally wait out the RSU backlog,
    execute C/f_rsu; energy is P_tx * t_tx."""
    rate = transmission_rate(vehicle, rsu, params)
    return offload_breakdown(task.data_size_bits, task.total_cycles, rate,
                             rsu.cpu_frequency, rsu.queued_cycles,
                             vehicle.tx_power, weights, include_queue)


def reward_from_cost(cost):
    """Reward of a realized decision: the negated weighted cost."""
    return -cost
