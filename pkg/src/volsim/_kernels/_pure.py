"""Pure-Python kernel backend.

Reference implementation of the hot numeric kernels. The compiled backend
(`_core.pyx`) mirrors these loops operation for operation so both backends
produce bit-identical floats; keep any edit synchronized.
"""

import math

BACKEND = "pure"


def channel_gain(distance, g0, alpha, d_min):
    """Log-distance path loss gain g0 * max(d, d_min)^(-alpha)."""
    d = distance if distance > d_min else d_min
    return g0 * d ** -alpha


def snr(distance, g0, alpha, d_min, tx_power, noise_power):
    """Linear receive SNR: P_tx * h / N0."""
    return tx_power * channel_gain(distance, g0, alpha, d_min) / noise_power


def tx_rate(distance, g0, alpha, d_min, tx_power, noise_power, bandwidth):
    """Shannon uplink rate B * log2(1 + P_tx * h / N0) in bit/s."""
    return bandwidth * math.log2(1.0 + snr(distance, g0, alpha, d_min, tx_power, noise_power))


def local_cost(total_cycles, cpu_hz, kappa, lam):
    """(time, energy, weighted cost) of on-board execution."""
    t = total_cycles / cpu_hz
    e = kappa * total_cycles * cpu_hz * cpu_hz
    return t, e, t + lam * e


def offload_cost(data_bits, rate_bps, total_cycles, rsu_cpu_hz, queued_cycles,
                 tx_power, lam, include_queue):
    """(t_tx, t_wait, t_exec, time, energy, weighted cost) of offloading.

    t_wait is the backlog drain time queued_cycles / f_rsu, or 0 when
    include_queue is false. Caller guarantees rate_bps > 0.
    """
    t_tx = data_bits / rate_bps
    t_exec = total_cycles / rsu_cpu_hz
    t_wait = queued_cycles / rsu_cpu_hz if include_queue else 0.0
    t = t_tx + t_wait + t_exec
    e = tx_power * t_tx
    return t_tx, t_wait, t_exec, t, e, t + lam * e


def pso_step(pos, vel, pbest, gbest, r1, r2, inertia, cognitive, social,
             v_max, lo, hi):
    """One velocity/position update over the whole swarm, in place.

    pos, vel, pbest, r1, r2 are (particles, dim) float64 arrays; gbest,
    v_max, lo, hi have length dim. r1/r2 are the per-dimension uniform
    draws, supplied by the caller so RNG stays backend-independent.
    """
    n, d = pos.shape
    for i in range(n):
        for j in range(d):
            x = pos[i, j]
            v = (inertia * vel[i, j]
                 + cognitive * r1[i, j] * (pbest[i, j] - x)
                 + social * r2[i, j] * (gbest[j] - x))
            if v > v_max[j]:
                v = v_max[j]
            elif v < -v_max[j]:
                v = -v_max[j]
            x = x + v
            if x < lo[j]:
                x = lo[j]
            elif x > hi[j]:
                x = hi[j]
            vel[i, j] = v
            pos[i, j] = x


def assignment_cost(coords, cand_start, cand_rsu, cand_rate, cand_fj,
                    cand_backlog, data_bits, cycles, local_time, local_energy,
                    tx_power, lam, rsu_added):
    """Total weighted cost of one decoded window assignment.

    Coordinate i decodes by round-and-clamp to {0..k_i}: 0 = run task i
    locally, j = its j-th candidate RSU. Offloaded cycles accumulate into
    rsu_added (scratch, zeroed here) so later tasks in the window see the
    backlog added by earlier ones.
    """
    for r in range(len(rsu_added)):
        rsu_added[r] = 0.0
    total = 0.0
    n = len(data_bits)
    for i in range(n):
        k = cand_start[i + 1] - cand_start[i]
        a = int(math.floor(coords[i] + 0.5))
        if a < 0:
            a = 0
        elif a > k:
            a = k
        if a == 0:
            total = total + (local_time[i] + lam * local_energy[i])
        else:
            c = cand_start[i] + (a - 1)
            fj = cand_fj[c]
            t_tx = data_bits[i] / cand_rate[c]
            t_wait = (cand_backlog[c] + rsu_added[cand_rsu[c]]) / fj
            t_exec = cycles[i] / fj
            e = tx_power[i] * t_tx
            total = total + ((t_tx + t_wait + t_exec) + lam * e)
            rsu_added[cand_rsu[c]] = rsu_added[cand_rsu[c]] + cycles[i]
    return total
