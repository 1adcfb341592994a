# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors `_pure.py` operation for operation (same IEEE ops through the same
libm) so results are bit-identical across backends; keep edits synchronized.
"""

from libc.math cimport floor, log2, pow

BACKEND = "compiled"


cpdef double channel_gain(double distance, double g0, double alpha, double d_min):
    """Log-distance path loss gain g0 * max(d, d_min)^(-alpha)."""
    cdef double d = distance if distance > d_min else d_min
    return g0 * pow(d, -alpha)


cpdef double snr(double distance, double g0, double alpha, double d_min,
                 double tx_power, double noise_power):
    """Linear receive SNR: P_tx * h / N0."""
    return tx_power * channel_gain(distance, g0, alpha, d_min) / noise_power


cpdef double tx_rate(double distance, double g0, double alpha, double d_min,
                     double tx_power, double noise_power, double bandwidth):
    """Shannon uplink rate B * log2(1 + P_tx * h / N0) in bit/s."""
    return bandwidth * log2(1.0 + snr(distance, g0, alpha, d_min, tx_power, noise_power))


cpdef tuple local_cost(double total_cycles, double cpu_hz, double kappa, double lam):
    """(time, energy, weighted cost) of on-board execution."""
    cdef double t = total_cycles / cpu_hz
    cdef double e = kappa * total_cycles * cpu_hz * cpu_hz
    return t, e, t + lam * e


cpdef tuple offload_cost(double data_bits, double rate_bps, double total_cycles,
                         double rsu_cpu_hz, double queued_cycles, double tx_power,
                         double lam, bint include_queue):
    """(t_tx, t_wait, t_exec, time, energy, weighted cost) of offloading."""
    cdef double t_tx = data_bits / rate_bps
    cdef double t_exec = total_cycles / rsu_cpu_hz
    cdef double t_wait = queued_cycles / rsu_cpu_hz if include_queue else 0.0
    cdef double t = t_tx + t_wait + t_exec
    cdef double e = tx_power * t_tx
    return t_tx, t_wait, t_exec, t, e, t + lam * e


cpdef pso_step(double[:, ::1] pos, double[:, ::1] vel, double[:, ::1] pbest,
               double[::1] gbest, double[:, ::1] r1, double[:, ::1] r2,
               double inertia, double cognitive, double social,
               double[::1] v_max, double[::1] lo, double[::1] hi):
    """One velocity/position update over the whole swarm, in place."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t i, j
    cdef double x, v
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


cpdef double assignment_cost(double[::1] coords, int[::1] cand_start,
                             int[::1] cand_rsu, double[::1] cand_rate,
                             double[::1] cand_fj, double[::1] cand_backlog,
                             double[::1] data_bits, double[::1] cycles,
                             double[::1] local_time, double[::1] local_energy,
                             double[::1] tx_power, double lam,
                             double[::1] rsu_added):
    """Total weighted cost of one decoded window assignment."""
    cdef Py_ssize_t n = data_bits.shape[0]
    cdef Py_ssize_t n_rsu = rsu_added.shape[0]
    cdef Py_ssize_t i, r
    cdef int k, a, c
    cdef double total = 0.0
    cdef double fj, t_tx, t_wait, t_exec, e
    for r in range(n_rsu):
        rsu_added[r] = 0.0
    for i in range(n):
        k = cand_start[i + 1] - cand_start[i]
        a = <int>floor(coords[i] + 0.5)
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
