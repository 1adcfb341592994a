#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Covers the three hot paths: cost-model scalars, the PSO swarm update, and a
full window assignment optimization. Run from the repo root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from volsim import _kernels, pso
from volsim.domain import CostWeights


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_offload_cost(backend, n=200_000):
    rng = np.random.Generator(np.random.PCG64(1))
    bits = rng.uniform(8e6, 8e7, n)
    rate = rng.uniform(1e6, 1e8, n)
    cyc = rng.uniform(4e9, 8e10, n)
    q = rng.uniform(0, 1e11, n)
    fn = backend.offload_cost

    def run():
        acc = 0.0
        for i in range(n):
            acc += fn(bits[i], rate[i], cyc[i], 1e10, q[i], 0.1, 0.5, True)[5]
        return acc

    return timeit(run)


def bench_pso_step(backend, particles=64, dim=16, iters=400):
    rng = np.random.Generator(np.random.PCG64(2))
    pos = rng.uniform(-1, 1, (particles, dim))
    vel = rng.uniform(-1, 1, (particles, dim))
    pbest = pos.copy()
    gbest = rng.uniform(-1, 1, dim)
    r1 = rng.random((particles, dim))
    r2 = rng.random((particles, dim))
    v_max = np.full(dim, 0.5)
    lo = np.full(dim, -1.0)
    hi = np.full(dim, 1.0)
    fn = backend.pso_step

    def run():
        for _ in range(iters):
            fn(pos, vel, pbest, gbest, r1, r2, 0.7, 1.5, 1.5, v_max, lo, hi)

    return timeit(run)


def make_window(n_tasks):
    """Synthetic decision window without touching the test helpers."""
    from volsim.domain import RsuState, TaskSpec, VehicleState
    from volsim.strategies import Candidate, Observation

    rng = np.random.Generator(np.random.PCG64(3))
    window = []
    for i in range(n_tasks):
        size = float(rng.uniform(8e6, 3.2e7))
        intensity = float(rng.uniform(500, 1000))
        task = TaskSpec.make(id=i, vehicle_id=i, data_size_bits=size,
                             intensity_cycles_per_bit=intensity,
                             created_at=0.0, deadline=10.0)
        vehicle = VehicleState(id=i, position=(0.0, 0.0), speed=15.0, heading=0.0,
                               cpu_frequency=2.5e8, tx_power=0.1,
                               energy_coefficient=1e-27)
        cands = []
        for j in range(3):
            rsu = RsuState(id=j, position=(50.0 * (j + 1), 0.0),
                           cpu_frequency=1e10, coverage_radius=300.0,
                           queued_cycles=float(rng.uniform(0, 2e10)))
            cands.append(Candidate(rsu=rsu, distance_m=50.0 * (j + 1),
                                   rate_bps=float(rng.uniform(1e7, 1e8)),
                                   queued_cycles=rsu.queued_cycles))
        window.append(Observation(task=task, vehicle=vehicle,
                                  candidates=tuple(cands), clock=0.0))
    return window


def bench_optimize_window(backend_label, n_tasks=8, repeats=10):
    window = make_window(n_tasks)
    cfg = pso.PsoConfig(particles=30, iterations=100, seed=4)

    def run():
        for r in range(repeats):
            pso.optimize_window(window, CostWeights(0.5), cfg, seed=r)

    with _kernels.forced(backend_label):
        return timeit(run)


def main():
    backends = _kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    rows = []
    for label in backends:
        backend = _kernels.get_backend(label)
        rows.append((label,
                     bench_offload_cost(backend),
                     bench_pso_step(backend),
                     bench_optimize_window(label)))
    print(f"\n{'backend':10s} {'offload_cost x200k':>20s} {'pso_step 64x16x400':>20s} "
          f"{'optimize_window x10':>20s}")
    for label, a, b, c in rows:
        print(f"{label:10s} {a:18.3f}s {b:18.3f}s {c:18.3f}s")
    if len(rows) == 2:
        base = rows[0]
        fast = rows[1]
        print(f"\nspeedup (compiled vs pure): "
              f"offload_cost {base[1] / fast[1]:.1f}x, "
              f"pso_step {base[2] / fast[2]:.1f}x, "
              f"optimize_window {base[3] / fast[3]:.1f}x")


if __name__ == "__main__":
    main()
