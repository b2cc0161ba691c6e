#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the three hot loops (rod stepping, full spiking control interval,
neuron-driven oscillator) on both backends and prints the speedups.

    python3 benchmarks/bench_backends.py [--repeats 3]
"""

import argparse
import time

import numpy as np

from softsnake.backend import available_backends
from softsnake.rod import EnvPhysics, RodMaterial, _phys_block, build_rod


def fresh_rod_args(n=10, length=9.0, seed=0):
    mat = RodMaterial()
    rng = np.random.default_rng(seed)
    rod = build_rod(n, length, mat, (0, 0, 0), (-1, 0, 0))
    rod.node_velocities += 0.1 * rng.standard_normal(rod.node_velocities.shape)
    env = EnvPhysics.for_rod(mat, length, n)
    phys = _phys_block(mat, env, 0.001, pos_limit=1e3, strain_factor=3.0)
    args = (rod.node_positions, rod.node_velocities, rod.element_frames,
            rod.element_angular_velocities, rod.external_forces,
            rod.external_torques, rod.element_rest_lengths,
            rod.voronoi_rest_lengths, rod.node_masses, rod.element_inertia,
            phys)
    return args


def bench_rod(mod, steps):
    args = fresh_rod_args()
    t0 = time.perf_counter()
    mod.rod_step_n(*args, steps)
    return (time.perf_counter() - t0) / steps


def bench_spiking_interval(mod, steps):
    args = fresh_rod_args()
    m = 3
    u = np.zeros(m)
    o = np.zeros(m)
    un = np.array([0.002, -0.1, 0.01])
    up = np.array([0.02, 0.1, 0.05])
    seg = [np.array(v, dtype=np.int64) for v in
           ([0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 3, 6], [3, 6, 8])]
    empty = np.zeros((0, 0))
    t0 = time.perf_counter()
    mod.spiking_interval(*args, u, o, un, up, 5.0, 0.1, 0.1, *seg, -1.0,
                         steps, 0.0, 0.0, -1.0, 0, 0, empty, empty, empty)
    return (time.perf_counter() - t0) / steps


def bench_oscillator(mod, steps):
    out = np.zeros((steps, 4))
    t0 = time.perf_counter()
    mod.oscillator_run(1.0, 1.0, 0.1, 10.0, 1.0, 0.1, 0.001,
                       -0.1, -0.025, 0.4, 0.0, steps, out)
    return (time.perf_counter() - t0) / steps


BENCHES = (
    ("rod step (10 nodes)", bench_rod, {"python": 2_000, "compiled": 200_000}),
    ("spiking interval step (3x3 snake)", bench_spiking_interval,
     {"python": 2_000, "compiled": 200_000}),
    ("oscillator step", bench_oscillator,
     {"python": 50_000, "compiled": 2_000_000}),
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}\n")
    results = {}
    for label, fn, steps_by_backend in BENCHES:
        for name, mod in backends.items():
            steps = steps_by_backend[name]
            best = min(fn(mod, steps) for _ in range(args.repeats))
            results[(label, name)] = best
    width = max(len(label) for label, _, _ in BENCHES) + 2
    header = f"{'kernel':<{width}}{'python':>14}{'compiled':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, _, _ in BENCHES:
        py = results.get((label, "python"))
        cc = results.get((label, "compiled"))
        py_s = f"{py * 1e6:10.2f} us" if py else "         -"
        cc_s = f"{cc * 1e6:10.2f} us" if cc else "         -"
        sp = f"{py / cc:9.1f}x" if (py and cc) else "        -"
        print(f"{label:<{width}}{py_s:>14}{cc_s:>14}{sp:>10}")


if __name__ == "__main__":
    main()
