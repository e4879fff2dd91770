"""Compiled vs pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the swing-equation integrator (droop providers, 1 ms step, 20 s) and the
batched security screen (50-point grid over three services). Compilation is
excluded: each kernel is called once before timing.
"""
import argparse
import time

import numpy as np

from freqsec import kernels, security, simulate
from freqsec.core import FrService, Portfolio, SecuritySpec, SystemSnapshot, validate_portfolio


def four_service():
    svcs = [FrService("FR1", 1000, 3, 0), FrService("FR2", 2000, 10, 0),
            FrService("FR3", 1000, 5, 0.5), FrService("FR4", 1000, 8, 1)]
    port = validate_portfolio(Portfolio(svcs, [200, 980, 500, 600]))
    return SystemSnapshot(180000.0, 0.0, 1800.0, port)


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    spec = SecuritySpec()
    snap = four_service()
    p = simulate.tune_droop(snap, spec)
    swing = (snap.h_gen, spec.f_nominal, snap.p_loss, 150.0, 1e-3, 20000,
             np.ones(len(p), dtype=np.int64), np.array([x.allocation for x in p]),
             np.array([x.service.ramp_duration for x in p]), np.array([x.service.activation_delay for x in p]),
             np.array([x.gain for x in p]), np.array([x.tau for x in p]), np.array([x.deadband for x in p]))

    svcs = list(snap.portfolio.services[:3])
    axes = [np.linspace(0, s.capacity_max, 50) for s in svcs]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(3, -1).T
    tabs = security.batch_tables(svcs, spec.delta_f_max)
    batch = (grid, *tabs, 1500.0, 1.2e5, spec.f_nominal, spec.delta_f_max, 1e-9)

    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, attr, a in (("simulate_swing", "simulate_swing", swing), ("batch_security", "batch_security", batch)):
        t_np = best_of(lambda: getattr(kernels.numpy_impl, attr)(*a), args.repeat)
        t_nb = best_of(lambda: getattr(kernels.numba_impl, attr)(*a), args.repeat)
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
