"""Compare the compiled and numpy inventory kernels.

    python3 benchmarks/bench_kernels.py [--repeat 50] [--samples 2000]

Two measurements per backend: the kernel alone on the dense cereal
distribution (every robot system of the crop catalog), and a Monte Carlo
run over the same systems.  Results are checked to be bitwise identical.
"""
from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

import numpy as np

from agrifoot import kernels
from agrifoot.config import load_scenario
from agrifoot.inventory import SystemKernel
from agrifoot.sensitivity import METRICS, run_sensitivity

SCENARIO = Path(__file__).resolve().parents[1] / "src/agrifoot/fixtures/scenarios/crop_sensitivity.yaml"


def time_kernel(evaluate, system_kernels, sizes, repeat):
    times, outputs = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        outputs = [evaluate(sizes, k.kinds, k.params, k.parents) for k in system_kernels]
        times.append(time.perf_counter() - t0)
    return times, outputs


def time_monte_carlo(evaluate, cfg, samples):
    spec = cfg.sensitivity.spec
    spec = type(spec)(**{**spec.__dict__, "samples": samples})
    saved = kernels.evaluate_devices
    kernels.evaluate_devices = evaluate
    try:
        t0 = time.perf_counter()
        res = run_sensitivity(cfg.catalog, list(cfg.sensitivity.systems), cfg.distribution, cfg.grid, spec)
        return time.perf_counter() - t0, res
    finally:
        kernels.evaluate_devices = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--samples", type=int, default=2000)
    args = ap.parse_args()

    backends = kernels.available_backends()
    cfg = load_scenario(SCENARIO)
    sizes = cfg.distribution.sizes_array
    system_kernels = [SystemKernel(cfg.catalog.system(n)) for n in cfg.sensitivity.systems]
    print(f"{len(sizes)} sizes, systems {', '.join(cfg.sensitivity.systems)}; backends: {', '.join(backends)}")

    kernel_out, mc_out, mc_time = {}, {}, {}
    print(f"\nkernel alone ({args.repeat} repeats)")
    print(f"{'backend':<8} {'median ms':>10} {'min ms':>10}")
    for name, evaluate in backends.items():
        times, out = time_kernel(evaluate, system_kernels, sizes, args.repeat)
        kernel_out[name] = out
        print(f"{name:<8} {statistics.median(times) * 1e3:>10.3f} {min(times) * 1e3:>10.3f}")

    print(f"\nMonte Carlo ({args.samples} samples)")
    print(f"{'backend':<8} {'seconds':>10} {'samples/s':>10}")
    for name, evaluate in backends.items():
        elapsed, res = time_monte_carlo(evaluate, cfg, args.samples)
        mc_out[name], mc_time[name] = res, elapsed
        print(f"{name:<8} {elapsed:>10.2f} {args.samples / elapsed:>10.0f}")

    if len(backends) > 1:
        same_kernel = all(
            a.tobytes() == b.tobytes()
            for ka, kb in zip(kernel_out["numpy"], kernel_out["cython"])
            for a, b in zip(ka, kb)
        )
        a, b = mc_out["numpy"], mc_out["cython"]
        same_mc = all(
            np.array_equal(a.values(ts, m), b.values(ts, m)) for ts in a.ts_names for m in METRICS
        )
        print(f"\nbitwise identical: kernel {same_kernel}, Monte Carlo {same_mc}")
        print(f"Monte Carlo speed-up of the compiled kernel: {mc_time['numpy'] / mc_time['cython']:.2f}x")


if __name__ == "__main__":
    main()
