"""Time one update sweep with each available backend.

    python benchmarks/bench_step.py --n 51 --repeat 5
"""
import argparse
import time

import numpy as np

from wte_reach import GridSpec, scenario
from wte_reach.kernels import available_backends, get_kernel
from wte_reach.levelset import distance_field, terminal_field
from wte_reach.solver import _speed_fields, cfl_timestep


def bench(n: int, repeat: int, threads: int) -> dict:
    params = scenario(2).params
    spec = GridSpec.uniform(params.domain_lo, params.domain_hi, n)
    gD = distance_field(spec, params.domain_box).storage
    V = terminal_field(spec, params.target_box, params.domain_box, 30.0).storage
    cx, cK, cE = _speed_fields(params, spec)
    dt = cfl_timestep(params, spec)
    mins = np.asarray(spec.mins, dtype=np.float64)
    h = np.asarray(spec.spacing, dtype=np.float64)
    coef = params.coefficients()
    results = {}
    outputs = {}
    for name in available_backends():
        kern = get_kernel(name)
        out = np.empty(spec.storage_shape)
        pc = np.zeros(spec.counts[2])
        kern(V, gD, cx, cK, cE, out, mins, h, coef, dt, threads, pc)  # warm-up
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            kern(V, gD, cx, cK, cE, out, mins, h, coef, dt, threads, pc)
            best = min(best, time.perf_counter() - t0)
        results[name] = best
        outputs[name] = out.copy()
    if len(outputs) == 2:
        diff = float(np.max(np.abs(outputs["compiled"] - outputs["numpy"])))
        print(f"max |compiled - numpy| = {diff:.3e}")
    return results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=51)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    res = bench(args.n, args.repeat, args.threads)
    nodes = args.n ** 3
    for name, sec in res.items():
        print(f"{name:9s} {sec * 1e3:9.2f} ms/step  {sec / nodes * 1e9:7.1f} ns/node")
    if "compiled" in res and "numpy" in res:
        print(f"speed-up  {res['numpy'] / res['compiled']:.1f}x")


if __name__ == "__main__":
    main()
