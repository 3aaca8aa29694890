#!/usr/bin/env python3
"""Benchmark the compiled scenario-exposure kernel against the numpy fallback.

Workload: the default 20-dealer, 4-class market under the five standard
clearing scenarios. Reports raw kernel throughput plus end-to-end simulate()
timings per backend.

    python benchmarks/bench_kernel.py [--paths 50000] [--chunks 4096]
"""

import argparse
import time

import numpy as np

from ccpnet import dataio, kernels, montecarlo
from ccpnet.montecarlo import _build_layout, _copula_values, _scenario_arrays, _uniforms


def bench_kernel(paths: int, chunk: int) -> None:
    rc = dataio.RunConfig()
    config, model, scenarios, _ = dataio.build_market(rc)
    layout = _build_layout(config, model, 1000.0)
    resid, ccp_w, offsets = _scenario_arrays(scenarios, layout.n_classes)
    y = _copula_values(_uniforms(1, layout, 0, chunk), model.rho, model.marginals)

    results = {}
    for backend in kernels.available_backends():
        # warm up once, then time full sweeps over `paths`
        kernels.scenario_exposures(
            y, layout.s_plus, layout.s_minus, layout.pair_i, layout.pair_j,
            resid, ccp_w, offsets, layout.n_dealers, backend=backend,
        )
        reps = max(1, paths // chunk)
        t0 = time.perf_counter()
        for _ in range(reps):
            kernels.scenario_exposures(
                y, layout.s_plus, layout.s_minus, layout.pair_i, layout.pair_j,
                resid, ccp_w, offsets, layout.n_dealers, backend=backend,
            )
        dt = time.perf_counter() - t0
        rate = reps * chunk / dt
        results[backend] = rate
        print(f"kernel  {backend:>6}: {rate / 1e3:8.1f}k paths/s  ({dt:.2f}s)")
    if len(results) == 2:
        print(f"kernel  speedup: {results['cython'] / results['numpy']:.2f}x")

    print()
    for backend in kernels.available_backends():
        t0 = time.perf_counter()
        montecarlo.simulate(
            config, model, scenarios, max(1000, paths), 1,
            chunk_size=chunk, backend=backend,
        )
        dt = time.perf_counter() - t0
        print(f"simulate {backend:>6}: {max(1000, paths) / dt / 1e3:8.1f}k paths/s  ({dt:.2f}s)")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=50_000)
    ap.add_argument("--chunks", type=int, default=4096)
    args = ap.parse_args()
    np.random.seed(0)
    bench_kernel(args.paths, args.chunks)


if __name__ == "__main__":
    main()
