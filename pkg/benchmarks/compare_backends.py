#!/usr/bin/env python3
"""Benchmark the compiled refinement kernel against the NumPy fallback.

Generates seeded synthetic layers at a few sizes, refines the same Wanda
warm start with every available backend, verifies the backends produce the
same masks and losses, and prints wall-clock times plus speedups.

Usage: python benchmarks/compare_backends.py [--t-max N] [--repeats K]
"""

import argparse
import sys
import time

import numpy as np

from sparseswaps.constraints import PerRow
from sparseswaps.gram import accumulate_gram
from sparseswaps.kernels import available_backends
from sparseswaps.swapengine import RefineConfig, refine_matrix
from sparseswaps.synth import SynthConfig, generate_layer
from sparseswaps.warmstart import prune_count_from_fraction, score_wanda, select_mask

SIZES = [(128, 64), (256, 64), (512, 32)]


def bench_case(d_in, d_out, t_max, repeats, backends):
    cfg = SynthConfig(
        d_in=d_in, d_out=d_out, n_cols=2 * d_in, corr_rank=8,
        outlier_count=max(1, d_in // 16), outlier_scale=10.0, seed=99,
    )
    weights, x = generate_layer(cfg)
    g = accumulate_gram([x])
    constraint = PerRow(prune_count_from_fraction(d_in, 0.6))
    warm = select_mask(score_wanda(weights, g), constraint)
    run_cfg = RefineConfig(t_max=t_max)

    results = {}
    for backend in backends:
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            mask, report = refine_matrix(
                weights, warm, g, constraint, run_cfg, threads=1, backend=backend
            )
            best = min(best, time.perf_counter() - t0)
        results[backend] = (best, mask, report)
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t-max", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("note: compiled kernel not built; timing the NumPy fallback only")

    print(f"{'size':>10} {'backend':>10} {'time':>10} {'speedup':>8} {'swaps':>7} {'reduction':>10}")
    disagreements = 0
    for d_in, d_out in SIZES:
        results = bench_case(d_in, d_out, args.t_max, args.repeats, backends)
        base_time = results["python"][0]
        ref_mask = results["python"][1]
        for backend in backends:
            secs, mask, report = results[backend]
            if not np.array_equal(mask, ref_mask):
                disagreements += 1
                flag = "  MASKS DIFFER"
            else:
                flag = ""
            swaps = sum(r.swaps for r in report.rows)
            print(
                f"{d_in:>5}x{d_out:<4} {backend:>10} {secs * 1000:>8.2f}ms "
                f"{base_time / secs:>7.2f}x {swaps:>7} {report.mean_reduction_pct:>9.2f}%{flag}"
            )
    if disagreements:
        print(f"error: {disagreements} backend disagreement(s)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
