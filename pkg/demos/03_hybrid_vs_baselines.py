"""
demos/03_hybrid_vs_baselines.py

Benchmarks the hybrid optimizer against its two baselines (plain GA,
random-restart hill climbing) over a shared block of seeds, at equal
per-run evaluation allowances, and prints the checkpoint table.

The GA arm gets extra generations because its allowance per generation
is smaller: the hybrid spends 2 + 2 * hc_budget evaluations per
generation (two children, each climbed), the GA just 4.
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from memetic import (
    RunConfig,
    bench_compare,
    default_cnn_space,
    write_summary_csv,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=30,
                        help="runs per arm (default 30)")
    parser.add_argument("--seed-base", type=int, default=0,
                        help="first seed of the shared block (default 0)")
    parser.add_argument("--out", default=None,
                        help="optional path for a summary CSV")
    args = parser.parse_args()

    hybrid = RunConfig(
        space=default_cnn_space(),
        evaluator={"kind": "hashed", "seed": 11},
        population_size=5,
        max_generations=3,
    )
    # allowance: 5 + 3 * (2 + 2 * 42) = 263 for the hybrid,
    #            5 + 64 * 4           = 261 for the GA,
    #            6 * (1 + 42)         = 258 for restarted hill climbing
    arms = {
        "hybrid": hybrid,
        "ga": replace(hybrid, max_generations=64),
        "hc": replace(hybrid, max_generations=6, hc_budget=42),
    }

    result = bench_compare(arms, repetitions=args.reps,
                           seed_base=args.seed_base)

    header = f"{'arm':<8}{'checkpoint':<12}{'mean':>8}{'stddev':>8}{'min':>8}{'max':>8}{'fail':>6}"
    print(header)
    print("-" * len(header))
    for row in result.rows:
        print(f"{row.algorithm:<8}{row.checkpoint:<12}"
              f"{row.mean:>8.4f}{row.stddev:>8.4f}"
              f"{row.minimum:>8.4f}{row.maximum:>8.4f}{row.failures:>6}")

    for name in arms:
        final = result.arm_final(name)
        print(f"{name}: final mean {final.mean:.4f} over {args.reps} seeds")

    if args.out:
        write_summary_csv(args.out, result)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
