"""
demos/02_landscapes_and_hill_climbing.py

Shows the three synthetic fitness landscapes and what plain hill
climbing does on each: it solves the separable one exactly, gets
stranded by the deceptive one, and wanders on the hashed one.
"""

from __future__ import annotations

import argparse
import itertools
import random

from memetic import (
    CachedEvaluator,
    Chromosome,
    EvaluatedChromosome,
    GeneKind,
    GeneSpec,
    HashedLandscape,
    HcBudget,
    HcStrategy,
    SearchSpace,
    SeparableLandscape,
    TrapLandscape,
    brute_force_optimum,
    hill_climb,
    random_restart_hc,
)


def binary_space(genes: int) -> SearchSpace:
    return SearchSpace(tuple(
        GeneSpec(f"b{i}", GeneKind.CATEGORICAL, ("0", "1"))
        for i in range(genes)
    ))


def every_point(space: SearchSpace):
    ranges = [range(len(g.domain)) for g in space.genes]
    for alleles in itertools.product(*ranges):
        yield Chromosome(alleles)


def climb_from(space, start, evaluate, budget, seed=0):
    scored = EvaluatedChromosome(start, evaluate(start))
    return hill_climb(space, scored, evaluate, HcStrategy.STEEPEST_ASCENT,
                      HcBudget(budget), random.Random(seed))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--genes", type=int, default=4,
                        help="binary genes in the trap space (default 4)")
    parser.add_argument("--budget", type=int, default=200,
                        help="neighbor evaluations per climb (default 200)")
    args = parser.parse_args()

    space = binary_space(args.genes)

    print("=== separable: single peak, climbing always works ===")
    separable = SeparableLandscape.random(space, seed=9)
    optimum = brute_force_optimum(space, separable.evaluate)
    solved = sum(
        1 for start in every_point(space)
        if climb_from(space, start, separable.evaluate,
                      args.budget).best.fitness == optimum.fitness
    )
    print(f"climbs reaching the optimum: {solved}/{space.cardinality()}")

    print("\n=== trap: a deceptive basin strands the climber ===")
    trap = TrapLandscape(
        space,
        target=Chromosome((1,) * args.genes),
        trap=Chromosome((0,) * args.genes),
    )
    stranded = [
        start for start in every_point(space)
        if climb_from(space, start, trap.evaluate, args.budget).best.fitness < 1.0
    ]
    print(f"starts that end below the optimum: {len(stranded)}/{space.cardinality()}")
    for start in stranded[:4]:
        end = climb_from(space, start, trap.evaluate, args.budget).best
        print(f"  {start.alleles} -> fitness {end.fitness:.3f}")

    print("\n=== hashed: no gradient to follow, restarts help ===")
    hashed = HashedLandscape(seed=5)
    cache = CachedEvaluator(hashed)
    best = random_restart_hc(
        space, restarts=8, evaluate=cache.evaluate,
        strategy=HcStrategy.FIRST_IMPROVEMENT,
        per_start_budget=HcBudget(args.budget), rng=random.Random(1),
    )
    true_best = brute_force_optimum(space, hashed.evaluate)
    print(f"best after 8 restarts: {best.fitness:.4f}")
    print(f"true optimum:          {true_best.fitness:.4f}")
    print(f"distinct evaluations:  {cache.distinct} "
          f"(of {cache.hits + cache.misses} requested; cache absorbed the rest)")


if __name__ == "__main__":
    main()
