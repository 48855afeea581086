"""Hill climbing over Hamming-1 neighborhoods, used as the mutation step."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .space import Chromosome, EvaluatedChromosome, SearchSpace, neighbors, random_chromosome


class LocalSearchError(ValueError):
    """Raised on local-search contract violations."""


class HcStrategy(Enum):
    FIRST_IMPROVEMENT = "first_improvement"
    STEEPEST_ASCENT = "steepest_ascent"


@dataclass(frozen=True)
class HcBudget:
    """Cap on evaluate calls per climb. Mandatory: a climb against an
    expensive evaluator must not be open-ended."""

    max_evaluations: int

    def __post_init__(self) -> None:
        if self.max_evaluations < 1:
            raise LocalSearchError(f"budget must allow at least 1 evaluation: {self.max_evaluations}")


@dataclass(frozen=True)
class ClimbResult:
    best: EvaluatedChromosome
    evaluations_used: int
    budget_exhausted: bool


def hill_climb(space: SearchSpace, start: EvaluatedChromosome,
               evaluate: Callable[[Chromosome], float], strategy: HcStrategy,
               budget: HcBudget, rng: random.Random) -> ClimbResult:
    """Climb from an already-scored start until stuck or out of budget.

    Only strictly improving moves are taken, so the result is never
    worse than the start and every accepted move raises fitness.

    first_improvement walks the neighborhood in a freshly shuffled order
    each scan and restarts the scan from the first improving neighbor
    found. steepest_ascent scores the whole neighborhood in its
    deterministic order and moves to the best improving neighbor,
    earliest on ties; it draws nothing from the RNG.

    Running out of budget is a normal outcome, flagged on the result.
    """
    current = start
    used = 0
    exhausted = False

    if strategy is HcStrategy.FIRST_IMPROVEMENT:
        while True:
            candidates = neighbors(space, current.chromosome)
            rng.shuffle(candidates)
            moved = False
            for candidate in candidates:
                if used >= budget.max_evaluations:
                    exhausted = True
                    break
                fitness = evaluate(candidate)
                used += 1
                if fitness > current.fitness:
                    current = EvaluatedChromosome(candidate, fitness)
                    moved = True
                    break
            if exhausted or not moved:
                break
    elif strategy is HcStrategy.STEEPEST_ASCENT:
        while True:
            best_move: EvaluatedChromosome | None = None
            for candidate in neighbors(space, current.chromosome):
                if used >= budget.max_evaluations:
                    exhausted = True
                    break
                fitness = evaluate(candidate)
                used += 1
                if fitness > current.fitness and (best_move is None or fitness > best_move.fitness):
                    best_move = EvaluatedChromosome(candidate, fitness)
            if best_move is not None:
                current = best_move
            if exhausted or best_move is None:
                break
    else:
        raise LocalSearchError(f"unknown strategy: {strategy!r}")

    return ClimbResult(current, used, exhausted)


def mutate_children(space: SearchSpace, children: list[EvaluatedChromosome],
                    evaluate: Callable[[Chromosome], float], strategy: HcStrategy,
                    budget: HcBudget, rng: random.Random) -> list[EvaluatedChromosome]:
    """Refine each child by hill climbing, in list order, each with a
    fresh budget. List order matters: it fixes the RNG draw sequence."""
    refined = []
    for child in children:
        refined.append(hill_climb(space, child, evaluate, strategy, budget, rng).best)
    return refined


def random_restart_hc(space: SearchSpace, restarts: int,
                      evaluate: Callable[[Chromosome], float], strategy: HcStrategy,
                      per_start_budget: HcBudget, rng: random.Random,
                      on_restart: Callable[[int, ClimbResult], None] | None = None
                      ) -> EvaluatedChromosome:
    """Climb from fresh uniform starts and keep the best result seen.

    Each restart costs one evaluation for the start itself plus at most
    the per-start budget. Ties keep the earlier restart's result.
    """
    if restarts < 1:
        raise LocalSearchError(f"need at least 1 restart: {restarts}")
    best: EvaluatedChromosome | None = None
    for index in range(restarts):
        chromosome = random_chromosome(space, rng)
        start = EvaluatedChromosome(chromosome, evaluate(chromosome))
        result = hill_climb(space, start, evaluate, strategy, per_start_budget, rng)
        if best is None or result.best.fitness > best.fitness:
            best = result.best
        if on_restart is not None:
            on_restart(index, result)
    assert best is not None
    return best
