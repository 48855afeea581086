"""Population management and genetic operators: selection, crossover, replacement."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .space import Chromosome, EvaluatedChromosome, SearchSpace, random_chromosome


class EvolveError(ValueError):
    """Raised on genetic-operator contract violations."""


class CrossoverMode(Enum):
    ONE_POINT = "one_point"
    UNIFORM = "uniform"


def _rank_key(member: EvaluatedChromosome) -> tuple[float, tuple[int, ...]]:
    # Fitness descending, ties broken by ascending allele order so
    # ranking is deterministic.
    return (-member.fitness, member.chromosome.alleles)


@dataclass(frozen=True)
class Population:
    """A fixed-capacity population kept sorted best-first.

    Ties are broken by lexicographic allele order. Duplicates are
    allowed; inbreeding control is out of scope.
    """

    members: tuple[EvaluatedChromosome, ...]
    capacity: int

    @classmethod
    def ranked(cls, members: list[EvaluatedChromosome] | tuple[EvaluatedChromosome, ...],
               capacity: int) -> Population:
        if len(members) != capacity:
            raise EvolveError(f"population holds {len(members)} members, capacity {capacity}")
        return cls(tuple(sorted(members, key=_rank_key)), capacity)

    @property
    def best(self) -> EvaluatedChromosome:
        return self.members[0]


def generate_population(space: SearchSpace, n: int, rng: random.Random) -> list[Chromosome]:
    """n uniform random chromosomes, drawn sequentially. Duplicates allowed."""
    if n < 2:
        raise EvolveError(f"population size must be at least 2, got {n}")
    return [random_chromosome(space, rng) for _ in range(n)]


def select_parents(population: Population) -> tuple[EvaluatedChromosome, EvaluatedChromosome]:
    """The two best members, in rank order."""
    if len(population.members) < 2:
        raise EvolveError("selection needs at least 2 members")
    return population.members[0], population.members[1]


def crossover(parent_a: Chromosome, parent_b: Chromosome, mode: CrossoverMode,
              rng: random.Random) -> tuple[Chromosome, Chromosome]:
    """Recombine two parents into two children.

    one_point: a cut is drawn uniformly from [1, G-1]; the children swap
    tails at the cut. uniform: one fair bit per gene decides which parent
    feeds child one, and child two takes the opposite. Either way each
    gene's two alleles are conserved between the children as a multiset.
    """
    g = len(parent_a.alleles)
    if g != len(parent_b.alleles):
        raise EvolveError(f"parent lengths differ: {g} vs {len(parent_b.alleles)}")
    if mode is CrossoverMode.ONE_POINT:
        if g < 2:
            raise EvolveError("one_point crossover needs at least 2 genes")
        cut = rng.randint(1, g - 1)
        child_a = parent_a.alleles[:cut] + parent_b.alleles[cut:]
        child_b = parent_b.alleles[:cut] + parent_a.alleles[cut:]
    elif mode is CrossoverMode.UNIFORM:
        a = list(parent_a.alleles)
        b = list(parent_b.alleles)
        for i in range(g):
            if rng.getrandbits(1):
                a[i], b[i] = b[i], a[i]
        child_a, child_b = tuple(a), tuple(b)
    else:
        raise EvolveError(f"unknown crossover mode: {mode!r}")
    return Chromosome(child_a), Chromosome(child_b)


def resample_mutation(space: SearchSpace, chromosome: Chromosome, rate: float,
                      rng: random.Random) -> Chromosome:
    """Classic point mutation: each gene is independently resampled
    uniformly from its full domain with the given probability, so a
    mutated gene may land on its old value. Draws happen in gene order:
    one rate draw per gene, plus one index draw when it fires."""
    if not 0.0 <= rate <= 1.0:
        raise EvolveError(f"mutation rate must lie in [0, 1]: {rate}")
    alleles = list(chromosome.alleles)
    for index, gene in enumerate(space.genes):
        if rng.random() < rate:
            alleles[index] = rng.randrange(len(gene.domain))
    return Chromosome(tuple(alleles))


def replace_worst(population: Population,
                  children: list[EvaluatedChromosome] | tuple[EvaluatedChromosome, ...]
                  ) -> Population:
    """Drop the two rank-worst members and insert the children.

    Capacity is preserved and the incumbent best survives (capacity is
    at least 3), so the population best can never regress. The children
    are inserted regardless of their fitness.
    """
    if len(children) != 2:
        raise EvolveError(f"replacement takes exactly 2 children, got {len(children)}")
    if population.capacity < 3:
        raise EvolveError(f"replacement needs capacity of at least 3, got {population.capacity}")
    survivors = list(population.members[:-2]) + list(children)
    return Population.ranked(survivors, population.capacity)
