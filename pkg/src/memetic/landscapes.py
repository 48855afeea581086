"""Fitness evaluators: the caching wrapper and synthetic landscapes.

Synthetic landscapes are cheap, deterministic stand-ins for model
training. Each returns a fitness in [0, 1] and is simple enough to
brute-force, which is what makes optimizer behavior checkable.
"""

from __future__ import annotations

import itertools
import math
import random
import threading
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .space import Chromosome, EvaluatedChromosome, GeneKind, GeneSpec, SearchSpace, validate_chromosome

BRUTE_FORCE_LIMIT = 10_000_000

_MASK64 = (1 << 64) - 1


class EvaluationError(RuntimeError):
    """Raised when an evaluator breaks its contract or fails outright."""


class FitnessEvaluator(Protocol):
    """Anything that scores a chromosome in [0, 1].

    deterministic declares whether repeat calls must agree; caching
    relies on it only for bookkeeping guarantees, dedup happens anyway.
    """

    deterministic: bool

    def evaluate(self, chromosome: Chromosome) -> float: ...


def check_fitness(value: float) -> float:
    """Reject non-finite or out-of-range fitness instead of clamping."""
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise EvaluationError(f"fitness is not a number: {value!r}")
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise EvaluationError(f"fitness out of [0, 1]: {value!r}")
    return value


class CachedEvaluator:
    """Memoizes an inner evaluator keyed on the chromosome.

    hits + misses equals successful calls, and with a deterministic
    inner evaluator misses equals the number of distinct chromosomes,
    because each one reaches the inner evaluator at most once. Inner
    failures propagate uncached and count as neither hit nor miss.

    Safe under concurrent calls. Two threads missing on the same
    chromosome at once may both invoke the inner evaluator; the first
    result stored wins and both callers observe it.
    """

    def __init__(self, inner: FitnessEvaluator, record_trace: bool = False) -> None:
        self._inner = inner
        self._cache: dict[Chromosome, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.trace: list[Chromosome] | None = [] if record_trace else None

    @property
    def deterministic(self) -> bool:
        return True

    @property
    def distinct(self) -> int:
        return len(self._cache)

    def evaluate(self, chromosome: Chromosome) -> float:
        with self._lock:
            if self.trace is not None:
                self.trace.append(chromosome)
            if chromosome in self._cache:
                self.hits += 1
                return self._cache[chromosome]
        fitness = check_fitness(self._inner.evaluate(chromosome))
        with self._lock:
            self.misses += 1
            return self._cache.setdefault(chromosome, fitness)


@dataclass(frozen=True)
class SeparableLandscape:
    """Per-gene weights summed and normalized: the sum over genes of
    weights[g][allele], divided by the sum of per-gene maxima.

    Every local optimum is the single global optimum (ties in a gene's
    maximum are broken at construction by nudging the first), so any
    hill climb from any start must reach fitness exactly 1.0.
    """

    space: SearchSpace
    weights: tuple[tuple[float, ...], ...]
    _denominator: float = field(init=False, repr=False, compare=False)

    deterministic = True

    def __post_init__(self) -> None:
        if len(self.weights) != self.space.gene_count:
            raise EvaluationError("one weight row per gene required")
        rows = []
        for gene, row in zip(self.space.genes, self.weights):
            row = [float(w) for w in row]
            if len(row) != len(gene.domain):
                raise EvaluationError(f"weight row length mismatch for gene {gene.name}")
            if any(w < 0.0 or not math.isfinite(w) for w in row):
                raise EvaluationError(f"weights must be finite and non-negative: {gene.name}")
            top = max(row)
            if row.count(top) > 1:
                row[row.index(top)] = top + max(top, 1.0) * 1e-9
            rows.append(tuple(row))
        object.__setattr__(self, "weights", tuple(rows))
        object.__setattr__(self, "_denominator", sum(max(row) for row in self.weights))

    @classmethod
    def random(cls, space: SearchSpace, seed: int) -> SeparableLandscape:
        rng = random.Random(seed)
        return cls(space, tuple(tuple(rng.random() for _ in g.domain) for g in space.genes))

    def optimum(self) -> Chromosome:
        return Chromosome(tuple(row.index(max(row)) for row in self.weights))

    def evaluate(self, chromosome: Chromosome) -> float:
        total = sum(row[a] for row, a in zip(self.weights, chromosome.alleles))
        return total / self._denominator


def hamming(a: Chromosome, b: Chromosome) -> int:
    return sum(1 for x, y in zip(a.alleles, b.alleles) if x != y)


@dataclass(frozen=True)
class TrapLandscape:
    """Deceptive landscape: one target scoring 1.0, surrounded by a
    gradient that pulls toward a decoy instead.

    Away from the target, fitness is trap_value * (1 - slope * d / G)
    where d is Hamming distance to the decoy, so single-gene moves climb
    toward the decoy and stall there below 1.0. The target and decoy
    must differ in at least two genes or the decoy is not a local
    optimum and nothing is deceptive.
    """

    space: SearchSpace
    target: Chromosome
    trap: Chromosome
    trap_value: float = 0.6
    slope: float = 1.0

    deterministic = True

    def __post_init__(self) -> None:
        validate_chromosome(self.space, self.target)
        validate_chromosome(self.space, self.trap)
        if not 0.0 < self.trap_value < 1.0:
            raise EvaluationError(f"trap_value must sit strictly inside (0, 1): {self.trap_value}")
        if self.slope <= 0.0:
            raise EvaluationError(f"slope must be positive: {self.slope}")
        if hamming(self.target, self.trap) < 2:
            raise EvaluationError("target and trap must differ in at least 2 genes")

    def evaluate(self, chromosome: Chromosome) -> float:
        if chromosome == self.target:
            return 1.0
        d = hamming(chromosome, self.trap)
        return max(0.0, self.trap_value * (1.0 - self.slope * d / self.space.gene_count))


def splitmix64(x: int) -> int:
    """One SplitMix64 scramble: add the golden-gamma constant, then the
    standard xor-shift-multiply finalizer. Fixed for all time; run logs
    depend on these exact constants."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class HashedLandscape:
    """Pseudo-random but reproducible fitness.

    Folds the seed and then each allele through splitmix64 and divides
    the 64-bit result by 2**64, giving a value in [0, 1) that looks
    arbitrary yet is identical on every platform. Rugged, structureless,
    and ideal for determinism checks.
    """

    seed: int = 0

    deterministic = True

    def evaluate(self, chromosome: Chromosome) -> float:
        h = splitmix64(self.seed & _MASK64)
        for allele in chromosome.alleles:
            h = splitmix64(h ^ allele)
        return h / 2.0**64


def default_cnn_space() -> SearchSpace:
    """Ten-gene convolutional network tuning space, 69984 points.

    Two conv blocks (filters, shared kernel size, activations), two
    dropouts, one dense width, the optimizer, and the epoch count.
    """
    c = GeneKind.CATEGORICAL
    o = GeneKind.ORDINAL
    return SearchSpace((
        GeneSpec("f1", o, ("32", "64", "128")),
        GeneSpec("f2", o, ("64", "128", "256")),
        GeneSpec("k", o, ("3", "5")),
        GeneSpec("a1", c, ("relu", "elu", "tanh")),
        GeneSpec("a2", c, ("relu", "elu", "tanh")),
        GeneSpec("d1", o, ("0.2", "0.3", "0.4", "0.5")),
        GeneSpec("d2", o, ("0.2", "0.3", "0.4", "0.5")),
        GeneSpec("f3", o, ("256", "512", "1024")),
        GeneSpec("optimizer", c, ("sgd", "adam", "rmsprop")),
        GeneSpec("epochs", o, ("10", "20", "30")),
    ))


def brute_force_optimum(space: SearchSpace,
                        evaluate: Callable[[Chromosome], float]) -> EvaluatedChromosome:
    """Exhaustive argmax; ties go to the lexicographically smallest
    allele tuple. Refuses spaces above BRUTE_FORCE_LIMIT points."""
    if space.cardinality() > BRUTE_FORCE_LIMIT:
        raise EvaluationError(
            f"space has {space.cardinality()} points, enumeration capped at {BRUTE_FORCE_LIMIT}"
        )
    best: EvaluatedChromosome | None = None
    for alleles in itertools.product(*(range(len(g.domain)) for g in space.genes)):
        candidate = Chromosome(alleles)
        fitness = evaluate(candidate)
        if best is None or fitness > best.fitness:
            best = EvaluatedChromosome(candidate, fitness)
    if best is None:
        raise EvaluationError("cannot enumerate an empty space")
    return best
