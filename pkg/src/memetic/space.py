"""Discrete search spaces: named genes with ordered token domains."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum


class SpaceError(ValueError):
    """Raised when a search space or chromosome violates its contract."""


class GeneKind(Enum):
    CATEGORICAL = "categorical"
    ORDINAL = "ordinal"


@dataclass(frozen=True)
class GeneSpec:
    """One hyperparameter: a name plus an ordered domain of value tokens.

    Tokens are strings so values survive serialization unchanged; the
    kind is descriptive metadata and does not alter any operator.
    """

    name: str
    kind: GeneKind
    domain: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))


@dataclass(frozen=True)
class SearchSpace:
    """An ordered list of genes. Gene order is canonical: chromosomes,
    RNG draws, and wire messages all follow it."""

    genes: tuple[GeneSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "genes", tuple(self.genes))

    @property
    def gene_count(self) -> int:
        return len(self.genes)

    def cardinality(self) -> int:
        total = 1
        for gene in self.genes:
            total *= len(gene.domain)
        return total

    def neighborhood_size(self) -> int:
        """Number of Hamming-1 neighbors of any chromosome."""
        return sum(len(gene.domain) - 1 for gene in self.genes)

    def index_of(self, name: str) -> int:
        for i, gene in enumerate(self.genes):
            if gene.name == name:
                return i
        raise SpaceError(f"unknown gene: {name}")


@dataclass(frozen=True)
class Chromosome:
    """One point in a search space: a domain index per gene.

    Equality and hashing use the allele tuple, so two chromosomes with
    the same indices are the same point (this is what caching keys on).
    """

    alleles: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alleles", tuple(self.alleles))

    def tokens(self, space: SearchSpace) -> dict[str, str]:
        """Gene name to domain token, in gene order."""
        return {g.name: g.domain[a] for g, a in zip(space.genes, self.alleles)}

    def replace(self, gene_index: int, allele: int) -> Chromosome:
        alleles = list(self.alleles)
        alleles[gene_index] = allele
        return Chromosome(tuple(alleles))


@dataclass(frozen=True)
class EvaluatedChromosome:
    """A chromosome paired with its fitness, constrained to [0, 1]."""

    chromosome: Chromosome
    fitness: float

    def __post_init__(self) -> None:
        f = self.fitness
        if not (isinstance(f, (int, float)) and f == f and 0.0 <= f <= 1.0):
            raise SpaceError(f"fitness out of [0, 1]: {f!r}")
        object.__setattr__(self, "fitness", float(f))


def validate_space(space: SearchSpace) -> list[str]:
    """Return every contract violation in the space, empty when valid."""
    problems: list[str] = []
    if not space.genes:
        problems.append("no genes")
    seen_names: set[str] = set()
    for gene in space.genes:
        if gene.name in seen_names:
            problems.append(f"duplicate gene name: {gene.name}")
        seen_names.add(gene.name)
        if not gene.domain:
            problems.append(f"empty domain: {gene.name}")
        seen_tokens: set[str] = set()
        for token in gene.domain:
            if token in seen_tokens:
                problems.append(f"duplicate token: {token} in gene {gene.name}")
            seen_tokens.add(token)
    return problems


def ensure_valid(space: SearchSpace) -> None:
    problems = validate_space(space)
    if problems:
        raise SpaceError("; ".join(problems))


def validate_chromosome(space: SearchSpace, chromosome: Chromosome) -> None:
    """Raise unless the chromosome indexes this space gene for gene."""
    if len(chromosome.alleles) != space.gene_count:
        raise SpaceError(
            f"chromosome length {len(chromosome.alleles)} != gene count {space.gene_count}"
        )
    for gene, allele in zip(space.genes, chromosome.alleles):
        if not 0 <= allele < len(gene.domain):
            raise SpaceError(f"allele {allele} out of range for gene {gene.name}")


def chromosome_from_tokens(space: SearchSpace, tokens: dict[str, str]) -> Chromosome:
    """Inverse of Chromosome.tokens; unknown names or tokens raise."""
    alleles = []
    for gene in space.genes:
        if gene.name not in tokens:
            raise SpaceError(f"missing gene: {gene.name}")
        token = tokens[gene.name]
        try:
            alleles.append(gene.domain.index(token))
        except ValueError:
            raise SpaceError(f"unknown token for gene {gene.name}: {token}") from None
    extra = set(tokens) - {g.name for g in space.genes}
    if extra:
        raise SpaceError(f"unknown gene: {sorted(extra)[0]}")
    return Chromosome(tuple(alleles))


def space_to_doc(space: SearchSpace) -> dict:
    """JSON-ready document form, the same shape config files use."""
    return {"genes": [
        {"name": g.name, "kind": g.kind.value, "values": list(g.domain)} for g in space.genes
    ]}


def _token(value: object, gene_name: str) -> str:
    if isinstance(value, bool):
        raise SpaceError(f"gene {gene_name}: token {value!r} is not a string or number")
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return str(value)
    raise SpaceError(f"gene {gene_name}: token {value!r} is not a string or number")


def space_from_doc(doc: object) -> SearchSpace:
    """Parse the document form. Numeric values become their string
    tokens; the resulting space is checked with validate_space."""
    if not isinstance(doc, dict) or not isinstance(doc.get("genes"), list):
        raise SpaceError("space document must be an object with a genes list")
    genes = []
    for i, entry in enumerate(doc["genes"]):
        if not isinstance(entry, dict):
            raise SpaceError(f"genes[{i}]: must be an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise SpaceError(f"genes[{i}].name: must be a non-empty string")
        kind_token = entry.get("kind", "categorical")
        try:
            kind = GeneKind(kind_token)
        except ValueError:
            raise SpaceError(f"genes[{i}].kind: unknown kind {kind_token!r}") from None
        values = entry.get("values")
        if not isinstance(values, list):
            raise SpaceError(f"genes[{i}].values: must be a list")
        genes.append(GeneSpec(name, kind, tuple(_token(v, name) for v in values)))
    space = SearchSpace(tuple(genes))
    ensure_valid(space)
    return space


def random_chromosome(space: SearchSpace, rng: random.Random) -> Chromosome:
    """Sample each gene uniformly, consuming the RNG in gene order."""
    return Chromosome(tuple(rng.randrange(len(g.domain)) for g in space.genes))


def neighbors(space: SearchSpace, chromosome: Chromosome) -> list[Chromosome]:
    """All Hamming-distance-1 variants, gene-major then domain order.

    The origin is excluded, so the list has exactly
    sum(len(domain) - 1) entries and no duplicates.
    """
    out: list[Chromosome] = []
    for gene_index, gene in enumerate(space.genes):
        current = chromosome.alleles[gene_index]
        for allele in range(len(gene.domain)):
            if allele != current:
                out.append(chromosome.replace(gene_index, allele))
    return out
