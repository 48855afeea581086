"""
demos/01_search_space_tour.py

Walks through the discrete search space primitives: the bundled CNN
hyperparameter space, chromosome encoding, token round-trips, and the
step-of-one neighborhood used by local search.
"""

from __future__ import annotations

import json
import random

from memetic import (
    chromosome_from_tokens,
    default_cnn_space,
    neighbors,
    random_chromosome,
    space_to_doc,
)


def main() -> None:
    space = default_cnn_space()

    print("=== gene table ===")
    for gene in space.genes:
        domain = ", ".join(gene.domain)
        print(f"{gene.name:<10} {gene.kind.value:<12} {{{domain}}}")
    print(f"points in the space: {space.cardinality():,}")
    print(f"neighbors per point: {space.neighborhood_size()}")

    print("\n=== encoding ===")
    rng = random.Random(2024)
    chromosome = random_chromosome(space, rng)
    tokens = chromosome.tokens(space)
    print("index form:", chromosome.alleles)
    print("token form:", json.dumps(tokens))
    back = chromosome_from_tokens(space, tokens)
    print("round-trips cleanly:", back == chromosome)

    print("\n=== neighborhood ===")
    # Ordinal genes step to adjacent domain positions only; categorical
    # genes can hop to any other value.
    for other in neighbors(space, chromosome)[:8]:
        changed = [i for i in range(space.gene_count)
                   if other.alleles[i] != chromosome.alleles[i]]
        gene = space.genes[changed[0]]
        print(f"{gene.name}: {tokens[gene.name]} -> "
              f"{gene.domain[other.alleles[changed[0]]]}")
    total = len(neighbors(space, chromosome))
    print(f"... {total} neighbors in all")

    print("\n=== JSON document form ===")
    doc = space_to_doc(space)
    print(json.dumps(doc["genes"][0]))
    print("(the same document format the config file and wire protocol use)")


if __name__ == "__main__":
    main()
