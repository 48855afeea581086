import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from memetic.evolve import (
    CrossoverMode,
    EvolveError,
    Population,
    crossover,
    generate_population,
    replace_worst,
    resample_mutation,
    select_parents,
)
from memetic.landscapes import default_cnn_space, hamming
from memetic.space import Chromosome, EvaluatedChromosome, GeneKind, GeneSpec, SearchSpace


def grid(*sizes: int) -> SearchSpace:
    return SearchSpace(tuple(
        GeneSpec(f"g{i}", GeneKind.CATEGORICAL, tuple(str(v) for v in range(n)))
        for i, n in enumerate(sizes)
    ))


def scored(pairs):
    """Build evaluated members from (allele, fitness) pairs on a wide one-gene space."""
    return tuple(EvaluatedChromosome(Chromosome((a,)), f) for a, f in pairs)


class TestPopulation:
    def test_ranked_sorts_best_first(self):
        members = scored([(0, 0.1), (1, 0.9), (2, 0.5)])
        pop = Population.ranked(members, capacity=3)
        assert [m.fitness for m in pop.members] == [0.9, 0.5, 0.1]
        assert pop.best.fitness == 0.9

    def test_ties_break_on_alleles(self):
        members = scored([(3, 0.5), (1, 0.5), (2, 0.5)])
        pop = Population.ranked(members, capacity=3)
        assert [m.chromosome.alleles for m in pop.members] == [(1,), (2,), (3,)]

    def test_capacity_mismatch_is_rejected(self):
        with pytest.raises(EvolveError):
            Population.ranked(scored([(0, 0.1)]), capacity=3)

    def test_generate_population_is_seeded_and_sized(self):
        space = grid(3, 3)
        a = generate_population(space, 5, random.Random(11))
        b = generate_population(space, 5, random.Random(11))
        assert a == b
        assert len(a) == 5

    def test_generate_population_needs_at_least_two(self):
        with pytest.raises(EvolveError):
            generate_population(grid(2), 1, random.Random(0))


class TestSelection:
    def test_top_two_by_fitness(self):
        members = scored([(0, 0.393), (1, 0.466), (2, 0.459), (3, 0.10), (4, 0.20)])
        pop = Population.ranked(members, capacity=5)
        first, second = select_parents(pop)
        assert first.fitness == 0.466
        assert second.fitness == 0.459


class TestCrossover:
    def test_one_point_swaps_tails(self):
        p1 = Chromosome((0, 0, 0, 0))
        p2 = Chromosome((1, 1, 1, 1))
        c1, c2 = crossover(p1, p2, CrossoverMode.ONE_POINT, random.Random(5))
        ones = c1.alleles.index(1)
        assert c1.alleles == (0,) * ones + (1,) * (4 - ones)
        assert c2.alleles == (1,) * ones + (0,) * (4 - ones)
        assert 1 <= ones <= 3

    def test_one_point_cut_never_clones_a_parent(self):
        p1 = Chromosome((0, 0, 0))
        p2 = Chromosome((1, 1, 1))
        for seed in range(200):
            c1, c2 = crossover(p1, p2, CrossoverMode.ONE_POINT, random.Random(seed))
            assert c1 not in (p1, p2)
            assert c2 not in (p1, p2)

    def test_one_point_cut_positions_all_occur(self):
        p1 = Chromosome((0, 0, 0, 0))
        p2 = Chromosome((1, 1, 1, 1))
        rng = random.Random(31)
        cuts = Counter(
            crossover(p1, p2, CrossoverMode.ONE_POINT, rng)[0].alleles.index(1)
            for _ in range(3000)
        )
        assert set(cuts) == {1, 2, 3}
        for cut in (1, 2, 3):
            assert abs(cuts[cut] / 3000 - 1 / 3) < 0.05

    def test_one_point_needs_two_genes(self):
        with pytest.raises(EvolveError):
            crossover(Chromosome((0,)), Chromosome((1,)), CrossoverMode.ONE_POINT, random.Random(0))

    def test_length_mismatch_is_rejected(self):
        with pytest.raises(EvolveError):
            crossover(Chromosome((0, 0)), Chromosome((1,)), CrossoverMode.UNIFORM, random.Random(0))

    def test_uniform_children_complement_each_other(self):
        p1 = Chromosome((0, 0, 0, 0, 0))
        p2 = Chromosome((1, 1, 1, 1, 1))
        c1, c2 = crossover(p1, p2, CrossoverMode.UNIFORM, random.Random(3))
        for a, b in zip(c1.alleles, c2.alleles):
            assert {a, b} == {0, 1}

    def test_uniform_per_gene_inheritance_is_fair(self):
        # Frequency oracle: over 1e5 trials each gene of the first child comes
        # from the first parent half the time, within +/- 0.01.
        g = 10
        p1 = Chromosome((0,) * g)
        p2 = Chromosome((1,) * g)
        rng = random.Random(2024)
        from_first = [0] * g
        trials = 100_000
        for _ in range(trials):
            c1, _ = crossover(p1, p2, CrossoverMode.UNIFORM, rng)
            for i, allele in enumerate(c1.alleles):
                if allele == 0:
                    from_first[i] += 1
        for count in from_first:
            assert abs(count / trials - 0.5) < 0.01

    @given(
        st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=2, max_size=8),
        st.integers(0, 2**32),
        st.sampled_from(list(CrossoverMode)),
    )
    def test_genes_are_conserved(self, gene_pairs, seed, mode):
        p1 = Chromosome(tuple(a for a, _ in gene_pairs))
        p2 = Chromosome(tuple(b for _, b in gene_pairs))
        c1, c2 = crossover(p1, p2, mode, random.Random(seed))
        for i in range(len(gene_pairs)):
            assert sorted((c1.alleles[i], c2.alleles[i])) == sorted((p1.alleles[i], p2.alleles[i]))


class TestReplacement:
    def test_children_push_out_the_two_worst(self):
        members = scored([(0, 0.470), (1, 0.466), (2, 0.459), (3, 0.20), (4, 0.10)])
        pop = Population.ranked(members, capacity=5)
        children = scored([(5, 0.48), (6, 0.15)])
        new = replace_worst(pop, children)
        assert [m.fitness for m in new.members] == [0.48, 0.470, 0.466, 0.459, 0.15]

    def test_weak_children_replace_anyway(self):
        members = scored([(0, 0.9), (1, 0.8), (2, 0.7), (3, 0.6), (4, 0.5)])
        pop = Population.ranked(members, capacity=5)
        children = scored([(5, 0.01), (6, 0.02)])
        new = replace_worst(pop, children)
        assert [m.fitness for m in new.members] == [0.9, 0.8, 0.7, 0.02, 0.01]

    def test_requires_exactly_two_children(self):
        pop = Population.ranked(scored([(0, 0.3), (1, 0.2), (2, 0.1)]), capacity=3)
        with pytest.raises(EvolveError):
            replace_worst(pop, scored([(5, 0.5)]))

    def test_requires_capacity_for_survivors(self):
        pop = Population.ranked(scored([(0, 0.3), (1, 0.2)]), capacity=2)
        with pytest.raises(EvolveError):
            replace_worst(pop, scored([(5, 0.5), (6, 0.4)]))

    @given(
        st.lists(st.tuples(st.integers(0, 50), st.floats(0, 1, allow_nan=False)),
                 min_size=3, max_size=8, unique_by=lambda p: p[0]),
        st.tuples(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)),
    )
    def test_best_never_degrades(self, pairs, child_fits):
        pop = Population.ranked(scored(pairs), capacity=len(pairs))
        children = scored([(100, child_fits[0]), (101, child_fits[1])])
        new = replace_worst(pop, children)
        assert new.best.fitness >= pop.best.fitness
        assert new.best.fitness >= max(child_fits)
        assert new.capacity == pop.capacity


class TestResampleMutation:
    def test_rate_zero_is_identity(self):
        space = grid(3, 3, 3)
        c = Chromosome((1, 2, 0))
        assert resample_mutation(space, c, 0.0, random.Random(0)) == c

    def test_rate_one_touches_every_gene(self):
        space = grid(4, 4, 4, 4)
        c = Chromosome((0, 0, 0, 0))
        rng = random.Random(9)
        mutated = resample_mutation(space, c, 1.0, rng)
        oracle = random.Random(9)
        want = []
        for _ in range(4):
            oracle.random()
            want.append(oracle.randrange(4))
        assert mutated.alleles == tuple(want)

    def test_rate_outside_unit_interval_is_rejected(self):
        space = grid(2)
        with pytest.raises(EvolveError):
            resample_mutation(space, Chromosome((0,)), -0.1, random.Random(0))
        with pytest.raises(EvolveError):
            resample_mutation(space, Chromosome((0,)), 1.5, random.Random(0))

    def test_full_rate_hamming_distance_matches_expectation(self):
        # Resampling every gene uniformly moves a gene with probability
        # 1 - 1/len(domain). Summed over the default space that is 20/3.
        space = default_cnn_space()
        expected = sum(1 - 1 / len(g.domain) for g in space.genes)
        assert abs(expected - 20 / 3) < 1e-12
        start = Chromosome((0,) * space.gene_count)
        rng = random.Random(77)
        trials = 10_000
        total = sum(
            hamming(start, resample_mutation(space, start, 1.0, rng))
            for _ in range(trials)
        )
        assert abs(total / trials - expected) <= 0.02 * expected
