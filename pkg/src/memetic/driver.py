"""Seeded optimization runs: configuration, loops, benchmarks, artifacts.

A run is reproducible from its config document alone. All randomness
flows from one 64-bit seed through one RNG in a fixed draw order, and
the per-generation log deliberately contains no timing, so two runs of
the same config produce byte-identical logs.
"""

from __future__ import annotations

import csv
import json
import random
import statistics
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable

from .evolve import (
    CrossoverMode,
    Population,
    crossover,
    generate_population,
    replace_worst,
    resample_mutation,
    select_parents,
)
from .extproto import ProtocolConfig, SessionError, SessionEvaluator, open_session
from .landscapes import (
    CachedEvaluator,
    EvaluationError,
    FitnessEvaluator,
    HashedLandscape,
    SeparableLandscape,
    TrapLandscape,
    default_cnn_space,
)
from .localsearch import HcBudget, HcStrategy, hill_climb, mutate_children, random_restart_hc
from .space import (
    EvaluatedChromosome,
    SearchSpace,
    SpaceError,
    chromosome_from_tokens,
    ensure_valid,
    space_from_doc,
)


class ConfigError(ValueError):
    """Raised for unusable run configuration, with the offending key named."""


class Termination(Enum):
    THRESHOLD_REACHED = "threshold_reached"
    GENERATIONS_EXHAUSTED = "generations_exhausted"
    EVALUATOR_FAILURE = "evaluator_failure"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on. The evaluator field is the JSON
    subtree describing which evaluator to build, kept verbatim so it
    can be echoed into artifacts."""

    space: SearchSpace
    evaluator: dict
    population_size: int = 5
    max_generations: int = 3
    fitness_threshold: float = 1.0
    seed: int = 0
    crossover_mode: CrossoverMode = CrossoverMode.UNIFORM
    hc_strategy: HcStrategy = HcStrategy.FIRST_IMPROVEMENT
    hc_budget: int | None = None
    ga_mutation_rate: float | None = None
    climb_generation_best: bool = False

    def __post_init__(self) -> None:
        ensure_valid(self.space)
        if self.population_size < 3:
            raise ConfigError(f"run.population_size: must be at least 3, got {self.population_size}")
        if self.max_generations < 1:
            raise ConfigError(f"run.max_generations: must be at least 1, got {self.max_generations}")
        if not 0.0 <= self.fitness_threshold <= 1.0:
            raise ConfigError(f"run.fitness_threshold: must lie in [0, 1], got {self.fitness_threshold}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"run.seed: must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.hc_budget is not None and self.hc_budget < 1:
            raise ConfigError(f"run.hc_budget: must be at least 1, got {self.hc_budget}")
        if self.ga_mutation_rate is not None and not 0.0 <= self.ga_mutation_rate <= 1.0:
            raise ConfigError(f"run.ga_mutation_rate: must lie in [0, 1], got {self.ga_mutation_rate}")

    def resolved_hc_budget(self) -> HcBudget:
        """Two full neighborhood scans per climb unless configured."""
        if self.hc_budget is not None:
            return HcBudget(self.hc_budget)
        return HcBudget(2 * self.space.neighborhood_size())

    def resolved_mutation_rate(self) -> float:
        """One expected gene flip per child unless configured."""
        if self.ga_mutation_rate is not None:
            return self.ga_mutation_rate
        return 1.0 / self.space.gene_count


@dataclass(frozen=True)
class GenerationRecord:
    """State at the end of one generation. elapsed_seconds is in-memory
    only; serialization drops it to keep logs reproducible."""

    generation: int
    members: tuple[EvaluatedChromosome, ...]
    best: EvaluatedChromosome
    child_best: EvaluatedChromosome | None
    evaluations: int
    elapsed_seconds: float


@dataclass(frozen=True)
class RunResult:
    algorithm: str
    records: tuple[GenerationRecord, ...]
    best: EvaluatedChromosome | None
    termination: Termination
    error: str | None = None


RecordSink = Callable[[GenerationRecord], None]


def build_evaluator(space: SearchSpace, spec: dict, record_trace: bool = False
                    ) -> tuple[CachedEvaluator, Callable[[], None] | None]:
    """Construct the evaluator a spec subtree describes, behind a cache.

    Returns the cache and, for external evaluators, a closer that shuts
    the child process down; callers must invoke it when done.
    """
    kind = spec.get("kind")
    closer: Callable[[], None] | None = None
    inner: FitnessEvaluator
    if kind == "hashed":
        inner = HashedLandscape(spec.get("seed", 0))
    elif kind == "separable":
        if "weights" in spec:
            inner = SeparableLandscape(space, tuple(tuple(row) for row in spec["weights"]))
        else:
            inner = SeparableLandscape.random(space, spec.get("seed", 0))
    elif kind == "trap":
        inner = TrapLandscape(
            space,
            chromosome_from_tokens(space, spec["target"]),
            chromosome_from_tokens(space, spec["trap"]),
            spec.get("trap_value", 0.6),
            spec.get("slope", 1.0),
        )
    elif kind == "external":
        session = open_session(
            spec["command"],
            space,
            ProtocolConfig(
                handshake_timeout=spec.get("handshake_timeout", 30.0),
                request_timeout=spec.get("request_timeout", 3600.0),
            ),
        )
        inner = SessionEvaluator(session, substitute_failures=spec.get("on_error", "fail") == "zero")
        closer = session.close
    else:
        raise ConfigError(f"evaluator.kind: unknown kind {kind!r}")
    return CachedEvaluator(inner, record_trace), closer


def _climb_population_best(config: RunConfig, population: Population,
                           cache: CachedEvaluator, rng: random.Random) -> Population:
    result = hill_climb(config.space, population.best, cache.evaluate,
                        config.hc_strategy, config.resolved_hc_budget(), rng)
    if result.best.fitness > population.best.fitness:
        members = [result.best] + list(population.members[1:])
        return Population.ranked(members, population.capacity)
    return population


Refiner = Callable[[list[EvaluatedChromosome], CachedEvaluator, random.Random],
                   list[EvaluatedChromosome]]


def _run_evolutionary(config: RunConfig, algorithm: str, refine: Refiner,
                      evaluator: CachedEvaluator | None = None,
                      on_record: RecordSink | None = None) -> RunResult:
    """The shared generational loop.

    Each generation: score anything unscored, stop if the best already
    meets the threshold, otherwise breed from the top two, refine the
    two children, replace the two worst, and log. The threshold check
    runs before any operator, so a satisfied population is never bred.
    """
    cache = evaluator
    closer: Callable[[], None] | None = None
    rng = random.Random(config.seed)
    records: list[GenerationRecord] = []
    start_time = time.monotonic()

    def emit(record: GenerationRecord) -> None:
        records.append(record)
        if on_record is not None:
            on_record(record)

    def snapshot(generation: int, population: Population,
                 child_best: EvaluatedChromosome | None) -> GenerationRecord:
        return GenerationRecord(generation, population.members, population.best,
                                child_best, cache.misses, time.monotonic() - start_time)

    try:
        try:
            if cache is None:
                cache, closer = build_evaluator(config.space, config.evaluator)
            seeds = generate_population(config.space, config.population_size, rng)
            members = [EvaluatedChromosome(c, cache.evaluate(c)) for c in seeds]
            population = Population.ranked(members, config.population_size)
            termination = Termination.GENERATIONS_EXHAUSTED
            for generation in range(1, config.max_generations + 1):
                if population.best.fitness >= config.fitness_threshold:
                    emit(snapshot(generation, population, None))
                    termination = Termination.THRESHOLD_REACHED
                    break
                parents = select_parents(population)
                raw_a, raw_b = crossover(parents[0].chromosome, parents[1].chromosome,
                                         config.crossover_mode, rng)
                children = [EvaluatedChromosome(c, cache.evaluate(c)) for c in (raw_a, raw_b)]
                children = refine(children, cache, rng)
                population = replace_worst(population, children)
                if config.climb_generation_best:
                    population = _climb_population_best(config, population, cache, rng)
                child_best = children[0] if children[0].fitness >= children[1].fitness else children[1]
                emit(snapshot(generation, population, child_best))
            return RunResult(algorithm, tuple(records), population.best, termination)
        except (SessionError, EvaluationError) as exc:
            best = records[-1].best if records else None
            return RunResult(algorithm, tuple(records), best,
                             Termination.EVALUATOR_FAILURE, str(exc))
    finally:
        if closer is not None:
            closer()


def run_hybrid(config: RunConfig, evaluator: CachedEvaluator | None = None,
               on_record: RecordSink | None = None) -> RunResult:
    """Genetic search with hill climbing as the mutation operator."""
    budget = config.resolved_hc_budget()

    def refine(children: list[EvaluatedChromosome], cache: CachedEvaluator,
               rng: random.Random) -> list[EvaluatedChromosome]:
        return mutate_children(config.space, children, cache.evaluate,
                               config.hc_strategy, budget, rng)

    return _run_evolutionary(config, "hybrid", refine, evaluator, on_record)


def run_ga(config: RunConfig, evaluator: CachedEvaluator | None = None,
           on_record: RecordSink | None = None) -> RunResult:
    """Same loop as the hybrid, but mutation is a per-gene uniform
    resample at the configured rate instead of a climb."""
    rate = config.resolved_mutation_rate()

    def refine(children: list[EvaluatedChromosome], cache: CachedEvaluator,
               rng: random.Random) -> list[EvaluatedChromosome]:
        mutated = []
        for child in children:
            chromosome = resample_mutation(config.space, child.chromosome, rate, rng)
            mutated.append(EvaluatedChromosome(chromosome, cache.evaluate(chromosome)))
        return mutated

    return _run_evolutionary(config, "ga", refine, evaluator, on_record)


def run_hc(config: RunConfig, evaluator: CachedEvaluator | None = None,
           on_record: RecordSink | None = None) -> RunResult:
    """Hill-climbing baseline: one restart per generation slot, logging
    the best result seen so far after each restart."""
    cache = evaluator
    closer: Callable[[], None] | None = None
    rng = random.Random(config.seed)
    records: list[GenerationRecord] = []
    start_time = time.monotonic()
    best_so_far: EvaluatedChromosome | None = None
    try:
        try:
            if cache is None:
                cache, closer = build_evaluator(config.space, config.evaluator)

            def on_restart(index: int, result) -> None:
                nonlocal best_so_far
                if best_so_far is None or result.best.fitness > best_so_far.fitness:
                    best_so_far = result.best
                record = GenerationRecord(index + 1, (result.best,), best_so_far, None,
                                          cache.misses, time.monotonic() - start_time)
                records.append(record)
                if on_record is not None:
                    on_record(record)

            best = random_restart_hc(config.space, config.max_generations, cache.evaluate,
                                     config.hc_strategy, config.resolved_hc_budget(),
                                     rng, on_restart)
            return RunResult("hc", tuple(records), best, Termination.GENERATIONS_EXHAUSTED)
        except (SessionError, EvaluationError) as exc:
            return RunResult("hc", tuple(records), best_so_far,
                             Termination.EVALUATOR_FAILURE, str(exc))
    finally:
        if closer is not None:
            closer()


ALGORITHMS: dict[str, Callable[..., RunResult]] = {
    "ga": run_ga,
    "hc": run_hc,
    "hybrid": run_hybrid,
}


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    checkpoint: str
    mean: float
    stddev: float
    minimum: float
    maximum: float
    failures: int


@dataclass(frozen=True)
class BenchResult:
    rows: tuple[BenchRow, ...]

    def arm_final(self, algorithm: str) -> BenchRow:
        for row in self.rows:
            if row.algorithm == algorithm and row.checkpoint == "final":
                return row
        raise KeyError(algorithm)


def _best_at_generation(result: RunResult, generation: int) -> float:
    value = result.records[0].best.fitness
    for record in result.records:
        if record.generation <= generation:
            value = record.best.fitness
    return value


def _stats_row(algorithm: str, checkpoint: str, values: list[float], failures: int) -> BenchRow:
    if not values:
        nan = float("nan")
        return BenchRow(algorithm, checkpoint, nan, nan, nan, nan, failures)
    spread = statistics.stdev(values) if len(values) > 1 else 0.0
    return BenchRow(algorithm, checkpoint, statistics.fmean(values), spread,
                    min(values), max(values), failures)


def bench_compare(configs: dict[str, RunConfig], repetitions: int,
                  seed_base: int = 0) -> BenchResult:
    """Run each arm over the same seed block and tabulate checkpoints.

    Every arm must target the same space and evaluator; making the
    arms' evaluation spend comparable (for example by granting the
    plain GA extra generations) is the caller's configuration choice,
    and the evaluations checkpoint reports what each arm actually
    spent. Failed runs are excluded from the statistics and counted.
    """
    if repetitions < 2:
        raise ConfigError(f"bench repetitions must be at least 2, got {repetitions}")
    if not configs:
        raise ConfigError("bench needs at least one algorithm")
    reference = next(iter(configs.values()))
    for name, config in configs.items():
        if name not in ALGORITHMS:
            raise ConfigError(f"bench.{name}: unknown algorithm")
        if config.space != reference.space or config.evaluator != reference.evaluator:
            raise ConfigError("bench arms must share one space and one evaluator")
    rows: list[BenchRow] = []
    for name, config in configs.items():
        succeeded: list[RunResult] = []
        failures = 0
        for repetition in range(repetitions):
            result = ALGORITHMS[name](replace(config, seed=seed_base + repetition))
            if result.termination is Termination.EVALUATOR_FAILURE or result.best is None:
                failures += 1
            else:
                succeeded.append(result)
        for generation in range(1, config.max_generations + 1):
            values = [_best_at_generation(r, generation) for r in succeeded]
            rows.append(_stats_row(name, f"gen{generation}", values, failures))
        rows.append(_stats_row(name, "final", [r.best.fitness for r in succeeded], failures))
        rows.append(_stats_row(name, "evaluations",
                               [float(r.records[-1].evaluations) for r in succeeded], failures))
    return BenchResult(tuple(rows))


def write_summary_csv(path: str | Path, bench: BenchResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["algorithm", "checkpoint", "mean", "stddev", "min", "max", "failures"])
        for row in bench.rows:
            writer.writerow([row.algorithm, row.checkpoint, row.mean, row.stddev,
                             row.minimum, row.maximum, row.failures])


def evaluated_to_doc(space: SearchSpace, member: EvaluatedChromosome) -> dict:
    return {"genes": member.chromosome.tokens(space), "fitness": member.fitness}


def record_to_doc(space: SearchSpace, record: GenerationRecord) -> dict:
    """Log line for one generation. No timing fields: repeat runs of a
    seed must serialize identically, byte for byte."""
    return {
        "generation": record.generation,
        "members": [evaluated_to_doc(space, m) for m in record.members],
        "best": evaluated_to_doc(space, record.best),
        "child_best": (evaluated_to_doc(space, record.child_best)
                       if record.child_best is not None else None),
        "evaluations": record.evaluations,
    }


def result_to_doc(space: SearchSpace, result: RunResult) -> dict:
    last = result.records[-1] if result.records else None
    return {
        "algorithm": result.algorithm,
        "termination": result.termination.value,
        "best": evaluated_to_doc(space, result.best) if result.best is not None else None,
        "generations": len(result.records),
        "evaluations": last.evaluations if last else 0,
        "elapsed_seconds": last.elapsed_seconds if last else 0.0,
        "error": result.error,
    }


_RUN_KEY_PARSERS = {
    "population_size": "int",
    "max_generations": "int",
    "fitness_threshold": "float",
    "seed": "int",
    "crossover_mode": "crossover",
    "hc_strategy": "strategy",
    "hc_budget": "int",
    "ga_mutation_rate": "float",
    "climb_generation_best": "bool",
}


def _as_int(value: object, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: must be an integer, got {value!r}")
    return value


def _as_float(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: must be a number, got {value!r}")
    return float(value)


def _parse_run_section(section: object) -> dict:
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError("run: must be an object")
    kwargs: dict = {}
    for key, value in section.items():
        parser = _RUN_KEY_PARSERS.get(key)
        where = f"run.{key}"
        if parser is None:
            raise ConfigError(f"{where}: unknown key")
        if parser == "int":
            kwargs[key] = _as_int(value, where)
        elif parser == "float":
            kwargs[key] = _as_float(value, where)
        elif parser == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{where}: must be true or false, got {value!r}")
            kwargs[key] = value
        elif parser == "crossover":
            try:
                kwargs[key] = CrossoverMode(value)
            except ValueError:
                raise ConfigError(f"{where}: unknown mode {value!r}") from None
        elif parser == "strategy":
            try:
                kwargs[key] = HcStrategy(value)
            except ValueError:
                raise ConfigError(f"{where}: unknown strategy {value!r}") from None
    return kwargs


def parse_space_section(value: object) -> SearchSpace:
    if value == "default_cnn" or value is None:
        return default_cnn_space()
    if isinstance(value, dict):
        try:
            return space_from_doc(value)
        except SpaceError as exc:
            raise ConfigError(f"space: {exc}") from None
    raise ConfigError(f"space: must be \"default_cnn\" or a space object, got {value!r}")


_EVALUATOR_KEYS = {
    "hashed": {"kind", "seed"},
    "separable": {"kind", "seed", "weights"},
    "trap": {"kind", "target", "trap", "trap_value", "slope"},
    "external": {"kind", "command", "handshake_timeout", "request_timeout", "on_error"},
}


def _parse_evaluator_section(section: object, space: SearchSpace) -> dict:
    if section is None:
        raise ConfigError("evaluator: missing")
    if not isinstance(section, dict):
        raise ConfigError("evaluator: must be an object")
    kind = section.get("kind")
    if kind not in _EVALUATOR_KEYS:
        raise ConfigError(f"evaluator.kind: unknown kind {kind!r}")
    for key in section:
        if key not in _EVALUATOR_KEYS[kind]:
            raise ConfigError(f"evaluator.{key}: unknown key for kind {kind!r}")
    spec = dict(section)
    if kind in ("hashed", "separable") and "seed" in spec:
        _as_int(spec["seed"], "evaluator.seed")
    if kind == "separable" and "weights" in spec:
        if not isinstance(spec["weights"], list):
            raise ConfigError("evaluator.weights: must be a list of per-gene lists")
    if kind == "trap":
        for key in ("target", "trap"):
            if not isinstance(spec.get(key), dict):
                raise ConfigError(f"evaluator.{key}: must map gene names to tokens")
        if "trap_value" in spec:
            _as_float(spec["trap_value"], "evaluator.trap_value")
        if "slope" in spec:
            _as_float(spec["slope"], "evaluator.slope")
    if kind == "external":
        command = spec.get("command")
        if not isinstance(command, str) or not command.strip():
            raise ConfigError("evaluator.command: must be a non-empty command line")
        for key in ("handshake_timeout", "request_timeout"):
            if key in spec and _as_float(spec[key], f"evaluator.{key}") <= 0:
                raise ConfigError(f"evaluator.{key}: must be positive")
        if spec.get("on_error", "fail") not in ("fail", "zero"):
            raise ConfigError(f"evaluator.on_error: must be \"fail\" or \"zero\", got {spec.get('on_error')!r}")
    else:
        # Synthetic evaluators can be fully validated up front by
        # building one; bad parameters are config mistakes, not
        # evaluator failures.
        try:
            build_evaluator(space, spec)
        except (EvaluationError, SpaceError) as exc:
            raise ConfigError(f"evaluator: {exc}") from None
    return spec


_TOP_LEVEL_KEYS = {"space", "evaluator", "run", "bench"}


def parse_config(doc: object) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for key in doc:
        if key not in _TOP_LEVEL_KEYS:
            raise ConfigError(f"{key}: unknown section")
    space = parse_space_section(doc.get("space"))
    evaluator = _parse_evaluator_section(doc.get("evaluator"), space)
    kwargs = _parse_run_section(doc.get("run"))
    return RunConfig(space=space, evaluator=evaluator, **kwargs)


def parse_bench_configs(doc: object) -> dict[str, RunConfig]:
    """One config per algorithm: the shared run section with optional
    per-arm overrides from the bench section."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    overrides = doc.get("bench") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("bench: must be an object")
    for key in overrides:
        if key not in ALGORITHMS:
            raise ConfigError(f"bench.{key}: unknown algorithm")
        if not isinstance(overrides[key], dict):
            raise ConfigError(f"bench.{key}: must be an object of run overrides")
    arms: dict[str, RunConfig] = {}
    for name in ("ga", "hc", "hybrid"):
        merged = dict(doc.get("run") or {})
        merged.update(overrides.get(name, {}))
        arm_doc = {"space": doc.get("space"), "evaluator": doc.get("evaluator"), "run": merged}
        try:
            arms[name] = parse_config(arm_doc)
        except ConfigError as exc:
            raise ConfigError(f"bench arm {name}: {exc}") from None
    return arms


def load_config_doc(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config parse error in {path}: top level must be an object")
    return doc


def load_config(path: str | Path) -> RunConfig:
    return parse_config(load_config_doc(path))
