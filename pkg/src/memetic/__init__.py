"""Memetic optimizer for discrete hyperparameter search."""

from .driver import (
    ALGORITHMS,
    BenchResult,
    BenchRow,
    ConfigError,
    GenerationRecord,
    RunConfig,
    RunResult,
    Termination,
    bench_compare,
    build_evaluator,
    load_config,
    parse_config,
    run_ga,
    run_hc,
    run_hybrid,
    write_summary_csv,
)
from .evolve import (
    CrossoverMode,
    EvolveError,
    Population,
    crossover,
    generate_population,
    replace_worst,
    resample_mutation,
    select_parents,
)
from .extproto import (
    EvaluatorSession,
    ProtocolConfig,
    RemoteEvaluationError,
    SessionError,
    SessionEvaluator,
    echo_evaluator_selftest,
    open_session,
)
from .landscapes import (
    CachedEvaluator,
    EvaluationError,
    FitnessEvaluator,
    HashedLandscape,
    SeparableLandscape,
    TrapLandscape,
    brute_force_optimum,
    default_cnn_space,
    splitmix64,
)
from .localsearch import (
    ClimbResult,
    HcBudget,
    HcStrategy,
    LocalSearchError,
    hill_climb,
    mutate_children,
    random_restart_hc,
)
from .space import (
    Chromosome,
    EvaluatedChromosome,
    GeneKind,
    GeneSpec,
    SearchSpace,
    SpaceError,
    chromosome_from_tokens,
    neighbors,
    random_chromosome,
    space_from_doc,
    space_to_doc,
    validate_space,
)

__version__ = "0.1.0"
