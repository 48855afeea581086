"""Command-line entry points: run, bench, space show, proto selftest."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .driver import (
    ALGORITHMS,
    ConfigError,
    Termination,
    bench_compare,
    load_config,
    load_config_doc,
    parse_bench_configs,
    parse_space_section,
    record_to_doc,
    result_to_doc,
    write_summary_csv,
)
from .extproto import SessionError, echo_evaluator_selftest
from .landscapes import EvaluationError, default_cnn_space
from .space import SpaceError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "run.jsonl"
    with open(log_path, "w", encoding="utf-8") as log:
        def on_record(record) -> None:
            log.write(json.dumps(record_to_doc(config.space, record)) + "\n")
            log.flush()

        result = ALGORITHMS[args.algo](config, on_record=on_record)
    result_path = out / "result.json"
    result_path.write_text(json.dumps(result_to_doc(config.space, result), indent=2) + "\n",
                           encoding="utf-8")
    if result.termination is Termination.EVALUATOR_FAILURE:
        print(f"evaluator error: {result.error}", file=sys.stderr)
        return EXIT_EVALUATOR
    assert result.best is not None
    print(f"{result.algorithm}: best fitness {result.best.fitness:.6f} "
          f"({result.termination.value}) after {len(result.records)} generation(s), "
          f"{result.records[-1].evaluations} evaluation(s)")
    print(f"wrote {log_path} and {result_path}")
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    doc = load_config_doc(args.config)
    arms = parse_bench_configs(doc)
    seed_base = args.seed_base if args.seed_base is not None else arms["hybrid"].seed
    bench = bench_compare(arms, args.reps, seed_base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "summary.csv"
    write_summary_csv(csv_path, bench)
    for name in arms:
        row = bench.arm_final(name)
        print(f"{name}: final mean {row.mean:.6f} stddev {row.stddev:.6f} "
              f"min {row.minimum:.6f} max {row.maximum:.6f} failures {row.failures}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def _cmd_space_show(args: argparse.Namespace) -> int:
    doc = load_config_doc(args.config) if args.config else {}
    space = parse_space_section(doc.get("space"))
    name_width = max(len(g.name) for g in space.genes)
    for gene in space.genes:
        values = ", ".join(gene.domain)
        print(f"{gene.name:<{name_width}}  {gene.kind.value:<11}  {len(gene.domain):>2}  {values}")
    print(f"cardinality: {space.cardinality():,}")
    return EXIT_OK


def _cmd_proto_selftest(args: argparse.Namespace) -> int:
    if args.cmd:
        doc = load_config_doc(args.config) if args.config else {}
        space = parse_space_section(doc.get("space")) if doc else default_cnn_space()
        cases = echo_evaluator_selftest(space, args.cmd, seed=args.seed)
    else:
        cases = echo_evaluator_selftest(seed=args.seed)
    for case in cases:
        if case.ok:
            print(f"ok   {case.name}")
        else:
            print(f"FAIL {case.name}: {case.detail}")
    if all(case.ok for case in cases):
        print(f"{len(cases)} case(s) passed")
        return EXIT_OK
    return EXIT_EVALUATOR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memetic",
        description="Discrete hyperparameter search with a genetic algorithm "
                    "that uses hill climbing as its mutation step.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one seeded optimization run")
    run_p.add_argument("--config", required=True, help="path to a JSON config document")
    run_p.add_argument("--algo", choices=sorted(ALGORITHMS), default="hybrid")
    run_p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run_p.add_argument("--out", default=".", help="directory for run.jsonl and result.json")
    run_p.set_defaults(handler=_cmd_run)

    bench_p = sub.add_parser("bench", help="compare ga, hc, and hybrid over a block of seeds")
    bench_p.add_argument("--config", required=True)
    bench_p.add_argument("--reps", type=int, required=True, help="repetitions per algorithm")
    bench_p.add_argument("--seed-base", type=int, default=None,
                         help="first seed of the block (default: the configured seed)")
    bench_p.add_argument("--out", default=".", help="directory for summary.csv")
    bench_p.set_defaults(handler=_cmd_bench)

    space_p = sub.add_parser("space", help="inspect a search space")
    space_sub = space_p.add_subparsers(dest="space_command", required=True)
    show_p = space_sub.add_parser("show", help="print the gene table and cardinality")
    show_p.add_argument("--config", default=None,
                        help="config whose space to show (default: the built-in CNN space)")
    show_p.set_defaults(handler=_cmd_space_show)

    proto_p = sub.add_parser("proto", help="evaluator protocol tools")
    proto_sub = proto_p.add_subparsers(dest="proto_command", required=True)
    selftest_p = proto_sub.add_parser(
        "selftest",
        help="check an evaluator command against the protocol, or with no "
             "--cmd run the full battery against the bundled echo evaluator",
    )
    selftest_p.add_argument("--cmd", default=None, help="evaluator command line to test")
    selftest_p.add_argument("--seed", type=int, default=7, help="hash seed for expected values")
    selftest_p.add_argument("--config", default=None,
                            help="config whose space to send (default: the built-in CNN space)")
    selftest_p.set_defaults(handler=_cmd_proto_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, SpaceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SessionError, EvaluationError) as exc:
        print(f"evaluator error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
