"""
demos/04_external_evaluator.py

Talks to an out-of-process fitness evaluator over the line-delimited
JSON protocol. The bundled echo evaluator stands in for a real one
(a model trainer, a simulator); anything that speaks the protocol on
stdin/stdout plugs in the same way.

Three stages: raw session traffic, error handling, and a full hybrid
run configured with an external evaluator command.
"""

from __future__ import annotations

import json
import random
import shlex
import sys
import tempfile
from pathlib import Path

from memetic import (
    ProtocolConfig,
    RemoteEvaluationError,
    RunConfig,
    default_cnn_space,
    open_session,
    random_chromosome,
    run_hybrid,
    space_to_doc,
)
from memetic.extproto import reference_echo_command


def main() -> None:
    space = default_cnn_space()
    workdir = Path(tempfile.mkdtemp(prefix="extproto-demo-"))
    space_file = workdir / "space.json"
    space_file.write_text(json.dumps(space_to_doc(space)))

    print("=== raw session: handshake, pipelined requests ===")
    command = reference_echo_command(str(space_file), seed=7)
    print("spawning:", " ".join(shlex.quote(part) for part in command))
    rng = random.Random(3)
    with open_session(command, space,
                      ProtocolConfig(pipeline_window=4)) as session:
        pending = {}
        for _ in range(4):
            chromosome = random_chromosome(space, rng)
            pending[session.submit(chromosome)] = chromosome
        for request_id, chromosome in pending.items():
            fitness = session.wait(request_id)
            tokens = chromosome.tokens(space)
            print(f"  id {request_id}: {tokens['optimizer']}/{tokens['epochs']}ep"
                  f" -> {fitness:.4f}")

    print("\n=== failure of one request does not kill the session ===")
    command = reference_echo_command(str(space_file), seed=7, mode="error-first")
    with open_session(command, space) as session:
        probe = random_chromosome(space, rng)
        try:
            session.evaluate(probe)
        except RemoteEvaluationError as exc:
            print(f"  first request failed as scripted: {exc}")
        fitness = session.evaluate(probe)
        print(f"  retry on the same session scored {fitness:.4f}")

    print("\n=== driving a full run through the config path ===")
    config = RunConfig(
        space=space,
        evaluator={
            "kind": "external",
            "command": shlex.join(reference_echo_command(str(space_file), seed=7)),
        },
        max_generations=2,
        seed=5,
    )
    result = run_hybrid(config)
    print(f"  termination: {result.termination.value}")
    print(f"  evaluations: {result.records[-1].evaluations}")
    print(f"  best fitness: {result.best.fitness:.4f}")
    print("\nswap the command for your own evaluator to search for real;")
    print("see the protocol walkthrough in the README.")


if __name__ == "__main__":
    sys.exit(main())
