"""Line-delimited JSON protocol for external fitness evaluators.

Wire format, version 1, over a child process's stdin/stdout:

- UTF-8 text, no BOM, exactly one JSON object per line, newline
  terminated. stdout carries protocol traffic only; anything the
  evaluator wants to log goes to stderr, which is passed through.
- handshake: client sends {"hello": {"protocol": 1, "genes": [...]}}
  naming the genes in order; the evaluator answers
  {"ready": {"protocol": 1}}.
- requests: {"id": 7, "genes": {"f1": "64", ...}} with ids strictly
  increasing and values the exact domain tokens.
- responses: {"id": 7, "fitness": 0.47} or {"id": 7, "error": "why"}.
  Responses are matched to requests by id, so an evaluator may answer
  out of order. An error response fails that one evaluation; anything
  unparseable, an unknown id, a fitness outside [0, 1], or the process
  exiting fails the whole session.
- both sides ignore object fields they do not recognize.
"""

from __future__ import annotations

import json
import math
import os
import queue
import random
import shlex
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass

from .landscapes import EvaluationError, HashedLandscape
from .space import (
    Chromosome,
    GeneKind,
    GeneSpec,
    SearchSpace,
    random_chromosome,
    space_to_doc,
)

PROTOCOL_VERSION = 1


class SessionError(RuntimeError):
    """The evaluator session is broken and cannot be used further."""


class RemoteEvaluationError(EvaluationError):
    """The evaluator reported failure for one specific request."""


def _snippet(raw: bytes) -> str:
    return repr(raw[:200])


@dataclass(frozen=True)
class ProtocolConfig:
    """Client-side knobs. The request timeout is generous by default
    because a single evaluation may be a full model training run."""

    handshake_timeout: float = 30.0
    request_timeout: float = 3600.0
    pipeline_window: int = 1

    def __post_init__(self) -> None:
        if self.handshake_timeout <= 0 or self.request_timeout <= 0:
            raise SessionError("timeouts must be positive")
        if self.pipeline_window < 1:
            raise SessionError(f"pipeline window must be at least 1: {self.pipeline_window}")


class EvaluatorSession:
    """One live evaluator child process plus the bookkeeping to talk to it.

    A dedicated thread drains the child's stdout into a queue, so the
    client never blocks on a write while responses sit unread. Use
    open_session, or construct directly and call handshake yourself.
    """

    def __init__(self, command: list[str] | str, space: SearchSpace,
                 config: ProtocolConfig = ProtocolConfig()) -> None:
        self.space = space
        self.config = config
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._next_id = 1
        self._pending: dict[int, Chromosome] = {}
        self._done: dict[int, tuple[str, object]] = {}
        self._closed = False
        self._incoming: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=None
            )
        except OSError as exc:
            raise SessionError(f"cannot start evaluator {self.command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._drain_stdout, daemon=True)
        self._reader.start()

    def _drain_stdout(self) -> None:
        stream = self._proc.stdout
        assert stream is not None
        while True:
            raw = stream.readline()
            if not raw:
                break
            self._incoming.put(("line", raw))
        self._incoming.put(("eof", None))

    def _write_line(self, payload: dict) -> None:
        stdin = self._proc.stdin
        assert stdin is not None
        data = json.dumps(payload).encode("utf-8") + b"\n"
        try:
            stdin.write(data)
            stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise SessionError(
                f"evaluator closed its input (exit code {self._proc.poll()}): {exc}"
            ) from exc

    def _next_event(self, deadline: float, context: str):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise SessionError(f"timed out {context}")
        try:
            return self._incoming.get(timeout=remaining)
        except queue.Empty:
            raise SessionError(f"timed out {context}") from None

    def handshake(self) -> None:
        """Announce the gene list and insist the evaluator speak version 1."""
        self._write_line({"hello": {"protocol": PROTOCOL_VERSION,
                                    "genes": [g.name for g in self.space.genes]}})
        deadline = time.monotonic() + self.config.handshake_timeout
        kind, raw = self._next_event(deadline, "during handshake")
        if kind == "eof":
            raise SessionError(f"evaluator exited during handshake (code {self._proc.wait()})")
        try:
            reply = json.loads(self._decode(raw))
        except ValueError:
            raise SessionError(f"malformed handshake reply: {_snippet(raw)}") from None
        ready = reply.get("ready") if isinstance(reply, dict) else None
        if not isinstance(ready, dict):
            raise SessionError(f"malformed handshake reply: {_snippet(raw)}")
        offered = ready.get("protocol")
        if offered != PROTOCOL_VERSION:
            raise SessionError(
                f"protocol mismatch: wanted {PROTOCOL_VERSION}, evaluator offered {offered!r}"
            )

    @staticmethod
    def _decode(raw: bytes) -> str:
        if not raw.endswith(b"\n"):
            raise SessionError(f"unterminated response line: {_snippet(raw)}")
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise SessionError(f"response is not valid UTF-8: {_snippet(raw)}") from None

    def submit(self, chromosome: Chromosome) -> int:
        """Send one request without waiting. Returns its id."""
        if self._closed:
            raise SessionError("session is closed")
        if len(self._pending) >= self.config.pipeline_window:
            raise SessionError(
                f"pipeline window full: {len(self._pending)} request(s) outstanding"
            )
        request_id = self._next_id
        self._next_id += 1
        self._pending[request_id] = chromosome
        self._write_line({"id": request_id, "genes": chromosome.tokens(self.space)})
        return request_id

    def wait(self, request_id: int, timeout: float | None = None) -> float:
        """Block until the response for request_id arrives.

        Responses for other outstanding requests encountered on the way
        are kept, which is what makes out-of-order evaluators work.
        """
        timeout = self.config.request_timeout if timeout is None else timeout
        deadline = time.monotonic() + timeout
        while request_id not in self._done:
            kind, raw = self._next_event(
                deadline, f"after {timeout:g}s waiting for response {request_id}"
            )
            if kind == "eof":
                raise SessionError(
                    f"evaluator exited (code {self._proc.wait()}) "
                    f"with {len(self._pending)} request(s) outstanding"
                )
            self._ingest(raw)
        state, value = self._done.pop(request_id)
        if state == "error":
            raise RemoteEvaluationError(f"evaluator failed request {request_id}: {value}")
        assert isinstance(value, float)
        return value

    def _ingest(self, raw: bytes) -> None:
        line = self._decode(raw).strip()
        if not line:
            raise SessionError("blank line from evaluator")
        try:
            message = json.loads(line)
        except ValueError:
            raise SessionError(f"malformed response line: {_snippet(raw)}") from None
        if not isinstance(message, dict):
            raise SessionError(f"malformed response line: {_snippet(raw)}")
        request_id = message.get("id")
        if isinstance(request_id, bool) or not isinstance(request_id, int):
            raise SessionError(f"response without a usable id: {_snippet(raw)}")
        if request_id not in self._pending:
            raise SessionError(
                f"response id {request_id} does not match any outstanding request"
            )
        has_fitness = "fitness" in message
        has_error = "error" in message
        if has_fitness == has_error:
            raise SessionError(
                f"response must carry exactly one of fitness or error: {_snippet(raw)}"
            )
        del self._pending[request_id]
        if has_error:
            self._done[request_id] = ("error", str(message["error"]))
            return
        fitness = message["fitness"]
        if isinstance(fitness, bool) or not isinstance(fitness, (int, float)):
            raise SessionError(f"fitness is not a number: {_snippet(raw)}")
        fitness = float(fitness)
        if not math.isfinite(fitness) or not 0.0 <= fitness <= 1.0:
            raise SessionError(f"fitness out of [0, 1] from evaluator: {fitness!r}")
        self._done[request_id] = ("ok", fitness)

    def evaluate(self, chromosome: Chromosome) -> float:
        """Round-trip one chromosome: submit, then wait for its response."""
        return self.wait(self.submit(chromosome))

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        proc = self._proc
        if proc.stdin is not None:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        self._reader.join(timeout=5)

    def __enter__(self) -> EvaluatorSession:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def open_session(command: list[str] | str, space: SearchSpace,
                 config: ProtocolConfig = ProtocolConfig()) -> EvaluatorSession:
    """Spawn the evaluator and complete the handshake, or clean up and raise."""
    session = EvaluatorSession(command, space, config)
    try:
        session.handshake()
    except BaseException:
        session.close()
        raise
    return session


class SessionEvaluator:
    """Adapts a session to the evaluator interface the run loops expect.

    By default an error response aborts the run; substitute_failures
    turns such chromosomes into fitness 0.0 so the search can continue.
    Session-level failures always propagate.
    """

    deterministic = False

    def __init__(self, session: EvaluatorSession, substitute_failures: bool = False) -> None:
        self._session = session
        self.substitute_failures = substitute_failures

    def evaluate(self, chromosome: Chromosome) -> float:
        try:
            return self._session.evaluate(chromosome)
        except RemoteEvaluationError:
            if self.substitute_failures:
                return 0.0
            raise


@dataclass(frozen=True)
class SelftestCase:
    name: str
    ok: bool
    detail: str = ""


def _selftest_space() -> SearchSpace:
    c = GeneKind.CATEGORICAL
    return SearchSpace((
        GeneSpec("alpha", c, ("a", "b", "c")),
        GeneSpec("beta", c, ("0", "1")),
        GeneSpec("gamma", c, ("x", "y", "z", "w")),
    ))


def reference_echo_command(space_file: str, seed: int, mode: str = "normal") -> list[str]:
    return [sys.executable, "-m", "memetic.echo_evaluator",
            "--space", space_file, "--seed", str(seed), "--mode", mode]


def _scripted_points(space: SearchSpace, count: int) -> list[Chromosome]:
    rng = random.Random(0xC0FFEE)
    first = Chromosome(tuple(0 for _ in space.genes))
    last = Chromosome(tuple(len(g.domain) - 1 for g in space.genes))
    points = [first, last]
    while len(points) < count:
        points.append(random_chromosome(space, rng))
    return points[:count]


def _expect_session_error(command: list[str], space: SearchSpace, fragment: str,
                          pipeline: int = 1) -> tuple[bool, str]:
    config = ProtocolConfig(handshake_timeout=20.0, request_timeout=20.0,
                            pipeline_window=pipeline)
    session = None
    try:
        session = open_session(command, space, config)
        for point in _scripted_points(space, 2):
            session.evaluate(point)
    except SessionError as exc:
        if fragment in str(exc):
            return True, ""
        return False, f"wrong failure: {exc}"
    finally:
        if session is not None:
            session.close()
    return False, "misbehavior went undetected"


def echo_evaluator_selftest(space: SearchSpace | None = None,
                            command: list[str] | str | None = None,
                            seed: int = 7) -> list[SelftestCase]:
    """Scripted conformance battery for the line protocol.

    With no command this exercises the bundled echo evaluator, checking
    exact hashed-fitness values plus the client's rejection of framing
    violations, unknown ids, and protocol mismatches. With a command it
    runs the conformance subset a foreign evaluator can be held to:
    handshake, scored sequential requests, and pipelined requests
    matched by id.
    """
    if command is not None:
        return _foreign_battery(space or default_selftest_space_for_foreign(), command)
    space = space or _selftest_space()
    expected = HashedLandscape(seed)
    cases: list[SelftestCase] = []
    with tempfile.TemporaryDirectory(prefix="memetic-selftest-") as tmp:
        space_file = os.path.join(tmp, "space.json")
        with open(space_file, "w", encoding="utf-8") as handle:
            json.dump(space_to_doc(space), handle)

        def cmd(mode: str) -> list[str]:
            return reference_echo_command(space_file, seed, mode)

        def run_case(name: str, fn) -> None:
            try:
                ok, detail = fn()
            except (SessionError, EvaluationError, OSError) as exc:
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            cases.append(SelftestCase(name, ok, detail))

        def scored_sequential() -> tuple[bool, str]:
            with open_session(cmd("normal"), space) as session:
                for point in _scripted_points(space, 6):
                    got = session.evaluate(point)
                    want = expected.evaluate(point)
                    if got != want:
                        return False, f"fitness {got!r} != expected {want!r} for {point.alleles}"
            return True, ""

        def out_of_order() -> tuple[bool, str]:
            config = ProtocolConfig(pipeline_window=4)
            points = _scripted_points(space, 4)
            with open_session(cmd("reorder"), space, config) as session:
                ids = [session.submit(p) for p in points]
                for request_id, point in zip(ids, points):
                    got = session.wait(request_id)
                    want = expected.evaluate(point)
                    if got != want:
                        return False, f"fitness {got!r} != expected {want!r} for {point.alleles}"
            return True, ""

        def error_is_per_request() -> tuple[bool, str]:
            points = _scripted_points(space, 2)
            with open_session(cmd("error-first"), space) as session:
                try:
                    session.evaluate(points[0])
                    return False, "error response did not surface"
                except RemoteEvaluationError:
                    pass
                got = session.evaluate(points[1])
                want = expected.evaluate(points[1])
                if got != want:
                    return False, "session unusable after one error response"
            return True, ""

        run_case("handshake_and_scored_requests", scored_sequential)
        run_case("out_of_order_responses_matched_by_id", out_of_order)
        run_case("error_response_fails_only_its_request", error_is_per_request)
        run_case("malformed_line_rejected",
                 lambda: _expect_session_error(cmd("garbage"), space, "malformed response"))
        run_case("unknown_id_rejected",
                 lambda: _expect_session_error(cmd("wrong-id"), space, "does not match"))
        run_case("protocol_mismatch_rejected",
                 lambda: _expect_session_error(cmd("wrong-protocol"), space, "protocol mismatch"))
        run_case("two_objects_one_line_rejected",
                 lambda: _expect_session_error(cmd("two-objects"), space, "malformed response"))
    return cases


def default_selftest_space_for_foreign() -> SearchSpace:
    from .landscapes import default_cnn_space

    return default_cnn_space()


def _foreign_battery(space: SearchSpace, command: list[str] | str) -> list[SelftestCase]:
    cases: list[SelftestCase] = []

    def run_case(name: str, fn) -> None:
        try:
            ok, detail = fn()
        except (SessionError, EvaluationError, OSError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        cases.append(SelftestCase(name, ok, detail))

    def handshake_only() -> tuple[bool, str]:
        with open_session(command, space):
            return True, ""

    def sequential() -> tuple[bool, str]:
        with open_session(command, space) as session:
            for point in _scripted_points(space, 3):
                session.evaluate(point)
        return True, ""

    def pipelined() -> tuple[bool, str]:
        config = ProtocolConfig(pipeline_window=3)
        points = _scripted_points(space, 3)
        with open_session(command, space, config) as session:
            ids = [session.submit(p) for p in points]
            for request_id in ids:
                session.wait(request_id)
        return True, ""

    run_case("handshake", handshake_only)
    run_case("sequential_requests_scored", sequential)
    run_case("pipelined_requests_matched_by_id", pipelined)
    return cases
