"""Bundled external evaluator: scores requests with the hashed landscape.

Speaks protocol version 1 on stdin/stdout, one JSON object per line.
Because the score is a pure function of seed and alleles, a client that
knows the seed can verify every response value exactly, which is what
the protocol selftest does.

The --mode flag selects deliberate misbehaviors so the client's error
handling can be exercised from the outside:

  normal          answer every request, in order
  reorder         buffer pairs of requests and answer each pair reversed
  error-first     answer the first request with an error response
  garbage         answer the first request with a non-JSON line
  wrong-id        answer with ids offset by 1000
  wrong-protocol  claim protocol 99 in the ready reply
  two-objects     put two JSON objects on the first response line
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .landscapes import HashedLandscape
from .space import SearchSpace, SpaceError, chromosome_from_tokens, space_from_doc

MODES = ("normal", "reorder", "error-first", "garbage", "wrong-id",
         "wrong-protocol", "two-objects")


def _emit(text: str) -> None:
    sys.stdout.write(text + "\n")
    sys.stdout.flush()


def _respond(payload: dict) -> None:
    _emit(json.dumps(payload))


def _fail(message: str, code: int) -> int:
    print(f"echo evaluator: {message}", file=sys.stderr)
    return code


def _read_handshake(space: SearchSpace, mode: str) -> int | None:
    line = sys.stdin.readline()
    if not line:
        return _fail("no handshake received", 3)
    try:
        hello = json.loads(line).get("hello")
    except (ValueError, AttributeError):
        return _fail(f"malformed handshake: {line!r}", 3)
    if not isinstance(hello, dict) or hello.get("protocol") != 1:
        return _fail(f"unsupported protocol in handshake: {line!r}", 3)
    names = hello.get("genes")
    if names != [g.name for g in space.genes]:
        return _fail(f"gene names do not match the configured space: {names!r}", 3)
    _respond({"ready": {"protocol": 99 if mode == "wrong-protocol" else 1}})
    return None


class _Responder:
    """Applies the selected misbehavior to otherwise normal responses."""

    def __init__(self, mode: str) -> None:
        self.mode = mode
        self.sent = 0
        self.buffer: list[dict] = []

    def send(self, payload: dict) -> None:
        first = self.sent == 0
        self.sent += 1
        if self.mode == "garbage" and first:
            _emit("this line is not a protocol message")
            return
        if self.mode == "two-objects" and first:
            _emit(json.dumps(payload) + " " + json.dumps(payload))
            return
        if self.mode == "wrong-id":
            payload = dict(payload, id=payload["id"] + 1000)
        if self.mode == "error-first" and first:
            payload = {"id": payload["id"], "error": "synthetic failure for testing"}
        if self.mode == "reorder":
            self.buffer.append(payload)
            if len(self.buffer) == 2:
                self.flush()
            return
        _respond(payload)

    def flush(self) -> None:
        for payload in reversed(self.buffer):
            _respond(payload)
        self.buffer.clear()


def serve(space: SearchSpace, seed: int, mode: str) -> int:
    landscape = HashedLandscape(seed)
    failure = _read_handshake(space, mode)
    if failure is not None:
        return failure
    responder = _Responder(mode)
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            request_id = request["id"]
        except (ValueError, TypeError, KeyError):
            # Salvage an id if one is visible so the failure can stay
            # scoped to this request; otherwise the stream is hopeless.
            match = re.search(r'"id"\s*:\s*(\d+)', line)
            if match:
                responder.send({"id": int(match.group(1)), "error": "malformed request"})
                continue
            return _fail(f"malformed request line: {line!r}", 2)
        try:
            chromosome = chromosome_from_tokens(space, request["genes"])
        except (SpaceError, KeyError, TypeError) as exc:
            responder.send({"id": request_id, "error": f"bad genes: {exc}"})
            continue
        responder.send({"id": request_id, "fitness": landscape.evaluate(chromosome)})
    responder.flush()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="memetic-echo-evaluator",
        description="Hashed-fitness evaluator for protocol testing.",
    )
    parser.add_argument("--space", required=True, help="path to a space JSON document")
    parser.add_argument("--seed", type=int, default=0, help="hash seed (default 0)")
    parser.add_argument("--mode", choices=MODES, default="normal")
    args = parser.parse_args(argv)
    try:
        with open(args.space, encoding="utf-8") as handle:
            space = space_from_doc(json.load(handle))
    except (OSError, ValueError) as exc:
        return _fail(f"cannot load space: {exc}", 2)
    return serve(space, args.seed, args.mode)


if __name__ == "__main__":
    sys.exit(main())
