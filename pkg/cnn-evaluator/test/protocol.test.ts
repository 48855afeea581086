import { spawn, spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import { PassThrough } from "node:stream";
import { fileURLToPath } from "node:url";
import { beforeAll, describe, expect, it } from "vitest";
import { initBackend } from "../src/backend.js";
import { syntheticDataset } from "../src/data.js";
import { PROTOCOL_VERSION, serveStdio } from "../src/protocol.js";
import { GENE_NAMES } from "../src/spec.js";

const ROOT = fileURLToPath(new URL("..", import.meta.url));
const DIST_MAIN = path.join(ROOT, "dist", "main.js");

const HELLO = JSON.stringify({
  hello: { protocol: PROTOCOL_VERSION, genes: [...GENE_NAMES] },
});
const TINY = {
  f1: "4", f2: "4", k: "3", a1: "relu", a2: "relu",
  d1: "0.2", d2: "0.2", f3: "16", optimizer: "adam", epochs: "1",
};

interface Session {
  done: Promise<void>;
  responses: () => Array<Record<string, unknown>>;
}

interface RunResult {
  status: number | null;
  stdout: string;
  stderr: string;
}

/** spawnSync would block the vitest worker's event loop for minutes;
 * the slow subprocess tests use this instead. */
function run(command: string, args: string[], timeoutMs: number): Promise<RunResult> {
  return new Promise((resolve, reject) => {
    const child = spawn(command, args, { stdio: ["ignore", "pipe", "pipe"] });
    let stdout = "";
    let stderr = "";
    const timer = setTimeout(() => {
      child.kill("SIGKILL");
      reject(new Error(`${command} timed out after ${timeoutMs} ms`));
    }, timeoutMs);
    child.stdout.on("data", (chunk: Buffer) => { stdout += chunk; });
    child.stderr.on("data", (chunk: Buffer) => { stderr += chunk; });
    child.on("error", (err) => { clearTimeout(timer); reject(err); });
    child.on("close", (status) => { clearTimeout(timer); resolve({ status, stdout, stderr }); });
  });
}

function startSession(lines: string[]): Session {
  const input = new PassThrough();
  const output = new PassThrough();
  const chunks: Buffer[] = [];
  output.on("data", (chunk) => chunks.push(Buffer.from(chunk)));
  const done = serveStdio({
    data: syntheticDataset({ trainN: 32, valN: 16, testN: 16 }, 2),
    train: { epochCap: 1, seed: 1 },
    input,
    output,
    log: () => {},
  });
  for (const line of lines) {
    input.write(line + "\n");
  }
  input.end();
  const responses = () =>
    Buffer.concat(chunks).toString("utf8").split("\n").filter(Boolean)
      .map((line) => JSON.parse(line) as Record<string, unknown>);
  return { done, responses };
}

async function runSession(lines: string[]): Promise<Array<Record<string, unknown>>> {
  const session = startSession(lines);
  await session.done;
  return session.responses();
}

beforeAll(async () => {
  await initBackend("wasm");
});

describe("serveStdio", () => {
  it("answers the handshake and scores a request", async () => {
    const replies = await runSession([
      HELLO,
      JSON.stringify({ id: 1, genes: TINY }),
    ]);
    expect(replies[0]).toEqual({ ready: { protocol: PROTOCOL_VERSION } });
    expect(replies[1].id).toBe(1);
    const fitness = replies[1].fitness as number;
    expect(fitness).toBeGreaterThanOrEqual(0);
    expect(fitness).toBeLessThanOrEqual(1);
  });

  it("echoes the request id untouched", async () => {
    const replies = await runSession([
      HELLO,
      JSON.stringify({ id: 41, genes: TINY }),
    ]);
    expect(replies[1].id).toBe(41);
  });

  it("a bad spec fails only its own request", async () => {
    const replies = await runSession([
      HELLO,
      JSON.stringify({ id: 1, genes: { ...TINY, a1: "swish" } }),
      JSON.stringify({ id: 2, genes: TINY }),
    ]);
    expect(replies[1].id).toBe(1);
    expect(replies[1].error).toContain('unknown token "swish"');
    expect(replies[1].fitness).toBeUndefined();
    expect(replies[2].id).toBe(2);
    expect(typeof replies[2].fitness).toBe("number");
  });

  it("names the missing gene in the error", async () => {
    const { epochs: _dropped, ...partial } = TINY;
    const replies = await runSession([
      HELLO,
      JSON.stringify({ id: 9, genes: partial }),
    ]);
    expect(replies[1]).toEqual({ id: 9, error: "missing gene: epochs" });
  });

  it("rejects a request without a genes object, keeping the session", async () => {
    const replies = await runSession([
      HELLO,
      JSON.stringify({ id: 5 }),
      JSON.stringify({ id: 6, genes: TINY }),
    ]);
    expect(replies[1]).toEqual({ id: 5, error: "request carries no genes object" });
    expect(typeof replies[2].fitness).toBe("number");
  });

  it("skips blank lines", async () => {
    const replies = await runSession(["", HELLO, "   "]);
    expect(replies).toEqual([{ ready: { protocol: PROTOCOL_VERSION } }]);
  });

  it("refuses a client speaking another protocol version", async () => {
    const session = startSession([
      JSON.stringify({ hello: { protocol: 2, genes: [...GENE_NAMES] } }),
    ]);
    await expect(session.done).rejects.toThrow(/protocol mismatch/);
  });

  it("refuses a client searching different genes", async () => {
    const session = startSession([
      JSON.stringify({ hello: { protocol: PROTOCOL_VERSION, genes: ["f1", "f2"] } }),
    ]);
    await expect(session.done).rejects.toThrow(/gene mismatch/);
  });

  it("requires the first line to be a hello", async () => {
    const session = startSession([JSON.stringify({ id: 1, genes: TINY })]);
    await expect(session.done).rejects.toThrow(/no hello object/);
  });

  it("dies on an unparseable request line", async () => {
    const session = startSession([HELLO, "this is not json"]);
    await expect(session.done).rejects.toThrow(/unparseable request line/);
  });

  it("dies on a request without a usable id", async () => {
    const session = startSession([
      HELLO,
      JSON.stringify({ id: "seven", genes: TINY }),
    ]);
    await expect(session.done).rejects.toThrow(/usable id/);
  });
});

describe("built worker", () => {
  it("compiles to dist/main.js", () => {
    expect(fs.existsSync(DIST_MAIN)).toBe(true);
  });

  it("exits nonzero when cifar100 mode lacks a data directory", () => {
    const result = spawnSync(process.execPath, [DIST_MAIN, "--mode", "cifar100"], {
      encoding: "utf8", timeout: 60_000,
    });
    expect(result.status).toBe(1);
    expect(result.stderr).toContain("needs --data");
  });

  it("passes the coordinator's foreign-evaluator conformance battery", async () => {
    const workerCmd = [
      process.execPath, DIST_MAIN,
      "--mode", "synthetic",
      "--train-n", "96", "--val-n", "32", "--test-n", "32",
      "--epoch-cap", "1", "--seed", "5", "--deterministic",
    ].join(" ");
    const result = await run(
      "python3", ["-m", "memetic", "proto", "selftest", "--cmd", workerCmd],
      570_000);
    expect(result.stdout).toContain("ok   handshake");
    expect(result.stdout).toContain("ok   sequential_requests_scored");
    expect(result.stdout).toContain("ok   pipelined_requests_matched_by_id");
    expect(result.stdout).toContain("3 case(s) passed");
    expect(result.status).toBe(0);
  });

  it("round-trips a 2000/500/500 two-epoch evaluation through the coordinator", async () => {
    const workerCmd = [
      process.execPath, DIST_MAIN,
      "--mode", "synthetic",
      "--train-n", "2000", "--val-n", "500", "--test-n", "500",
      "--epoch-cap", "2", "--seed", "5", "--deterministic",
    ].join(" ");
    const script = [
      "import json, sys",
      "from memetic.extproto import open_session",
      "from memetic.landscapes import default_cnn_space",
      "from memetic.space import Chromosome",
      "space = default_cnn_space()",
      "want = {'f1': '32', 'f2': '64', 'k': '3', 'a1': 'relu', 'a2': 'relu',",
      "        'd1': '0.2', 'd2': '0.2', 'f3': '256', 'optimizer': 'adam',",
      "        'epochs': '10'}",
      "alleles = tuple(g.domain.index(want[g.name]) for g in space.genes)",
      "with open_session(sys.argv[1], space) as session:",
      "    fitness = session.evaluate(Chromosome(alleles))",
      "print(json.dumps({'fitness': fitness}))",
    ].join("\n");
    const result = await run("python3", ["-c", script, workerCmd], 570_000);
    expect(result.status).toBe(0);
    const lines = result.stdout.trim().split("\n");
    const reply = JSON.parse(lines[lines.length - 1]) as { fitness: number };
    expect(reply.fitness).toBeGreaterThan(0.01);
    expect(reply.fitness).toBeLessThanOrEqual(1);
  });
});
