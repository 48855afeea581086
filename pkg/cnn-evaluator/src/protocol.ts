/**
 * Stdio protocol loop, version 1.
 *
 * One JSON object per line. The client opens with
 * {"hello": {"protocol": 1, "genes": [names...]}} and we answer
 * {"ready": {"protocol": 1}}. After that every request
 * {"id": n, "genes": {name: token}} gets exactly one response,
 * {"id": n, "fitness": x} or {"id": n, "error": reason}. stdout
 * carries protocol lines only; progress and diagnostics go to stderr.
 */

import * as readline from "node:readline";
import { Dataset } from "./data.js";
import { GENE_NAMES, SpecError, parseSpec } from "./spec.js";
import { TrainOptions, trainAndScore } from "./train.js";

export const PROTOCOL_VERSION = 1;

export interface ServeOptions {
  data: Dataset;
  train: TrainOptions;
  input?: NodeJS.ReadableStream;
  output?: NodeJS.WritableStream;
  log?: (line: string) => void;
}

function writeLine(output: NodeJS.WritableStream, doc: unknown): void {
  output.write(JSON.stringify(doc) + "\n");
}

function checkHandshake(line: string): void {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch {
    throw new Error(`expected a handshake line, got unparseable ${JSON.stringify(line.slice(0, 120))}`);
  }
  const hello = (doc as { hello?: unknown }).hello;
  if (typeof hello !== "object" || hello === null) {
    throw new Error("first line carried no hello object");
  }
  const { protocol, genes } = hello as { protocol?: unknown; genes?: unknown };
  if (protocol !== PROTOCOL_VERSION) {
    throw new Error(`protocol mismatch: client speaks ${protocol}, this evaluator speaks ${PROTOCOL_VERSION}`);
  }
  if (!Array.isArray(genes)) {
    throw new Error("hello.genes must list the gene names");
  }
  const offered = [...genes].sort();
  const expected = [...GENE_NAMES].sort();
  if (offered.length !== expected.length ||
      offered.some((name, i) => name !== expected[i])) {
    throw new Error(
      `gene mismatch: client searches [${genes.join(", ")}], ` +
      `this evaluator scores [${GENE_NAMES.join(", ")}]`);
  }
}

/** Serve until stdin closes. Throws on anything that breaks the
 * session (bad handshake, unparseable request line); the caller turns
 * that into a nonzero exit. */
export async function serveStdio(options: ServeOptions): Promise<void> {
  const input = options.input ?? process.stdin;
  const output = options.output ?? process.stdout;
  const log = options.log ?? ((line: string) => process.stderr.write(line + "\n"));

  // Nothing in this process may print to stdout except the protocol;
  // libraries that console.log are rerouted wholesale.
  console.log = (...parts: unknown[]) => console.error(...parts);

  const lines = readline.createInterface({ input, crlfDelay: Infinity });
  let shaken = false;
  for await (const line of lines) {
    if (line.trim() === "") {
      continue;
    }
    if (!shaken) {
      checkHandshake(line);
      shaken = true;
      writeLine(output, { ready: { protocol: PROTOCOL_VERSION } });
      log("handshake complete, serving");
      continue;
    }

    let doc: unknown;
    try {
      doc = JSON.parse(line);
    } catch {
      throw new Error(`unparseable request line: ${JSON.stringify(line.slice(0, 120))}`);
    }
    const { id, genes } = doc as { id?: unknown; genes?: unknown };
    if (typeof id !== "number" || !Number.isInteger(id)) {
      throw new Error(`request without a usable id: ${JSON.stringify(line.slice(0, 120))}`);
    }
    if (typeof genes !== "object" || genes === null) {
      writeLine(output, { id, error: "request carries no genes object" });
      continue;
    }
    try {
      const spec = parseSpec(genes as Record<string, string>);
      log(`request ${id}: f1=${spec.f1} f2=${spec.f2} k=${spec.k} ` +
          `f3=${spec.f3} ${spec.optimizer} epochs=${spec.epochs}`);
      const started = Date.now();
      const fitness = await trainAndScore(spec, options.data, {
        ...options.train,
        onEpoch: (epoch, logs) => log(
          `request ${id} epoch ${epoch + 1}: loss=${logs.loss?.toFixed(4)} ` +
          `val_acc=${logs.val_acc?.toFixed(4)}`),
      });
      log(`request ${id}: fitness ${fitness.toFixed(4)} in ${((Date.now() - started) / 1000).toFixed(1)}s`);
      writeLine(output, { id, fitness });
    } catch (err) {
      if (err instanceof SpecError) {
        writeLine(output, { id, error: err.message });
      } else {
        const reason = err instanceof Error ? err.message : String(err);
        log(`request ${id} failed: ${reason}`);
        writeLine(output, { id, error: `training failed: ${reason}` });
      }
    }
  }
}
