/**
 * Worker entry point. Spawned by an optimizer (or run by hand):
 *
 *   node dist/main.js --mode synthetic --train-n 2000 --val-n 500 --test-n 500
 *   node dist/main.js --mode cifar100 --data /path/to/cifar-100-binary
 *
 * Speaks the scoring protocol on stdin/stdout; everything else goes
 * to stderr.
 */

import { parseArgs } from "node:util";
import { BackendKind, initBackend } from "./backend.js";
import { DataError, Dataset, loadCifarDataset, syntheticDataset } from "./data.js";
import { serveStdio } from "./protocol.js";

function intFlag(value: string | undefined, fallback: number, name: string): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isInteger(parsed) || parsed < 0) {
    throw new DataError(`--${name} must be a non-negative integer, got ${value}`);
  }
  return parsed;
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      mode: { type: "string", default: "synthetic" },
      data: { type: "string" },
      "train-n": { type: "string" },
      "val-n": { type: "string" },
      "test-n": { type: "string" },
      "batch-size": { type: "string" },
      "epoch-cap": { type: "string" },
      seed: { type: "string" },
      deterministic: { type: "boolean", default: false },
      backend: { type: "string", default: "wasm" },
    },
  });

  const sizes = {
    trainN: intFlag(values["train-n"], 2000, "train-n"),
    valN: intFlag(values["val-n"], 500, "val-n"),
    testN: intFlag(values["test-n"], 500, "test-n"),
  };
  const seed = intFlag(values.seed, 0, "seed");
  const backend = values.backend as BackendKind;
  if (backend !== "wasm" && backend !== "cpu") {
    throw new DataError(`--backend must be wasm or cpu, got ${values.backend}`);
  }

  let data: Dataset;
  if (values.mode === "cifar100") {
    if (!values.data) {
      throw new DataError("--mode cifar100 needs --data DIR pointing at the binary release");
    }
    data = loadCifarDataset(values.data, sizes);
  } else if (values.mode === "synthetic") {
    data = syntheticDataset(sizes, seed);
  } else {
    throw new DataError(`--mode must be synthetic or cifar100, got ${values.mode}`);
  }

  await initBackend(backend);
  process.stderr.write(
    `cnn-evaluator ready: mode=${values.mode} train=${sizes.trainN} ` +
    `val=${sizes.valN} test=${sizes.testN} backend=${backend}\n`);

  await serveStdio({
    data,
    train: {
      batchSize: intFlag(values["batch-size"], 64, "batch-size"),
      epochCap: intFlag(values["epoch-cap"], 0, "epoch-cap"),
      seed: values.deterministic ? seed : undefined,
    },
  });
}

main().catch((err: unknown) => {
  const reason = err instanceof Error ? err.message : String(err);
  process.stderr.write(`fatal: ${reason}\n`);
  process.exit(1);
});
