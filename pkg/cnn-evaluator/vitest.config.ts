import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    globalSetup: ["test/global-setup.ts"],
    // A single test may train a model on the pure-wasm backend.
    testTimeout: 600_000,
    hookTimeout: 120_000,
    // tfjs state (backend choice, custom gradient) is per-process.
    pool: "forks",
    fileParallelism: false,
  },
});
