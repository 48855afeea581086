/**
 * Hyperparameter assignment for one model, parsed from the gene token
 * map a scoring request carries.
 */

export const GENE_NAMES = [
  "f1", "f2", "k", "a1", "a2", "d1", "d2", "f3", "optimizer", "epochs",
] as const;

export type GeneName = (typeof GENE_NAMES)[number];

export const ACTIVATIONS = ["relu", "elu", "tanh"] as const;
export const OPTIMIZERS = ["sgd", "adam", "rmsprop"] as const;

export type Activation = (typeof ACTIVATIONS)[number];
export type OptimizerName = (typeof OPTIMIZERS)[number];

export interface CnnSpec {
  /** filters in the first conv block */
  f1: number;
  /** filters in the second conv block */
  f2: number;
  /** square kernel size for every conv layer */
  k: number;
  /** activation for the first conv block */
  a1: Activation;
  /** activation for the second conv block and the dense layer */
  a2: Activation;
  /** dropout rate after flatten */
  d1: number;
  /** dropout rate after the dense layer */
  d2: number;
  /** units in the dense layer */
  f3: number;
  optimizer: OptimizerName;
  epochs: number;
}

export class SpecError extends Error {}

function positiveInt(tokens: Record<string, string>, name: GeneName): number {
  const token = tokens[name];
  if (!/^[0-9]+$/.test(token)) {
    throw new SpecError(`gene ${name}: expected a positive integer, got ${JSON.stringify(token)}`);
  }
  const value = Number(token);
  if (value <= 0) {
    throw new SpecError(`gene ${name}: must be positive, got ${token}`);
  }
  return value;
}

function dropoutRate(tokens: Record<string, string>, name: GeneName): number {
  const token = tokens[name];
  const value = Number(token);
  if (!/^[0-9.]+$/.test(token) || Number.isNaN(value)) {
    throw new SpecError(`gene ${name}: expected a number, got ${JSON.stringify(token)}`);
  }
  if (value < 0 || value >= 1) {
    throw new SpecError(`gene ${name}: dropout rate must be in [0, 1), got ${token}`);
  }
  return value;
}

function oneOf<T extends string>(
  tokens: Record<string, string>, name: GeneName, allowed: readonly T[],
): T {
  const token = tokens[name];
  if (!(allowed as readonly string[]).includes(token)) {
    throw new SpecError(
      `gene ${name}: unknown token ${JSON.stringify(token)}, expected one of ${allowed.join(", ")}`);
  }
  return token as T;
}

/** Parse a request's gene map. Every gene must be present, no extras,
 * every token within its type's constraints. */
export function parseSpec(tokens: Record<string, string>): CnnSpec {
  for (const name of GENE_NAMES) {
    if (typeof tokens[name] !== "string") {
      throw new SpecError(`missing gene: ${name}`);
    }
  }
  for (const name of Object.keys(tokens)) {
    if (!(GENE_NAMES as readonly string[]).includes(name)) {
      throw new SpecError(`unknown gene: ${name}`);
    }
  }
  return {
    f1: positiveInt(tokens, "f1"),
    f2: positiveInt(tokens, "f2"),
    k: positiveInt(tokens, "k"),
    a1: oneOf(tokens, "a1", ACTIVATIONS),
    a2: oneOf(tokens, "a2", ACTIVATIONS),
    d1: dropoutRate(tokens, "d1"),
    d2: dropoutRate(tokens, "d2"),
    f3: positiveInt(tokens, "f3"),
    optimizer: oneOf(tokens, "optimizer", OPTIMIZERS),
    epochs: positiveInt(tokens, "epochs"),
  };
}
