/**
 * Model construction: two conv blocks with pooling, then a dense
 * head, closed by a 100-way softmax. 32x32x3 input throughout.
 */

import { tf } from "./backend.js";
import { CnnSpec } from "./spec.js";

export const INPUT_SHAPE: [number, number, number] = [32, 32, 3];
export const NUM_CLASSES = 100;

export interface BuildOptions {
  /** Seed layer initializers and dropout masks for repeatable runs. */
  seed?: number;
}

export function buildModel(
  spec: CnnSpec, options: BuildOptions = {},
): import("@tensorflow/tfjs").Sequential {
  const { seed } = options;
  let nextSeed = seed;
  const take = () => (nextSeed === undefined ? undefined : nextSeed++);
  const init = () =>
    seed === undefined ? undefined : tf.initializers.glorotUniform({ seed: take()! });

  const model = tf.sequential();
  model.add(tf.layers.conv2d({
    inputShape: INPUT_SHAPE,
    filters: spec.f1, kernelSize: spec.k, activation: spec.a1,
    padding: "same", kernelInitializer: init(),
  }));
  model.add(tf.layers.conv2d({
    filters: spec.f1, kernelSize: spec.k, activation: spec.a1,
    padding: "same", kernelInitializer: init(),
  }));
  model.add(tf.layers.maxPooling2d({ poolSize: [2, 2] }));
  model.add(tf.layers.conv2d({
    filters: spec.f2, kernelSize: spec.k, activation: spec.a2,
    padding: "same", kernelInitializer: init(),
  }));
  model.add(tf.layers.conv2d({
    filters: spec.f2, kernelSize: spec.k, activation: spec.a2,
    padding: "same", kernelInitializer: init(),
  }));
  model.add(tf.layers.maxPooling2d({ poolSize: [2, 2] }));
  model.add(tf.layers.flatten());
  model.add(tf.layers.dropout({ rate: spec.d1, seed: take() }));
  model.add(tf.layers.dense({
    units: spec.f3, activation: spec.a2, kernelInitializer: init(),
  }));
  model.add(tf.layers.dropout({ rate: spec.d2, seed: take() }));
  model.add(tf.layers.dense({
    units: NUM_CLASSES, activation: "softmax", kernelInitializer: init(),
  }));

  model.compile({
    loss: "categoricalCrossentropy",
    optimizer: spec.optimizer,
    metrics: ["accuracy"],
  });
  return model;
}

/** Width of the flatten layer: two 2x2 poolings take 32 to 8, so the
 * flattened vector is 8 * 8 * f2 with 'same' conv padding. */
export function flattenWidth(spec: CnnSpec): number {
  return 8 * 8 * spec.f2;
}
