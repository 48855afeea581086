/**
 * Fit one model for one spec and score it on the held-out test set.
 */

import { tf } from "./backend.js";
import { Dataset, Example, makeRng, shuffleInPlace } from "./data.js";
import { buildModel } from "./model.js";
import { IMAGE_PIXELS } from "./data.js";
import { CnnSpec } from "./spec.js";
import { NUM_CLASSES } from "./model.js";

export interface TrainOptions {
  batchSize?: number;
  /** Hard cap on epochs whatever the candidate asks for (0 = no cap). */
  epochCap?: number;
  /** Epochs without validation-accuracy improvement before stopping. */
  patience?: number;
  /** Seed initializers, dropout and the shuffle for repeatable runs. */
  seed?: number;
  /** Called per epoch with (epoch, logs); wire to stderr, never stdout. */
  onEpoch?: (epoch: number, logs: Record<string, number>) => void;
}

export class TrainingError extends Error {}

function toTensors(examples: Example[]): {
  xs: import("@tensorflow/tfjs").Tensor4D;
  ys: import("@tensorflow/tfjs").Tensor2D;
} {
  const n = examples.length;
  const pixels = new Float32Array(n * IMAGE_PIXELS);
  const labels = new Int32Array(n);
  examples.forEach((example, i) => {
    pixels.set(example.pixels, i * IMAGE_PIXELS);
    labels[i] = example.label;
  });
  const xs = tf.tensor4d(pixels, [n, 32, 32, 3]);
  const ys = tf.oneHot(tf.tensor1d(labels, "int32"), NUM_CLASSES) as
    import("@tensorflow/tfjs").Tensor2D;
  return { xs, ys };
}

/** Train with early stopping on validation accuracy, then return
 * top-1 accuracy on the test split. Throws TrainingError when the
 * loss goes non-finite instead of returning a fake fitness. */
export async function trainAndScore(
  spec: CnnSpec, data: Dataset, options: TrainOptions = {},
): Promise<number> {
  const batchSize = options.batchSize ?? 64;
  const patience = options.patience ?? 3;
  const epochs = options.epochCap && options.epochCap > 0
    ? Math.min(spec.epochs, options.epochCap)
    : spec.epochs;

  const train = [...data.train];
  if (options.seed !== undefined) {
    shuffleInPlace(train, makeRng(options.seed ^ 0x5eed));
  } else {
    shuffleInPlace(train, Math.random);
  }

  const model = buildModel(spec, { seed: options.seed });
  const { xs, ys } = toTensors(train);
  const { xs: valXs, ys: valYs } = toTensors(data.val);
  const { xs: testXs, ys: testYs } = toTensors(data.test);
  let sawBadLoss = false;
  try {
    const callbacks: import("@tensorflow/tfjs").CustomCallbackArgs = {
      onEpochEnd: async (epoch, logs) => {
        if (logs && !Number.isFinite(logs.loss)) {
          sawBadLoss = true;
          model.stopTraining = true;
        }
        if (logs && options.onEpoch) {
          options.onEpoch(epoch, logs as Record<string, number>);
        }
      },
    };
    await model.fit(xs, ys, {
      epochs,
      batchSize,
      validationData: [valXs, valYs],
      shuffle: false,
      verbose: 0,
      callbacks: [
        tf.callbacks.earlyStopping({ monitor: "val_acc", patience }),
        new tf.CustomCallback(callbacks),
      ],
    });
    if (sawBadLoss) {
      throw new TrainingError("training loss went non-finite");
    }
    const scores = model.evaluate(testXs, testYs, { batchSize }) as
      import("@tensorflow/tfjs").Scalar[];
    const accuracy = (await scores[1].data())[0];
    scores.forEach((s) => s.dispose());
    if (!Number.isFinite(accuracy) || accuracy < 0 || accuracy > 1) {
      throw new TrainingError(`test accuracy out of range: ${accuracy}`);
    }
    return accuracy;
  } finally {
    xs.dispose(); ys.dispose();
    valXs.dispose(); valYs.dispose();
    testXs.dispose(); testYs.dispose();
    model.dispose();
  }
}
