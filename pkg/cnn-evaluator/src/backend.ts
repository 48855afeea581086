/**
 * Backend bootstrap.
 *
 * We train with the wasm backend: the plain JS cpu backend is far too
 * slow for 32x32x3 conv stacks. The wasm backend ships every kernel
 * this model needs except Conv2DBackpropFilter, the conv filter
 * gradient. Every training path asks for that kernel by name, both
 * the stock Conv2D gradient and the fused conv op's internal one (the
 * route layers take for activations like tanh), so we register an
 * implementation for the wasm backend composed from kernels it does
 * have. Stride-1 NHWC only, which is all the model ever uses
 * (downsampling is pooling).
 */

import { createRequire } from "node:module";
import * as path from "node:path";

const require = createRequire(import.meta.url);

// tfjs ships CJS; requiring it avoids the ESM interop pitfalls.
export const tf = require("@tensorflow/tfjs") as typeof import("@tensorflow/tfjs");
const wasm = require("@tensorflow/tfjs-backend-wasm") as
  typeof import("@tensorflow/tfjs-backend-wasm");

export type BackendKind = "wasm" | "cpu";

type Tensor4D = import("@tensorflow/tfjs").Tensor4D;
type TensorInfo = import("@tensorflow/tfjs").TensorInfo;

/** dW for a stride-1 'same'/'valid' conv, built from ops the wasm
 * backend does have: pad, transpose and conv2d. Treating channels as
 * the batch and the upstream gradient as the filter turns the filter
 * gradient into one more convolution. */
export function conv2dFilterGradStride1(
  x: Tensor4D, dy: Tensor4D, kernelH: number, kernelW: number,
  pad: "same" | "valid",
): Tensor4D {
  return tf.tidy(() => {
    let padded = x;
    if (pad === "same") {
      const top = (kernelH - 1) >> 1;
      const left = (kernelW - 1) >> 1;
      padded = tf.pad(x, [
        [0, 0], [top, kernelH - 1 - top], [left, kernelW - 1 - left], [0, 0],
      ]);
    }
    const channelsAsBatch = tf.transpose(padded, [3, 1, 2, 0]);
    const gradAsFilter = tf.transpose(dy, [1, 2, 0, 3]);
    const dw = tf.conv2d(channelsAsBatch as Tensor4D,
                         gradAsFilter as Tensor4D, 1, "valid");
    return tf.transpose(dw, [1, 2, 0, 3]) as Tensor4D;
  });
}

function asTensor4d(info: TensorInfo): Tensor4D {
  // Saved-tensor gradients hand the kernel real Tensors; wrap anything
  // else so the composition can run ordinary ops on it.
  return (info instanceof tf.Tensor
    ? info
    : tf.engine().makeTensorFromTensorInfo(info)) as Tensor4D;
}

function registerFilterGradKernel(): void {
  if (tf.getKernel("Conv2DBackpropFilter", "wasm") != null) {
    return;
  }
  tf.registerKernel({
    kernelName: "Conv2DBackpropFilter",
    backendName: "wasm",
    kernelFunc: ({ inputs, attrs }) => {
      const { strides, pad, dataFormat, filterShape } = attrs as unknown as {
        strides: number | [number, number];
        pad: "same" | "valid" | number;
        dataFormat: string;
        filterShape: [number, number, number, number];
      };
      const strideOne = strides === 1 ||
        (Array.isArray(strides) && strides[0] === 1 && strides[1] === 1);
      if (dataFormat !== "NHWC" || !strideOne ||
          (pad !== "same" && pad !== "valid")) {
        throw new Error(
          `conv filter gradient supports stride-1 NHWC 'same'/'valid' only, ` +
          `got strides=${strides} pad=${pad} format=${dataFormat}`);
      }
      const x = asTensor4d(inputs.x as TensorInfo);
      const dy = asTensor4d(inputs.dy as TensorInfo);
      return conv2dFilterGradStride1(x, dy, filterShape[0], filterShape[1], pad);
    },
  });
}

let initialized: BackendKind | null = null;

/** Select and warm up a backend. Call once before any tensor work. */
export async function initBackend(kind: BackendKind = "wasm"): Promise<void> {
  if (initialized === kind) {
    return;
  }
  if (initialized !== null) {
    throw new Error(`backend already initialized as ${initialized}`);
  }
  if (kind === "wasm") {
    const wasmDist = path.join(
      path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm")),
    ) + path.sep;
    wasm.setWasmPaths(wasmDist);
    registerFilterGradKernel();
    await tf.setBackend("wasm");
  } else {
    await tf.setBackend("cpu");
  }
  await tf.ready();
  initialized = kind;
}
