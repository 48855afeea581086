/**
 * Dataset loading.
 *
 * Two sources, one shape: the CIFAR-100 binary release on disk, or a
 * generated stand-in with the same record layout whose classes are
 * visibly structured (a class-keyed color cast plus a bright patch at
 * a class-keyed position), so a small conv net can learn it in a
 * couple of epochs. The generator can also write its records in the
 * CIFAR binary file format, which keeps the file-parsing path honest
 * in tests and demos without the real download.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export const IMAGE_PIXELS = 32 * 32 * 3;
/** CIFAR binary record: coarse label byte, fine label byte, pixels. */
export const RECORD_BYTES = 2 + IMAGE_PIXELS;
export const TRAIN_FILE = "train.bin";
export const TEST_FILE = "test.bin";

export interface Example {
  /** channel-last float pixels in [0, 1], length 32*32*3 */
  pixels: Float32Array;
  /** fine label, 0..99 */
  label: number;
}

export interface Dataset {
  train: Example[];
  val: Example[];
  test: Example[];
}

export interface SubsetSizes {
  trainN: number;
  valN: number;
  testN: number;
}

export class DataError extends Error {}

/** Tiny deterministic PRNG (mulberry32) so generated datasets and
 * shuffles are reproducible from a seed. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffleInPlace<T>(items: T[], rng: () => number): void {
  for (let i = items.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [items[i], items[j]] = [items[j], items[i]];
  }
}

/** The CIFAR binary layout stores each channel as a 1024-byte plane;
 * models want channel-last interleaved floats. */
function planarToExample(record: Uint8Array): Example {
  const pixels = new Float32Array(IMAGE_PIXELS);
  const planes = record.subarray(2);
  for (let row = 0; row < 32; row++) {
    for (let col = 0; col < 32; col++) {
      const p = row * 32 + col;
      const out = p * 3;
      pixels[out] = planes[p] / 255;
      pixels[out + 1] = planes[1024 + p] / 255;
      pixels[out + 2] = planes[2048 + p] / 255;
    }
  }
  return { pixels, label: record[1] };
}

function readRecords(file: string, count: number, offset: number): Example[] {
  let stat: fs.Stats;
  try {
    stat = fs.statSync(file);
  } catch {
    throw new DataError(
      `dataset file missing: ${file}; download the CIFAR-100 binary ` +
      `release (cifar-100-binary.tar.gz from the CIFAR page) and unpack ` +
      `train.bin and test.bin into the data directory`);
  }
  const available = Math.floor(stat.size / RECORD_BYTES);
  if (offset + count > available) {
    throw new DataError(
      `${file} holds ${available} records, need ${offset + count}`);
  }
  const buffer = Buffer.alloc(count * RECORD_BYTES);
  const fd = fs.openSync(file, "r");
  try {
    fs.readSync(fd, buffer, 0, buffer.length, offset * RECORD_BYTES);
  } finally {
    fs.closeSync(fd);
  }
  const examples: Example[] = [];
  for (let i = 0; i < count; i++) {
    examples.push(planarToExample(
      buffer.subarray(i * RECORD_BYTES, (i + 1) * RECORD_BYTES)));
  }
  return examples;
}

/** Load a subset: train and val are consecutive slices of the train
 * file (val is held out, never trained on), test comes from the test
 * file. */
export function loadCifarDataset(dir: string, sizes: SubsetSizes): Dataset {
  const trainFile = path.join(dir, TRAIN_FILE);
  const testFile = path.join(dir, TEST_FILE);
  return {
    train: readRecords(trainFile, sizes.trainN, 0),
    val: readRecords(trainFile, sizes.valN, sizes.trainN),
    test: readRecords(testFile, sizes.testN, 0),
  };
}

/** One generated image: class-keyed color cast everywhere, one bright
 * 8x8 patch whose grid cell is also class-keyed, uniform noise on top. */
export function synthesizeRecord(label: number, rng: () => number): Uint8Array {
  const record = new Uint8Array(RECORD_BYTES);
  record[0] = label % 20;
  record[1] = label;
  const cast = [(label * 53) % 97, (label * 29) % 97, (label * 71) % 97];
  const patchRow = (label % 4) * 8;
  const patchCol = (Math.floor(label / 4) % 4) * 8;
  for (let channel = 0; channel < 3; channel++) {
    const plane = 2 + channel * 1024;
    for (let row = 0; row < 32; row++) {
      for (let col = 0; col < 32; col++) {
        const inPatch = row >= patchRow && row < patchRow + 8 &&
          col >= patchCol && col < patchCol + 8;
        const base = cast[channel] + (inPatch ? 120 : 0);
        const noise = Math.floor(rng() * 60);
        record[plane + row * 32 + col] = Math.min(255, base + noise);
      }
    }
  }
  return record;
}

/** Write generated records in the CIFAR binary file layout, labels
 * cycling over all 100 classes. */
export function writeSyntheticCifarFiles(
  dir: string, trainRecords: number, testRecords: number, seed: number,
): void {
  fs.mkdirSync(dir, { recursive: true });
  const rng = makeRng(seed);
  const write = (file: string, count: number) => {
    const buffer = Buffer.alloc(count * RECORD_BYTES);
    for (let i = 0; i < count; i++) {
      buffer.set(synthesizeRecord(i % 100, rng), i * RECORD_BYTES);
    }
    fs.writeFileSync(path.join(dir, file), buffer);
  };
  write(TRAIN_FILE, trainRecords);
  write(TEST_FILE, testRecords);
}

/** Generate a dataset directly, skipping the file round-trip. */
export function syntheticDataset(sizes: SubsetSizes, seed: number): Dataset {
  const rng = makeRng(seed);
  const make = (count: number, offset: number): Example[] => {
    const examples: Example[] = [];
    for (let i = 0; i < count; i++) {
      examples.push(planarToExample(synthesizeRecord((offset + i) % 100, rng)));
    }
    return examples;
  };
  return {
    train: make(sizes.trainN, 0),
    val: make(sizes.valN, sizes.trainN),
    test: make(sizes.testN, sizes.trainN + sizes.valN),
  };
}
