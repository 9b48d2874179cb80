/**
 * Frame encoders producing a (gridH, gridW, dims) float32 feature tensor
 * per image.
 *
 * `grid` is the built-in backend: per-cell color/contrast statistics pushed
 * through a fixed random projection. It needs no checkpoint, is fully
 * deterministic (the projection weights derive from a splitmix64 stream with
 * a constant seed), and exists so the clustering core can be driven end to
 * end by any latent source. `tfjs` loads a converted TensorFlow.js graph
 * model from a checkpoint directory and taps its final feature map; use it
 * to export features from a real pretrained image encoder.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import type { RgbImage } from "./png";

export interface EncoderConfig {
  model: string; // "grid" | "tfjs"
  checkpoint?: string;
  gridH: number;
  gridW: number;
  dims: number;
  device: string;
}

export const DEFAULT_CONFIG: EncoderConfig = {
  model: "grid",
  gridH: 64,
  gridW: 64,
  dims: 256,
  device: "cpu",
};

export interface FrameEncoder {
  encode(image: RgbImage): Promise<Float32Array>;
}

const MASK64 = (1n << 64n) - 1n;

/** splitmix64; the same stream the core's PRNG seeds from. */
function* splitmix64(seed: bigint): Generator<bigint> {
  let state = seed & MASK64;
  while (true) {
    state = (state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    yield (z ^ (z >> 31n)) & MASK64;
  }
}

/** Uniform in [-1, 1) from the top 53 bits. */
function nextSigned(stream: Generator<bigint>): number {
  let word = stream.next().value as bigint;
  return (Number(word >> 11n) / 9007199254740992) * 2 - 1;
}

const STATS = 8; // per-cell statistics feeding the projection
const PROJECTION_SEED = 0x5eed5eedn;

export class GridEncoder implements FrameEncoder {
  private readonly gridH: number;
  private readonly gridW: number;
  private readonly dims: number;
  private readonly weights: Float64Array; // dims x STATS
  private readonly bias: Float64Array;

  constructor(config: EncoderConfig) {
    this.gridH = config.gridH;
    this.gridW = config.gridW;
    this.dims = config.dims;
    let stream = splitmix64(PROJECTION_SEED);
    this.weights = new Float64Array(this.dims * STATS);
    for (let i = 0; i < this.weights.length; i++) {
      this.weights[i] = nextSigned(stream);
    }
    this.bias = new Float64Array(this.dims);
    for (let i = 0; i < this.dims; i++) {
      this.bias[i] = 0.1 * nextSigned(stream);
    }
  }

  async encode(image: RgbImage): Promise<Float32Array> {
    let { gridH, gridW, dims } = this;
    let out = new Float32Array(gridH * gridW * dims);
    let stats = new Float64Array(STATS);
    for (let cy = 0; cy < gridH; cy++) {
      let y0 = Math.floor((cy * image.height) / gridH);
      let y1 = Math.max(y0 + 1, Math.floor(((cy + 1) * image.height) / gridH));
      for (let cx = 0; cx < gridW; cx++) {
        let x0 = Math.floor((cx * image.width) / gridW);
        let x1 = Math.max(x0 + 1, Math.floor(((cx + 1) * image.width) / gridW));
        this.cellStats(image, y0, y1, x0, x1, stats);
        let base = (cy * gridW + cx) * dims;
        for (let d = 0; d < dims; d++) {
          let acc = this.bias[d];
          for (let s = 0; s < STATS; s++) {
            acc += this.weights[d * STATS + s] * stats[s];
          }
          out[base + d] = Math.fround(acc);
        }
      }
    }
    return out;
  }

  private cellStats(
    image: RgbImage,
    y0: number,
    y1: number,
    x0: number,
    x1: number,
    stats: Float64Array,
  ): void {
    let sum = [0, 0, 0];
    let sumSq = [0, 0, 0];
    let lumaMin = 1.0;
    let lumaMax = 0.0;
    let count = (y1 - y0) * (x1 - x0);
    for (let y = y0; y < y1; y++) {
      for (let x = x0; x < x1; x++) {
        let o = (y * image.width + x) * 3;
        let luma = 0;
        for (let c = 0; c < 3; c++) {
          let v = image.pixels[o + c] / 255;
          sum[c] += v;
          sumSq[c] += v * v;
          luma += v / 3;
        }
        if (luma < lumaMin) lumaMin = luma;
        if (luma > lumaMax) lumaMax = luma;
      }
    }
    for (let c = 0; c < 3; c++) {
      let mean = sum[c] / count;
      stats[c] = mean;
      stats[3 + c] = Math.sqrt(Math.max(sumSq[c] / count - mean * mean, 0));
    }
    stats[6] = (stats[0] + stats[1] + stats[2]) / 3;
    stats[7] = lumaMax - lumaMin;
  }
}

/**
 * TensorFlow.js graph-model backend. The checkpoint directory must hold a
 * converted model (model.json + weight shards) that maps a normalized RGB
 * input batch to a (1, gridH, gridW, dims) or (1, dims, gridH, gridW)
 * feature map, e.g. an exported image-encoder trunk.
 */
export class TfjsEncoder implements FrameEncoder {
  private readonly config: EncoderConfig;
  private model: any = null;

  constructor(config: EncoderConfig) {
    if (!config.checkpoint) {
      throw new CheckpointError("tfjs backend requires --checkpoint");
    }
    if (!fs.existsSync(path.join(config.checkpoint, "model.json"))) {
      throw new CheckpointError(`checkpoint not found: ${config.checkpoint}`);
    }
    this.config = config;
  }

  private async load(tf: any) {
    if (this.model !== null) return;
    let dir = this.config.checkpoint!;
    let modelJson = JSON.parse(fs.readFileSync(path.join(dir, "model.json"), "utf8"));
    let weightSpecs: any[] = [];
    let shards: Buffer[] = [];
    for (let group of modelJson.weightsManifest ?? []) {
      weightSpecs.push(...group.weights);
      for (let shard of group.paths) {
        shards.push(fs.readFileSync(path.join(dir, shard)));
      }
    }
    let weightData = Buffer.concat(shards);
    this.model = await tf.loadGraphModel({
      load: async () => ({
        modelTopology: modelJson.modelTopology,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        convertedBy: modelJson.convertedBy,
        weightSpecs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      }),
    });
  }

  async encode(image: RgbImage): Promise<Float32Array> {
    let tf: any = await import("@tensorflow/tfjs");
    await this.load(tf);
    let { gridH, gridW, dims } = this.config;
    let data = tf.tidy(() => {
      let input = tf.tensor3d(new Uint8Array(image.pixels), [image.height, image.width, 3]);
      let resized = tf.image.resizeBilinear(input.toFloat().div(255), [gridH * 16, gridW * 16]);
      let output = this.model.predict(resized.expandDims(0));
      if (output.shape.length === 4 && output.shape[1] === dims && output.shape[2] === gridH) {
        output = output.transpose([0, 2, 3, 1]); // channels-first export
      }
      return output.reshape([gridH, gridW, dims]).dataSync();
    });
    return Float32Array.from(data);
  }
}

export class CheckpointError extends Error {}

export function makeEncoder(config: EncoderConfig): FrameEncoder {
  if (config.model === "grid") return new GridEncoder(config);
  if (config.model === "tfjs") return new TfjsEncoder(config);
  throw new CheckpointError(`unknown model backend ${config.model}`);
}
