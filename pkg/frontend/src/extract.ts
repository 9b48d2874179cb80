/**
 * Walk a frame directory, encode every image, and write one feature tensor
 * per frame (named after the source file) in the core's container format.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { makeEncoder, type EncoderConfig } from "./encoder";
import { encodeFeatureTensor } from "./npy";
import { decodePngToRgb } from "./png";

export class FrameError extends Error {}

export interface ExtractResult {
  written: string[];
}

export async function extract(
  framesDir: string,
  outDir: string,
  config: EncoderConfig,
): Promise<ExtractResult> {
  if (!fs.existsSync(framesDir) || !fs.statSync(framesDir).isDirectory()) {
    throw new FrameError(`frame directory not found: ${framesDir}`);
  }
  let names = fs
    .readdirSync(framesDir)
    .filter((n: string) => n.toLowerCase().endsWith(".png"))
    .sort();
  if (names.length === 0) {
    throw new FrameError(`no PNG frames in ${framesDir}`);
  }

  let encoder = makeEncoder(config);
  fs.mkdirSync(outDir, { recursive: true });

  let written: string[] = [];
  for (let name of names) {
    let framePath = path.join(framesDir, name);
    let image;
    try {
      image = decodePngToRgb(fs.readFileSync(framePath));
    } catch (err) {
      throw new FrameError(`cannot decode frame ${framePath}: ${(err as Error).message}`);
    }
    let features = await encoder.encode(image);
    let blob = encodeFeatureTensor(features, [config.gridH, config.gridW, config.dims]);
    let outName = name.replace(/\.png$/i, ".npy");
    fs.writeFileSync(path.join(outDir, outName), blob);
    written.push(outName);
  }
  return { written };
}
