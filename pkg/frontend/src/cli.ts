#!/usr/bin/env node
/**
 * hrlc-extract: export per-frame image-encoder features for the clustering
 * core. Exit codes: 0 ok, 2 configuration/checkpoint error, 3 frame error.
 */

import { CheckpointError, DEFAULT_CONFIG, type EncoderConfig } from "./encoder";
import { extract, FrameError } from "./extract";

interface CliArgs {
  frames?: string;
  out?: string;
  config: EncoderConfig;
}

export function parseArgs(argv: string[]): CliArgs {
  let config: EncoderConfig = { ...DEFAULT_CONFIG };
  let positional: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    let arg = argv[i];
    let next = () => {
      i += 1;
      if (i >= argv.length) throw new UsageError(`${arg} expects a value`);
      return argv[i];
    };
    if (arg === "--model") config.model = next();
    else if (arg === "--checkpoint") config.checkpoint = next();
    else if (arg === "--device") config.device = next();
    else if (arg === "--dims") config.dims = parsePositive(arg, next());
    else if (arg === "--grid") {
      let value = next();
      let match = /^(\d+)x(\d+)$/i.exec(value);
      if (!match) throw new UsageError(`--grid expects HxW, got ${value}`);
      config.gridH = Number(match[1]);
      config.gridW = Number(match[2]);
    } else if (arg === "--help" || arg === "-h") throw new UsageError(USAGE);
    else if (arg.startsWith("--")) throw new UsageError(`unknown flag ${arg}`);
    else positional.push(arg);
  }
  if (positional.length !== 2) throw new UsageError(USAGE);
  return { frames: positional[0], out: positional[1], config };
}

function parsePositive(flag: string, value: string): number {
  let parsed = Number(value);
  if (!Number.isInteger(parsed) || parsed < 1) {
    throw new UsageError(`${flag} expects a positive integer, got ${value}`);
  }
  return parsed;
}

export class UsageError extends Error {}

const USAGE = `usage: hrlc-extract FRAMES_DIR OUT_DIR [options]

options:
  --model NAME        encoder backend: grid (built-in) or tfjs (default grid)
  --checkpoint DIR    converted model directory (required for tfjs)
  --grid HxW          output spatial grid (default 64x64)
  --dims N            feature dimensions per cell (default 256)
  --device NAME       compute device hint (cpu only in this build)`;

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    let result = await extract(args.frames!, args.out!, args.config);
    console.log(`wrote ${result.written.length} feature tensors to ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof CheckpointError) {
      console.error(`checkpoint error: ${err.message}`);
      return 2;
    }
    if (err instanceof FrameError) {
      console.error(`frame error: ${err.message}`);
      return 3;
    }
    console.error(`unexpected error: ${(err as Error).message}`);
    return 4;
  }
}

/* istanbul ignore next: entry point */
if (typeof require !== "undefined" && require.main === module) {
  main(process.argv.slice(2)).then(code => {
    process.exitCode = code;
  });
}
