import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { main, parseArgs, UsageError } from "../src/cli";
import { encodeRgbPng, type RgbImage } from "../src/png";

let tmp: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "hrlc-adapter-"));
});

afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

function solidFrame(value: number): RgbImage {
  let pixels = Buffer.alloc(32 * 32 * 3, value);
  return { width: 32, height: 32, pixels };
}

function writeFrame(dir: string, name: string, image: RgbImage) {
  fs.mkdirSync(dir, { recursive: true });
  fs.writeFileSync(path.join(dir, name), encodeRgbPng(image));
}

describe("argument parsing", () => {
  it("parses flags into the adapter config", () => {
    let args = parseArgs([
      "frames", "out", "--model", "grid", "--grid", "8x16", "--dims", "12",
      "--device", "cpu",
    ]);
    expect(args.frames).toBe("frames");
    expect(args.out).toBe("out");
    expect(args.config.gridH).toBe(8);
    expect(args.config.gridW).toBe(16);
    expect(args.config.dims).toBe(12);
  });

  it("rejects malformed flags", () => {
    expect(() => parseArgs(["a", "b", "--grid", "64"])).toThrow(UsageError);
    expect(() => parseArgs(["a", "b", "--dims", "zero"])).toThrow(UsageError);
    expect(() => parseArgs(["a", "b", "--wat"])).toThrow(UsageError);
    expect(() => parseArgs(["onlyone"])).toThrow(UsageError);
  });
});

describe("extract command", () => {
  it("writes one tensor per frame, named after the source", async () => {
    let frames = path.join(tmp, "frames");
    writeFrame(frames, "cam_a.png", solidFrame(10));
    writeFrame(frames, "cam_b.png", solidFrame(200));
    let out = path.join(tmp, "out");
    let code = await main([frames, out, "--grid", "8x8", "--dims", "16"]);
    expect(code).toBe(0);
    expect(fs.readdirSync(out).sort()).toEqual(["cam_a.npy", "cam_b.npy"]);
  });

  it("duplicated input frames produce byte-identical tensors", async () => {
    let frames = path.join(tmp, "frames");
    writeFrame(frames, "f0.png", solidFrame(77));
    writeFrame(frames, "f1.png", solidFrame(77));
    writeFrame(frames, "f2.png", solidFrame(140));
    let out = path.join(tmp, "out");
    expect(await main([frames, out, "--grid", "8x8", "--dims", "16"])).toBe(0);
    let f0 = fs.readFileSync(path.join(out, "f0.npy"));
    let f1 = fs.readFileSync(path.join(out, "f1.npy"));
    let f2 = fs.readFileSync(path.join(out, "f2.npy"));
    expect(f0.equals(f1)).toBe(true);
    expect(f0.equals(f2)).toBe(false);
  });

  it("exits 2 when the tfjs checkpoint is missing", async () => {
    let frames = path.join(tmp, "frames");
    writeFrame(frames, "f.png", solidFrame(1));
    let code = await main([
      frames, path.join(tmp, "out"), "--model", "tfjs",
      "--checkpoint", path.join(tmp, "nope"),
    ]);
    expect(code).toBe(2);
  });

  it("exits 3 for a missing frame directory", async () => {
    expect(await main([path.join(tmp, "absent"), path.join(tmp, "out")])).toBe(3);
  });

  it("exits 3 and names an undecodable frame", async () => {
    let frames = path.join(tmp, "frames");
    fs.mkdirSync(frames);
    fs.writeFileSync(path.join(frames, "broken.png"), Buffer.from("nope"));
    expect(await main([frames, path.join(tmp, "out")])).toBe(3);
  });

  it("exits 2 on unknown flags", async () => {
    expect(await main(["--frames"])).toBe(2);
  });
});
