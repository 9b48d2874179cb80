/**
 * Minimal PNG support for frame ingestion: decodes 8-bit grayscale, RGB,
 * RGBA, and indexed images (all five scanline filters, no interlacing) into
 * RGB pixel buffers, and encodes RGB for the test fixtures.
 */

import * as zlib from "node:zlib";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, 3 bytes per pixel. */
  pixels: Buffer;
}

const CRC_TABLE = new Uint32Array(256);
for (let n = 0; n < 256; n++) {
  let c = n;
  for (let k = 0; k < 8; k++) {
    c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
  }
  CRC_TABLE[n] = c >>> 0;
}

export function crc32(data: Buffer): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function crc(tag: string, payload: Buffer): Buffer {
  let out = Buffer.alloc(4);
  out.writeUInt32BE(crc32(Buffer.concat([Buffer.from(tag, "ascii"), payload])), 0);
  return out;
}

function chunk(tag: string, payload: Buffer): Buffer {
  let length = Buffer.alloc(4);
  length.writeUInt32BE(payload.length, 0);
  return Buffer.concat([length, Buffer.from(tag, "ascii"), payload, crc(tag, payload)]);
}

export function encodeRgbPng(image: RgbImage): Buffer {
  let { width, height, pixels } = image;
  if (pixels.length !== width * height * 3) {
    throw new Error("pixel buffer does not match dimensions");
  }
  let ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // RGB
  let rowBytes = width * 3;
  let raw = Buffer.alloc(height * (1 + rowBytes));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + rowBytes)] = 0; // filter 0
    pixels.copy(raw, y * (1 + rowBytes) + 1, y * rowBytes, (y + 1) * rowBytes);
  }
  let idat = zlib.deflateSync(raw, { level: 6 });
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

function paeth(a: number, b: number, c: number): number {
  let p = a + b - c;
  let pa = Math.abs(p - a);
  let pb = Math.abs(p - b);
  let pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

function unfilter(raw: Buffer, height: number, rowBytes: number, bpp: number): Buffer {
  let out = Buffer.alloc(height * rowBytes);
  let prior = Buffer.alloc(rowBytes);
  for (let y = 0; y < height; y++) {
    let offset = y * (1 + rowBytes);
    let type = raw[offset];
    let line = Buffer.from(raw.subarray(offset + 1, offset + 1 + rowBytes));
    switch (type) {
      case 0:
        break;
      case 1: // Sub
        for (let i = bpp; i < rowBytes; i++) line[i] = (line[i] + line[i - bpp]) & 0xff;
        break;
      case 2: // Up
        for (let i = 0; i < rowBytes; i++) line[i] = (line[i] + prior[i]) & 0xff;
        break;
      case 3: // Average
        for (let i = 0; i < rowBytes; i++) {
          let left = i >= bpp ? line[i - bpp] : 0;
          line[i] = (line[i] + ((left + prior[i]) >> 1)) & 0xff;
        }
        break;
      case 4: // Paeth
        for (let i = 0; i < rowBytes; i++) {
          let left = i >= bpp ? line[i - bpp] : 0;
          let upLeft = i >= bpp ? prior[i - bpp] : 0;
          line[i] = (line[i] + paeth(left, prior[i], upLeft)) & 0xff;
        }
        break;
      default:
        throw new Error(`unknown scanline filter ${type}`);
    }
    line.copy(out, y * rowBytes);
    prior = line;
  }
  return out;
}

export function decodePngToRgb(blob: Buffer): RgbImage {
  if (!blob.subarray(0, 8).equals(SIGNATURE)) throw new Error("not a PNG file");
  let pos = 8;
  let header: Buffer | null = null;
  let palette: Buffer | null = null;
  let idat: Buffer[] = [];
  while (pos < blob.length) {
    let length = blob.readUInt32BE(pos);
    let tag = blob.subarray(pos + 4, pos + 8).toString("ascii");
    let body = blob.subarray(pos + 8, pos + 8 + length);
    if (body.length !== length) throw new Error(`truncated chunk ${tag}`);
    pos += 12 + length;
    if (tag === "IHDR") header = Buffer.from(body);
    else if (tag === "PLTE") palette = Buffer.from(body);
    else if (tag === "IDAT") idat.push(Buffer.from(body));
    else if (tag === "IEND") break;
  }
  if (header === null) throw new Error("missing IHDR");
  let width = header.readUInt32BE(0);
  let height = header.readUInt32BE(4);
  let depth = header[8];
  let colorType = header[9];
  if (header[12] !== 0) throw new Error("interlaced PNG not supported");
  if (depth !== 8) throw new Error(`unsupported bit depth ${depth}`);

  let channels: number;
  if (colorType === 0) channels = 1;
  else if (colorType === 2) channels = 3;
  else if (colorType === 3) channels = 1;
  else if (colorType === 6) channels = 4;
  else throw new Error(`unsupported color type ${colorType}`);
  if (colorType === 3 && palette === null) throw new Error("indexed PNG without PLTE");

  let raw = zlib.inflateSync(Buffer.concat(idat));
  let rowBytes = width * channels;
  if (raw.length !== height * (1 + rowBytes)) throw new Error("decompressed size mismatch");
  let data = unfilter(raw, height, rowBytes, channels);

  let pixels = Buffer.alloc(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    if (colorType === 0) {
      pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = data[i];
    } else if (colorType === 2) {
      pixels[3 * i] = data[3 * i];
      pixels[3 * i + 1] = data[3 * i + 1];
      pixels[3 * i + 2] = data[3 * i + 2];
    } else if (colorType === 3) {
      let index = data[i] * 3;
      pixels[3 * i] = palette![index];
      pixels[3 * i + 1] = palette![index + 1];
      pixels[3 * i + 2] = palette![index + 2];
    } else {
      pixels[3 * i] = data[4 * i];
      pixels[3 * i + 1] = data[4 * i + 1];
      pixels[3 * i + 2] = data[4 * i + 2];
    }
  }
  return { width, height, pixels };
}
