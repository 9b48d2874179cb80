/**
 * Writer (and test-side reader) for the feature tensor container consumed by
 * the clustering core: magic \x93NUMPY, version 1.0, 2-byte little-endian
 * header length, ASCII header dict with descr '<f4', padded with spaces so
 * the full header is a multiple of 64 bytes and newline-terminated, followed
 * by the raw C-order float32 payload.
 */

const MAGIC = Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY
const VERSION = Buffer.from([0x01, 0x00]);
const HEADER_ALIGN = 64;

export function encodeFeatureTensor(data: Float32Array, shape: number[]): Buffer {
  let count = shape.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`shape [${shape}] does not match ${data.length} values`);
  }
  for (let v of data) {
    if (!Number.isFinite(v)) throw new Error("feature values must be finite");
  }
  let shapeRepr = `(${shape.join(", ")})`;
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeRepr}, }`;
  let unpadded = MAGIC.length + 2 + 2 + header.length + 1;
  let pad = (HEADER_ALIGN - (unpadded % HEADER_ALIGN)) % HEADER_ALIGN;
  let headerBytes = Buffer.from(header + " ".repeat(pad) + "\n", "ascii");
  let lengthBytes = Buffer.alloc(2);
  lengthBytes.writeUInt16LE(headerBytes.length, 0);

  let payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    payload.writeFloatLE(data[i], i * 4);
  }
  return Buffer.concat([MAGIC, VERSION, lengthBytes, headerBytes, payload]);
}

export interface FeatureTensor {
  shape: number[];
  data: Float32Array;
}

export function decodeFeatureTensor(blob: Buffer): FeatureTensor {
  if (!blob.subarray(0, 6).equals(MAGIC)) throw new Error("bad magic");
  if (!blob.subarray(6, 8).equals(VERSION)) throw new Error("unsupported version");
  let headerLength = blob.readUInt16LE(8);
  let header = blob.subarray(10, 10 + headerLength).toString("ascii");
  if (!header.endsWith("\n")) throw new Error("unterminated header");
  let descr = /'descr':\s*'([^']+)'/.exec(header);
  if (!descr || descr[1] !== "<f4") throw new Error(`unsupported dtype ${descr?.[1]}`);
  if (!/'fortran_order':\s*False/.test(header)) throw new Error("fortran order unsupported");
  let shapeMatch = /'shape':\s*\(([^)]*)\)/.exec(header);
  if (!shapeMatch) throw new Error("missing shape");
  let shape = shapeMatch[1]
    .split(",")
    .map(s => s.trim())
    .filter(s => s.length > 0)
    .map(Number);
  let count = shape.reduce((a, b) => a * b, 1);
  let payload = blob.subarray(10 + headerLength);
  if (payload.length !== count * 4) {
    throw new Error(`payload is ${payload.length} bytes, expected ${count * 4}`);
  }
  let data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = payload.readFloatLE(i * 4);
  }
  return { shape, data };
}
