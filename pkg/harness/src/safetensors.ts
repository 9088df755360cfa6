/**
 * Minimal reader (and test-fixture writer) for the safetensors container
 * layout: an 8-byte little-endian u64 header length, a JSON header mapping
 * tensor names to {dtype, shape, data_offsets} (plus optional __metadata__),
 * and one contiguous data buffer.
 */

import { readFileSync, writeFileSync } from "node:fs";

export type Dtype = "F32" | "F16" | "BF16" | "F64";

const WIDTHS: Record<Dtype, number> = { F32: 4, F16: 2, BF16: 2, F64: 8 };

export interface Tensor {
  dtype: Dtype;
  shape: number[];
  /** Values decoded to f64, flattened in row-major order. */
  values: Float64Array;
}

export type TensorMap = Map<string, Tensor>;

function decodeF16(bits: number): number {
  const sign = bits & 0x8000 ? -1 : 1;
  const exp = (bits >> 10) & 0x1f;
  const frac = bits & 0x3ff;
  if (exp === 0) return sign * frac * 2 ** -24;
  if (exp === 0x1f) return frac ? NaN : sign * Infinity;
  return sign * (1 + frac / 1024) * 2 ** (exp - 15);
}

function decode(dtype: Dtype, bytes: Buffer, count: number): Float64Array {
  const out = new Float64Array(count);
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const scratch = new DataView(new ArrayBuffer(4));
  for (let i = 0; i < count; i++) {
    switch (dtype) {
      case "F32":
        out[i] = view.getFloat32(4 * i, true);
        break;
      case "F64":
        out[i] = view.getFloat64(8 * i, true);
        break;
      case "F16":
        out[i] = decodeF16(view.getUint16(2 * i, true));
        break;
      case "BF16":
        // bf16 is the high half of an f32.
        scratch.setUint32(0, view.getUint16(2 * i, true) << 16, false);
        out[i] = scratch.getFloat32(0, false);
        break;
    }
  }
  return out;
}

export function loadCheckpoint(path: string): TensorMap {
  const raw = readFileSync(path);
  if (raw.length < 8) throw new Error(`${path}: truncated container (no header length)`);
  const headerLen = Number(raw.readBigUInt64LE(0));
  if (8 + headerLen > raw.length) throw new Error(`${path}: truncated header`);
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(raw.subarray(8, 8 + headerLen).toString("utf8"));
  } catch (err) {
    throw new Error(`${path}: malformed header JSON (${err})`);
  }
  const buffer = raw.subarray(8 + headerLen);
  const tensors: TensorMap = new Map();
  for (const [name, entryRaw] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    const entry = entryRaw as { dtype: string; shape: number[]; data_offsets: [number, number] };
    const dtype = entry.dtype as Dtype;
    if (!(dtype in WIDTHS)) throw new Error(`${path}: unsupported dtype ${entry.dtype}`);
    const [start, end] = entry.data_offsets;
    const count = entry.shape.reduce((a, b) => a * b, 1);
    if (end - start !== count * WIDTHS[dtype] || end > buffer.length || start < 0) {
      throw new Error(`${path}: bad data extent for tensor ${name}`);
    }
    tensors.set(name, {
      dtype,
      shape: [...entry.shape],
      values: decode(dtype, buffer.subarray(start, end), count),
    });
  }
  return tensors;
}

/** Write an F64 checkpoint; used to build test fixtures. */
export function saveCheckpointF64(path: string, arrays: Record<string, number[]>): void {
  const names = Object.keys(arrays).sort();
  const header: Record<string, unknown> = {};
  let offset = 0;
  const chunks: Buffer[] = [];
  for (const name of names) {
    const vals = arrays[name];
    const buf = Buffer.alloc(8 * vals.length);
    vals.forEach((v, i) => buf.writeDoubleLE(v, 8 * i));
    header[name] = { dtype: "F64", shape: [vals.length], data_offsets: [offset, offset + buf.length] };
    offset += buf.length;
    chunks.push(buf);
  }
  const headerBytes = Buffer.from(JSON.stringify(header), "utf8");
  const lenBytes = Buffer.alloc(8);
  lenBytes.writeBigUInt64LE(BigInt(headerBytes.length));
  writeFileSync(path, Buffer.concat([lenBytes, headerBytes, ...chunks]));
}
