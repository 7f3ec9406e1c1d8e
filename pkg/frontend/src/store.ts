/**
 * Binary embedding store writer/reader.
 *
 * Layout (little-endian, no padding):
 *
 *     magic "DNSE" | u32 version=1 | u32 dim | u64 count
 *     count x (u16 byte-length + UTF-8 id)
 *     count x dim float32, row-major
 *
 * The writer is the product surface: stores written here are consumed
 * by the Python reranking pipeline. The reader exists so tests can
 * inspect what was written without crossing the language boundary.
 */
import { openSync, writeSync, closeSync, readFileSync } from "node:fs";

export const MAGIC = "DNSE";
export const FORMAT_VERSION = 1;
const HEADER_BYTES = 20;

export class StoreFormatError extends Error {}

function headerBuffer(dim: number, count: number): Buffer {
  const buf = Buffer.alloc(HEADER_BYTES);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(FORMAT_VERSION, 4);
  buf.writeUInt32LE(dim, 8);
  buf.writeBigUInt64LE(BigInt(count), 12);
  return buf;
}

function idTableBuffer(ids: string[]): Buffer {
  const parts: Buffer[] = [];
  for (const id of ids) {
    const blob = Buffer.from(id, "utf-8");
    if (blob.length === 0 || blob.length > 0xffff) {
      throw new StoreFormatError(`id ${JSON.stringify(id)} is empty or longer than 65535 bytes`);
    }
    const len = Buffer.alloc(2);
    len.writeUInt16LE(blob.length, 0);
    parts.push(len, blob);
  }
  return Buffer.concat(parts);
}

function rowBuffer(row: Float32Array): Buffer {
  // explicit little-endian write; never trust platform byte order
  const buf = Buffer.alloc(row.length * 4);
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  for (let i = 0; i < row.length; i++) {
    const v = row[i]!;
    if (!Number.isFinite(v)) {
      throw new StoreFormatError(`non-finite value at column ${i}`);
    }
    view.setFloat32(i * 4, v, true);
  }
  return buf;
}

export function writeStore(ids: string[], rows: Float32Array[], path: string): void {
  if (ids.length !== rows.length) {
    throw new StoreFormatError(`${ids.length} ids but ${rows.length} rows`);
  }
  if (ids.length === 0) {
    throw new StoreFormatError("store must hold at least one row");
  }
  const dim = rows[0]!.length;
  if (dim < 1) {
    throw new StoreFormatError("vector dimension must be >= 1");
  }
  const seen = new Set<string>();
  for (const id of ids) {
    if (seen.has(id)) {
      throw new StoreFormatError(`duplicate id: ${JSON.stringify(id)}`);
    }
    seen.add(id);
  }

  const fd = openSync(path, "w");
  try {
    writeSync(fd, headerBuffer(dim, ids.length));
    writeSync(fd, idTableBuffer(ids));
    for (let r = 0; r < rows.length; r++) {
      const row = rows[r]!;
      if (row.length !== dim) {
        throw new StoreFormatError(
          `row ${r} (id ${JSON.stringify(ids[r])}) has dim ${row.length}, expected ${dim}`,
        );
      }
      try {
        writeSync(fd, rowBuffer(row));
      } catch (e) {
        if (e instanceof StoreFormatError) {
          throw new StoreFormatError(`row ${r} (id ${JSON.stringify(ids[r])}): ${e.message}`);
        }
        throw e;
      }
    }
  } finally {
    closeSync(fd);
  }
}

export interface StoreContents {
  dim: number;
  ids: string[];
  rows: Float32Array[];
}

export function readStore(path: string): StoreContents {
  const data = readFileSync(path);
  if (data.length < HEADER_BYTES) {
    throw new StoreFormatError(`${path}: file too short for a store header`);
  }
  if (data.toString("ascii", 0, 4) !== MAGIC) {
    throw new StoreFormatError(`${path}: bad magic`);
  }
  const version = data.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new StoreFormatError(`${path}: unsupported version ${version}`);
  }
  const dim = data.readUInt32LE(8);
  const count = Number(data.readBigUInt64LE(12));

  const ids: string[] = [];
  let offset = HEADER_BYTES;
  for (let i = 0; i < count; i++) {
    if (offset + 2 > data.length) {
      throw new StoreFormatError(`${path}: truncated id table`);
    }
    const len = data.readUInt16LE(offset);
    offset += 2;
    if (offset + len > data.length) {
      throw new StoreFormatError(`${path}: truncated id table`);
    }
    ids.push(data.toString("utf-8", offset, offset + len));
    offset += len;
  }

  const expected = offset + count * dim * 4;
  if (data.length < expected) {
    throw new StoreFormatError(`${path}: truncated payload`);
  }
  if (data.length > expected) {
    throw new StoreFormatError(`${path}: trailing bytes after payload`);
  }

  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const rows: Float32Array[] = [];
  for (let r = 0; r < count; r++) {
    const row = new Float32Array(dim);
    for (let c = 0; c < dim; c++) {
      row[c] = view.getFloat32(offset + (r * dim + c) * 4, true);
    }
    rows.push(row);
  }
  return { dim, ids, rows };
}
