/**
 * Export pipeline: a tab-separated text file in, a binary vector store out.
 *
 * Input is UTF-8, one record per line, `id<TAB>text`. Blank lines are
 * skipped. Output rows keep input order, so the store can be compared
 * line-for-line against the file that produced it.
 */

import { readFileSync } from "node:fs";

import { Encoder, EncodingError, resolveEncoder } from "./encoders.js";
import { writeStore } from "./store.js";

export class InputFormatError extends Error {}

export interface ExportOptions {
  modelName: string;
  inputPath: string;
  outPath: string;
  batchSize?: number;
  normalize?: boolean;
}

export interface ExportResult {
  count: number;
  dim: number;
  model: string;
}

interface Record_ {
  id: string;
  text: string;
}

export function parseInput(raw: string): Record_[] {
  const records: Record_[] = [];
  const seen = new Set<string>();
  const lines = raw.split("\n");
  for (let i = 0; i < lines.length; i++) {
    let line = lines[i]!;
    if (line.endsWith("\r")) line = line.slice(0, -1);
    if (line === "") continue;
    const tab = line.indexOf("\t");
    if (tab < 0) {
      throw new InputFormatError(`line ${i + 1}: expected id<TAB>text`);
    }
    const id = line.slice(0, tab);
    const text = line.slice(tab + 1);
    if (id === "") {
      throw new InputFormatError(`line ${i + 1}: empty id`);
    }
    if (text.trim() === "") {
      throw new InputFormatError(`line ${i + 1}: empty text for id ${JSON.stringify(id)}`);
    }
    if (seen.has(id)) {
      throw new InputFormatError(`line ${i + 1}: duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    records.push({ id, text });
  }
  if (records.length === 0) {
    throw new InputFormatError("input has no records");
  }
  return records;
}

function l2NormalizeInPlace(row: Float32Array, id: string): void {
  let sq = 0;
  for (let i = 0; i < row.length; i++) sq += row[i]! * row[i]!;
  const norm = Math.sqrt(sq);
  if (!(norm > 0) || !Number.isFinite(norm)) {
    throw new EncodingError(`cannot normalize zero vector for id ${JSON.stringify(id)}`);
  }
  for (let i = 0; i < row.length; i++) {
    row[i] = Math.fround(row[i]! / norm);
  }
}

async function encodeBatch(
  encoder: Encoder,
  batch: Record_[],
  normalize: boolean,
): Promise<Float32Array[]> {
  let rows: Float32Array[];
  try {
    rows = await encoder.encode(batch.map((r) => r.text));
  } catch (e) {
    // retry one by one so the failing record is named
    rows = [];
    for (const rec of batch) {
      try {
        const [row] = await encoder.encode([rec.text]);
        rows.push(row!);
      } catch (inner) {
        const reason = inner instanceof Error ? inner.message : String(inner);
        throw new EncodingError(`cannot encode id ${JSON.stringify(rec.id)}: ${reason}`);
      }
    }
    if (rows.length !== batch.length) {
      const reason = e instanceof Error ? e.message : String(e);
      throw new EncodingError(reason);
    }
  }
  if (normalize) {
    for (let i = 0; i < rows.length; i++) {
      l2NormalizeInPlace(rows[i]!, batch[i]!.id);
    }
  }
  return rows;
}

export async function exportStore(opts: ExportOptions): Promise<ExportResult> {
  const batchSize = opts.batchSize ?? 32;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new InputFormatError(`batch size must be a positive integer, got ${batchSize}`);
  }

  let raw: string;
  try {
    raw = readFileSync(opts.inputPath, "utf8");
  } catch (e) {
    throw new InputFormatError(`cannot read ${opts.inputPath}: ${String(e)}`);
  }
  const records = parseInput(raw);
  const encoder = resolveEncoder(opts.modelName);

  const ids: string[] = [];
  const rows: Float32Array[] = [];
  for (let start = 0; start < records.length; start += batchSize) {
    const batch = records.slice(start, start + batchSize);
    const encoded = await encodeBatch(encoder, batch, opts.normalize ?? false);
    for (let i = 0; i < batch.length; i++) {
      ids.push(batch[i]!.id);
      rows.push(encoded[i]!);
    }
  }

  writeStore(ids, rows, opts.outPath);
  return { count: ids.length, dim: rows[0]!.length, model: encoder.name };
}
