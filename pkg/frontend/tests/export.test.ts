import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { EncodingError, HashedEncoder, resolveEncoder, TransformerEncoder } from "../src/encoders";
import { exportStore, InputFormatError, parseInput } from "../src/export";
import { readStore } from "../src/store";

let dir: string;

beforeEach(() => {
  dir = mkdtempSync(join(tmpdir(), "export-"));
});

afterEach(() => {
  rmSync(dir, { recursive: true, force: true });
});

function writeInput(name: string, lines: string[]): string {
  const p = join(dir, name);
  writeFileSync(p, lines.join("\n") + "\n", "utf8");
  return p;
}

describe("parseInput", () => {
  it("parses id and text split on the first tab", () => {
    const recs = parseInput("d1\tsome text\nd2\ttext with\ta tab inside\n");
    expect(recs).toEqual([
      { id: "d1", text: "some text" },
      { id: "d2", text: "text with\ta tab inside" },
    ]);
  });

  it("skips blank lines and strips CR", () => {
    const recs = parseInput("d1\talpha\r\n\nd2\tbeta\n");
    expect(recs.map((r) => r.id)).toEqual(["d1", "d2"]);
    expect(recs[1]!.text).toBe("beta");
  });

  it("reports a missing tab with its line number", () => {
    expect(() => parseInput("d1\talpha\nnotab\n")).toThrow(/line 2/);
  });

  it("rejects an empty id with its line number", () => {
    expect(() => parseInput("\talpha\n")).toThrow(/line 1.*empty id/);
  });

  it("rejects blank text, naming the id", () => {
    expect(() => parseInput("d1\t   \n")).toThrow(/d1/);
  });

  it("rejects duplicate ids", () => {
    expect(() => parseInput("d1\talpha\nd1\tbeta\n")).toThrow(/duplicate id.*d1/);
  });

  it("rejects empty input", () => {
    expect(() => parseInput("\n\n")).toThrow(/no records/);
  });
});

describe("hashed encoder", () => {
  it("is deterministic and case/spacing insensitive only through tokenization", async () => {
    const enc = new HashedEncoder(32);
    const [a] = await enc.encode(["Dense passage retrieval"]);
    const [b] = await enc.encode(["dense  passage retrieval"]);
    const [c] = await enc.encode(["dense passage ranking"]);
    expect(a).toEqual(b);
    expect(a).not.toEqual(c);
  });

  it("rejects text with no tokens", async () => {
    const enc = new HashedEncoder(16);
    await expect(enc.encode(["?!,."])).rejects.toThrow(/no tokens/);
  });

  it("rejects out-of-range dims", () => {
    expect(() => new HashedEncoder(0)).toThrow(EncodingError);
    expect(() => new HashedEncoder(2.5)).toThrow(EncodingError);
  });

  it("resolves from hashed-<dim> names", () => {
    const enc = resolveEncoder("hashed-64");
    expect(enc).toBeInstanceOf(HashedEncoder);
    expect(enc.dim).toBe(64);
    expect(enc.name).toBe("hashed-64");
    expect(resolveEncoder("some/checkpoint")).toBeInstanceOf(TransformerEncoder);
  });
});

describe("exportStore", () => {
  const CORPUS = [
    "d1\tthe cat sat on the mat",
    "d2\ta dog chased the ball",
    "d3\tretrieval models rank passages",
    "d4\tthe cat sat on the mat",
    "d5\tneural encoders embed sentences",
  ];

  it("writes rows in input order with the requested dim", async () => {
    const input = writeInput("in.tsv", CORPUS);
    const out = join(dir, "out.bin");
    const result = await exportStore({ modelName: "hashed-64", inputPath: input, outPath: out });
    expect(result).toEqual({ count: 5, dim: 64, model: "hashed-64" });
    const store = readStore(out);
    expect(store.ids).toEqual(["d1", "d2", "d3", "d4", "d5"]);
    expect(store.dim).toBe(64);
  });

  it("gives duplicated sentences identical rows", async () => {
    const input = writeInput("in.tsv", CORPUS);
    const out = join(dir, "out.bin");
    await exportStore({ modelName: "hashed-64", inputPath: input, outPath: out });
    const store = readStore(out);
    expect(store.rows[0]).toEqual(store.rows[3]);
    expect(store.rows[0]).not.toEqual(store.rows[1]);
  });

  it("produces identical files for any batch size", async () => {
    const input = writeInput("in.tsv", CORPUS);
    const one = join(dir, "one.bin");
    const eight = join(dir, "eight.bin");
    await exportStore({ modelName: "hashed-32", inputPath: input, outPath: one, batchSize: 1 });
    await exportStore({ modelName: "hashed-32", inputPath: input, outPath: eight, batchSize: 8 });
    expect(readFileSync(one).equals(readFileSync(eight))).toBe(true);
  });

  it("normalizes rows to unit length when asked", async () => {
    const input = writeInput("in.tsv", CORPUS);
    const out = join(dir, "norm.bin");
    await exportStore({
      modelName: "hashed-64",
      inputPath: input,
      outPath: out,
      normalize: true,
    });
    for (const row of readStore(out).rows) {
      let sq = 0;
      for (const v of row) sq += v * v;
      expect(Math.abs(Math.sqrt(sq) - 1)).toBeLessThanOrEqual(1e-6);
    }
  });

  it("names the record that cannot be encoded", async () => {
    const input = writeInput("in.tsv", ["good\tplain words", "d9\t?!,."]);
    const out = join(dir, "out.bin");
    await expect(
      exportStore({ modelName: "hashed-16", inputPath: input, outPath: out }),
    ).rejects.toThrow(/d9/);
  });

  it("rejects a missing input file", async () => {
    await expect(
      exportStore({
        modelName: "hashed-16",
        inputPath: join(dir, "absent.tsv"),
        outPath: join(dir, "out.bin"),
      }),
    ).rejects.toThrow(InputFormatError);
  });

  it("rejects a non-positive batch size", async () => {
    const input = writeInput("in.tsv", CORPUS);
    await expect(
      exportStore({
        modelName: "hashed-16",
        inputPath: input,
        outPath: join(dir, "out.bin"),
        batchSize: 0,
      }),
    ).rejects.toThrow(/batch size/);
  });
});
