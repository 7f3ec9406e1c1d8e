#!/usr/bin/env node
/**
 * embed-export: encode a tab-separated text file into a binary vector
 * store readable by the dense-eval tools.
 *
 * Exit codes: 0 success, 1 usage error, 2 data or model error.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { EncodingError } from "./encoders.js";
import { exportStore, InputFormatError } from "./export.js";
import { StoreFormatError } from "./store.js";

const USAGE = `usage: embed-export --model NAME --input FILE --out FILE
                    [--batch-size N] [--normalize]

Encode id<TAB>text lines into a binary float32 vector store.

options:
  --model NAME    encoder to use; "hashed-<dim>" needs no model files,
                  anything else is loaded as a transformer checkpoint
  --input FILE    UTF-8 input, one id<TAB>text record per line
  --out FILE      store file to write
  --batch-size N  texts encoded per call (default 32)
  --normalize     L2-normalize each vector before writing
  --help          show this message
`;

export async function run(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        input: { type: "string" },
        out: { type: "string" },
        "batch-size": { type: "string" },
        normalize: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    });
  } catch (e) {
    process.stderr.write(`embed-export: ${e instanceof Error ? e.message : String(e)}\n`);
    process.stderr.write(USAGE);
    return 1;
  }
  const v = parsed.values;
  if (v.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  for (const required of ["model", "input", "out"] as const) {
    if (!v[required]) {
      process.stderr.write(`embed-export: --${required} is required\n`);
      process.stderr.write(USAGE);
      return 1;
    }
  }
  let batchSize = 32;
  if (v["batch-size"] !== undefined) {
    batchSize = Number(v["batch-size"]);
    if (!Number.isInteger(batchSize) || batchSize < 1) {
      process.stderr.write(`embed-export: --batch-size must be a positive integer\n`);
      return 1;
    }
  }

  try {
    const result = await exportStore({
      modelName: v.model!,
      inputPath: v.input!,
      outPath: v.out!,
      batchSize,
      normalize: v.normalize ?? false,
    });
    process.stdout.write(
      `wrote ${result.count} vectors of dim ${result.dim} (model ${result.model}) to ${v.out}\n`,
    );
    return 0;
  } catch (e) {
    if (
      e instanceof InputFormatError ||
      e instanceof EncodingError ||
      e instanceof StoreFormatError
    ) {
      process.stderr.write(`embed-export: ${e.message}\n`);
      return 2;
    }
    throw e;
  }
}

const isMain =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (isMain) {
  run(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (e) => {
      process.stderr.write(`embed-export: internal error: ${e instanceof Error ? (e.stack ?? e.message) : String(e)}\n`);
      process.exit(3);
    },
  );
}
