/**
 * Named sentence encoders.
 *
 * Two families resolve by model name:
 *
 *  - "hashed-<dim>": a deterministic feature-hashing encoder with no
 *    model weights. Tokens hash into <dim> signed buckets (the classic
 *    hashing trick), so identical text always yields identical vectors
 *    and no network or model files are needed. It is a conformance and
 *    plumbing encoder, not a trained model; retrieval quality is
 *    whatever term overlap buys.
 *
 *  - anything else: treated as a transformer checkpoint id and run
 *    through @xenova/transformers feature extraction (CLS pooling by
 *    default, the usual convention for dot-product retrieval
 *    checkpoints). Requires the optional dependency to be installed and
 *    the checkpoint to be available locally or downloadable.
 */

export interface Encoder {
  readonly name: string;
  readonly dim: number;
  encode(texts: string[]): Promise<Float32Array[]>;
}

export class EncodingError extends Error {}

/* ---------------------------------------------------------------- hashed */

function fnv1a(bytes: Uint8Array, seed: number): number {
  // 32-bit FNV-1a, seeded so several independent hash streams exist
  let h = (0x811c9dc5 ^ seed) >>> 0;
  for (const b of bytes) {
    h ^= b;
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^\p{L}\p{N}]+/u)
    .filter((t) => t.length > 0);
}

export class HashedEncoder implements Encoder {
  readonly name: string;
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 1 || dim > 1 << 20) {
      throw new EncodingError(`hashed encoder dim out of range: ${dim}`);
    }
    this.name = `hashed-${dim}`;
    this.dim = dim;
  }

  private encodeOne(text: string): Float32Array {
    const tokens = tokenize(text);
    if (tokens.length === 0) {
      throw new EncodingError("text has no tokens");
    }
    // accumulate in float64, then round once to float32
    const acc = new Float64Array(this.dim);
    const utf8 = new TextEncoder();
    for (const tok of tokens) {
      const bytes = utf8.encode(tok);
      const bucket = fnv1a(bytes, 0) % this.dim;
      const sign = fnv1a(bytes, 1) & 1 ? 1.0 : -1.0;
      acc[bucket]! += sign;
    }
    const out = new Float32Array(this.dim);
    const scale = 1.0 / Math.sqrt(tokens.length);
    for (let i = 0; i < this.dim; i++) {
      out[i] = Math.fround(acc[i]! * scale);
    }
    return out;
  }

  async encode(texts: string[]): Promise<Float32Array[]> {
    return texts.map((t) => this.encodeOne(t));
  }
}

/* ----------------------------------------------------------- transformers */

type FeaturePipeline = (
  texts: string[],
  opts: { pooling: string; normalize: boolean },
) => Promise<{ dims: number[]; data: Float32Array }>;

export class TransformerEncoder implements Encoder {
  readonly name: string;
  dim = 0; // known after the first batch
  private pipe: FeaturePipeline | null = null;
  private readonly pooling: string;

  constructor(name: string, pooling = "cls") {
    this.name = name;
    this.pooling = pooling;
  }

  private async load(): Promise<FeaturePipeline> {
    if (this.pipe) return this.pipe;
    let mod: { pipeline: (task: string, model: string) => Promise<unknown> };
    // the specifier is kept out of static analysis so the build does not
    // depend on the optional package being installed
    const backend = "@xenova/transformers";
    try {
      mod = (await import(backend)) as typeof mod;
    } catch (e) {
      throw new EncodingError(
        `cannot load the transformers backend for model ${JSON.stringify(this.name)}: ${String(e)}`,
      );
    }
    try {
      this.pipe = (await mod.pipeline("feature-extraction", this.name)) as FeaturePipeline;
    } catch (e) {
      throw new EncodingError(
        `cannot load model ${JSON.stringify(this.name)}: ${String(e)}`,
      );
    }
    return this.pipe;
  }

  async encode(texts: string[]): Promise<Float32Array[]> {
    const pipe = await this.load();
    const output = await pipe(texts, { pooling: this.pooling, normalize: false });
    const [n, dim] = [output.dims[0]!, output.dims[output.dims.length - 1]!];
    if (n !== texts.length) {
      throw new EncodingError(`model returned ${n} rows for ${texts.length} texts`);
    }
    this.dim = dim;
    const rows: Float32Array[] = [];
    for (let i = 0; i < n; i++) {
      rows.push(output.data.slice(i * dim, (i + 1) * dim));
    }
    return rows;
  }
}

/* ------------------------------------------------------------- resolution */

const HASHED = /^hashed-(\d+)$/;

export function resolveEncoder(modelName: string): Encoder {
  const m = HASHED.exec(modelName);
  if (m) {
    return new HashedEncoder(Number(m[1]));
  }
  return new TransformerEncoder(modelName);
}
