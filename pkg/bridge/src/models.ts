/**
 * Deterministic stand-in model suite.
 *
 * Embeddings are unit gaussian directions drawn from a counter-mode
 * sha256 stream keyed by (role, modality/template, payload), so the same
 * request always returns the same vector, different modalities
 * decorrelate, and text payloads land in the exact same space the
 * lexicon embedder uses (a text payload equal to a templated bank word
 * retrieves that word at cosine 1).
 *
 * The abstractness classifier is a frozen wordlist + suffix heuristic:
 * evaluative/abstract adjectives ("great", "good", ...) get keep=false.
 */
import { createHash } from "node:crypto";

export const MODALITIES = [
  "Text",
  "Audio",
  "Image",
  "PointCloud",
  "Thermal",
  "Depth",
  "Event",
] as const;
export type Modality = (typeof MODALITIES)[number];

export const SUPPORTED_KINDS: Record<Modality, string[]> = {
  Text: ["text/plain"],
  Audio: ["audio/wav", "audio/x-raw"],
  Image: ["image/png", "image/jpeg"],
  PointCloud: ["application/x-ply", "application/octet-stream"],
  Thermal: ["image/tiff", "image/png"],
  Depth: ["image/png", "application/octet-stream"],
  Event: ["application/x-aedat", "application/octet-stream"],
};

export function isModality(value: string): value is Modality {
  return (MODALITIES as readonly string[]).includes(value);
}

function digestStream(seed: Buffer, bytes: number): Buffer {
  const blocks: Buffer[] = [];
  let produced = 0;
  let counter = 0;
  while (produced < bytes) {
    const ctr = Buffer.alloc(4);
    ctr.writeUInt32LE(counter, 0);
    const block = createHash("sha256").update(seed).update(ctr).digest();
    blocks.push(block);
    produced += block.length;
    counter += 1;
  }
  return Buffer.concat(blocks).subarray(0, bytes);
}

/** 53-bit uniform in (0, 1): never exactly 0, safe for log(). */
function uniform(buf: Buffer, offset: number): number {
  const x = buf.readBigUInt64LE(offset) >> 11n;
  return (Number(x) + 0.5) / 9007199254740992; // 2^53
}

export function gaussianUnitVector(seed: Buffer, dim: number): Float64Array {
  const pairs = Math.ceil(dim / 2);
  const raw = digestStream(seed, pairs * 16);
  const out = new Float64Array(dim);
  for (let p = 0; p < pairs; p += 1) {
    const u1 = uniform(raw, p * 16);
    const u2 = uniform(raw, p * 16 + 8);
    const radius = Math.sqrt(-2.0 * Math.log(u1));
    const angle = 2.0 * Math.PI * u2;
    const i = 2 * p;
    out[i] = radius * Math.cos(angle);
    if (i + 1 < dim) {
      out[i + 1] = radius * Math.sin(angle);
    }
  }
  let normSq = 0;
  for (let i = 0; i < dim; i += 1) {
    normSq += out[i] * out[i];
  }
  const norm = Math.sqrt(normSq);
  for (let i = 0; i < dim; i += 1) {
    out[i] /= norm;
  }
  return out;
}

function seedOf(...parts: (string | Buffer)[]): Buffer {
  const h = createHash("sha256");
  for (const part of parts) {
    h.update(part);
    h.update(Buffer.from([0]));
  }
  return h.digest();
}

/** Shared-space text embedding; the lexicon embedder and Text encoding agree. */
export function embedText(modelId: string, text: string, dim: number): Float64Array {
  return gaussianUnitVector(seedOf("text-encoder", modelId, text), dim);
}

/** Frozen per-modality encoders over raw payload bytes. */
export function encodePayload(
  modelId: string,
  modality: Modality,
  payloadKind: string,
  payload: Buffer,
  dim: number,
): Float64Array {
  if (modality === "Text") {
    return embedText(modelId, payload.toString("utf-8"), dim);
  }
  return gaussianUnitVector(
    seedOf("encoder", modelId, modality, payloadKind, payload),
    dim,
  );
}

const ABSTRACT_ADJECTIVES = new Set([
  "great", "good", "nice", "bad", "fine", "important", "interesting",
  "significant", "wonderful", "amazing", "terrible", "excellent",
  "fantastic", "awesome", "perfect", "awful", "special", "real",
  "true", "certain", "possible", "necessary", "available", "serious",
  "major", "minor", "general", "particular", "relevant", "suitable",
  "valuable", "notable", "remarkable", "ordinary", "typical", "usual",
]);

const ABSTRACT_SUFFIXES = ["worthy", "able", "ible"];

/**
 * keep=true means the adjective names a concrete, depictable property;
 * keep=false marks abstract/evaluative words the attribute bank drops.
 */
export function keepAdjective(word: string): boolean {
  const w = word.trim().toLowerCase();
  if (ABSTRACT_ADJECTIVES.has(w)) {
    return false;
  }
  return !ABSTRACT_SUFFIXES.some((suffix) => w.length > suffix.length + 2 && w.endsWith(suffix));
}
