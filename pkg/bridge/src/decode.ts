/**
 * Procedural image synthesis standing in for a frozen diffusion decoder.
 *
 * The conditioning composition is this module's documented decision
 * (ledgered in the top-level config): under "prompt+embedding" the seed
 * material digests the prompt text ("c2 words, c3 words"), the full c1
 * vector, and (seed, size, steps), so every condition the engine emits
 * changes the image; "prompt-only" ignores c1. Rendering is a handful of
 * digest-placed soft blobs over a two-color gradient, evolved once per
 * "denoising" step, using only arithmetic that is deterministic across
 * runs: identical requests yield identical PNG bytes.
 */
import { createHash } from "node:crypto";

import type { ConditioningStrategy } from "./config.js";
import { encodePng } from "./png.js";

export interface DecodeBundle {
  c1: number[];
  c2: string;
  c3: string;
}

export interface DecodeParams {
  bundle: DecodeBundle;
  width: number;
  height: number;
  steps: number;
  seed: number | string;
  conditioning: ConditioningStrategy;
}

/** xorshift128, seeded from a digest; plenty for palette/blob placement. */
class Rng {
  private s0: number;
  private s1: number;
  private s2: number;
  private s3: number;

  constructor(seed: Buffer) {
    this.s0 = seed.readUInt32LE(0) || 1;
    this.s1 = seed.readUInt32LE(4) || 2;
    this.s2 = seed.readUInt32LE(8) || 3;
    this.s3 = seed.readUInt32LE(12) || 4;
  }

  next(): number {
    const t = this.s1 << 9;
    this.s2 ^= this.s0;
    this.s3 ^= this.s1;
    this.s1 ^= this.s2;
    this.s0 ^= this.s3;
    this.s2 ^= t;
    this.s3 = (this.s3 << 11) | (this.s3 >>> 21);
    return ((this.s0 + this.s3) >>> 0) / 4294967296;
  }
}

function seedMaterial(params: DecodeParams): Buffer {
  const { bundle } = params;
  const h = createHash("sha256");
  h.update("procedural-diffusion-v1\0");
  const prompt = [bundle.c2, bundle.c3].filter((s) => s.length > 0).join(", ");
  h.update(prompt);
  h.update("\0");
  if (params.conditioning === "prompt+embedding") {
    const c1 = new Float64Array(bundle.c1);
    h.update(Buffer.from(c1.buffer, c1.byteOffset, c1.byteLength));
  }
  h.update(`\0${params.seed}\0${params.width}x${params.height}\0${params.steps}`);
  return h.digest();
}

export function renderImage(params: DecodeParams): Buffer {
  const { width, height, steps } = params;
  const rng = new Rng(seedMaterial(params));

  const palette = Array.from({ length: 2 }, () => [
    Math.floor(40 + 200 * rng.next()),
    Math.floor(40 + 200 * rng.next()),
    Math.floor(40 + 200 * rng.next()),
  ]);
  const angleX = rng.next() * 2 - 1;
  const angleY = rng.next() * 2 - 1;

  interface Blob {
    x: number;
    y: number;
    r: number;
    color: number[];
  }
  const blobs: Blob[] = Array.from({ length: 5 }, () => ({
    x: rng.next(),
    y: rng.next(),
    r: 0.08 + 0.22 * rng.next(),
    color: [
      Math.floor(30 + 220 * rng.next()),
      Math.floor(30 + 220 * rng.next()),
      Math.floor(30 + 220 * rng.next()),
    ],
  }));
  // each refinement step nudges the blobs deterministically
  for (let s = 1; s < Math.min(steps, 64); s += 1) {
    for (const blob of blobs) {
      blob.x = (blob.x + 0.03 * (rng.next() - 0.5)) % 1;
      blob.y = (blob.y + 0.03 * (rng.next() - 0.5)) % 1;
      if (blob.x < 0) blob.x += 1;
      if (blob.y < 0) blob.y += 1;
    }
  }

  const rgb = Buffer.alloc(width * height * 3);
  const span = Math.abs(angleX) + Math.abs(angleY) || 1;
  for (let y = 0; y < height; y += 1) {
    const fy = y / height;
    for (let x = 0; x < width; x += 1) {
      const fx = x / width;
      let t = (angleX * fx + angleY * fy) / span;
      t = (t + 1) / 2;
      let r = palette[0][0] * (1 - t) + palette[1][0] * t;
      let g = palette[0][1] * (1 - t) + palette[1][1] * t;
      let b = palette[0][2] * (1 - t) + palette[1][2] * t;
      for (const blob of blobs) {
        const dx = fx - blob.x;
        const dy = fy - blob.y;
        const d2 = dx * dx + dy * dy;
        const r2 = blob.r * blob.r;
        if (d2 < r2) {
          const w = 1 - d2 / r2; // quadratic falloff, no trig
          r = r * (1 - w) + blob.color[0] * w;
          g = g * (1 - w) + blob.color[1] * w;
          b = b * (1 - w) + blob.color[2] * w;
        }
      }
      const offset = (y * width + x) * 3;
      rgb[offset] = r;
      rgb[offset + 1] = g;
      rgb[offset + 2] = b;
    }
  }
  return encodePng(width, height, rgb);
}
