/**
 * Deterministic hashing helpers. Everything downstream (embedding vectors,
 * built-in model logits) must reproduce bit for bit across runs and
 * platforms, so all pseudo-randomness is derived from SHA-256 digests and
 * 32-bit integer arithmetic only.
 */
import { createHash } from "node:crypto";

export function digestOf(text: string): Buffer {
  return createHash("sha256").update(text, "utf8").digest();
}

export function seedOf(text: string): number {
  return digestOf(text).readUInt32LE(0);
}

/** mulberry32: uniform doubles in [0, 1) from exact 32-bit integer ops. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
