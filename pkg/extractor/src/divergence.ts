/**
 * Temperature softmax and base-2 Jensen-Shannon divergence.
 *
 * The JSD here must agree with the consumer of the exported files, so it
 * follows the same conventions: probabilities compared against the mixture
 * M = (P+Q)/2, zero entries contribute nothing (0*log 0 = 0), base-2 logs,
 * and the result clamped to [0, 1] to absorb float round-off.
 */

export function softmaxWithTemperature(logits: ArrayLike<number>, tau: number): Float64Array {
  if (!(tau > 0) || !Number.isFinite(tau)) throw new Error("tau must be positive and finite");
  const n = logits.length;
  if (n === 0) throw new Error("logits must be nonempty");
  const scaled = new Float64Array(n);
  let max = -Infinity;
  for (let i = 0; i < n; i++) {
    const z = logits[i]!;
    if (!Number.isFinite(z)) throw new Error("logits must be finite");
    scaled[i] = z / tau;
    if (scaled[i]! > max) max = scaled[i]!;
  }
  let total = 0;
  for (let i = 0; i < n; i++) {
    scaled[i] = Math.exp(scaled[i]! - max);
    total += scaled[i]!;
  }
  for (let i = 0; i < n; i++) scaled[i] = scaled[i]! / total;
  return scaled;
}

export function jsdBase2(p: ArrayLike<number>, q: ArrayLike<number>): number {
  if (p.length !== q.length || p.length === 0) {
    throw new Error("P and Q must be nonempty vectors over the same support");
  }
  let pSum = 0;
  let qSum = 0;
  for (let i = 0; i < p.length; i++) {
    const pi = p[i]!;
    const qi = q[i]!;
    const m = (pi + qi) * 0.5;
    if (pi > 0) pSum += pi * Math.log2(pi / m);
    if (qi > 0) qSum += qi * Math.log2(qi / m);
  }
  const value = 0.5 * pSum + 0.5 * qSum;
  return Math.min(1, Math.max(0, value));
}
