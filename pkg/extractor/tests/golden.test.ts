/**
 * Cross-component fixture: the scalar per-token export must agree with what
 * the downstream selection engine computes from the same distributions.
 * tests/fixtures/golden-divergence.json holds the engine's values for the
 * toy token-table pair (see tools/regen_golden.py for how it is produced).
 */
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, expect, test } from "vitest";

import { runJob } from "../src/job.js";
import { readJsonl } from "../src/jsonl.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
const scratch: string[] = [];

afterAll(() => {
  for (const dir of scratch) rmSync(dir, { recursive: true, force: true });
});

function toyRun(distributions: boolean): string {
  const out = mkdtempSync(join(tmpdir(), "extractor-golden-"));
  scratch.push(out);
  runJob({
    dataset: join(FIXTURES, "toy-dataset.jsonl"),
    embeddingModel: "hash:8",
    originalModel: "file:" + join(FIXTURES, "toy-original.json"),
    prunedModel: "file:" + join(FIXTURES, "toy-pruned.json"),
    tau: 1.0,
    batchSize: 2,
    outDir: out,
    distributions,
  });
  return out;
}

test("toy four-word fixture matches the engine-computed golden values", () => {
  const golden: Record<string, number[]> = JSON.parse(
    readFileSync(join(FIXTURES, "golden-divergence.json"), "utf8"),
  );
  const out = toyRun(false);
  const records = readJsonl(join(out, "divergences.jsonl")).map((r) => r.obj);
  expect(records).toHaveLength(Object.keys(golden).length);
  for (const rec of records) {
    const expected = golden[rec.id as string];
    expect(expected).toBeDefined();
    const actual = rec.per_token_jsd as number[];
    expect(actual).toHaveLength(expected!.length);
    for (const [m, value] of actual.entries()) {
      expect(Math.abs(value - expected![m]!)).toBeLessThanOrEqual(1e-9);
    }
  }
});

test("toy corpus records carry the fixture's exact token counts", () => {
  const out = toyRun(false);
  const corpus = readJsonl(join(out, "corpus.jsonl")).map((r) => r.obj);
  expect(corpus.map((r) => [r.id, r.x_tokens, r.y_tokens])).toEqual([
    ["t1", 2, 3],
    ["t2", 1, 2],
    ["t3", 0, 2],
  ]);
});

test("distribution export of the fixture stays within the word vocabulary", () => {
  const out = toyRun(true);
  for (const rec of readJsonl(join(out, "divergences.jsonl")).map((r) => r.obj)) {
    for (const pair of rec.token_pairs as number[][][]) {
      expect(pair[0]).toHaveLength(4);
      expect(pair[1]).toHaveLength(4);
    }
  }
});

test("repeated tokens reuse the same conditional row", () => {
  // t1 ends with ...delta alpha and t2 opens with alpha after beta: positions
  // whose previous token coincides must produce identical per-token values.
  const out = toyRun(false);
  const byId = Object.fromEntries(
    readJsonl(join(out, "divergences.jsonl")).map((r) => [r.obj.id as string, r.obj.per_token_jsd as number[]]),
  );
  // t1 position 0 and t2 position 0 both condition on previous token beta
  expect(byId.t1![0]).toBe(byId.t2![0]);
  // t1 position 2 and t3 position 1 both condition on previous token delta
  expect(byId.t1![2]).toBe(byId.t3![1]);
});
