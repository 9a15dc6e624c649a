import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, expect, test } from "vitest";

import { runJob, type ExtractionJob } from "../src/job.js";
import { readJsonl } from "../src/jsonl.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
const scratch: string[] = [];

afterAll(() => {
  for (const dir of scratch) rmSync(dir, { recursive: true, force: true });
});

function freshDir(tag: string): string {
  const dir = mkdtempSync(join(tmpdir(), `extractor-${tag}-`));
  scratch.push(dir);
  return dir;
}

/** Small english dataset for the byte-level models. One record repeats the
 *  instruction of another, one has an empty output, one blows the context. */
function byteDataset(): string {
  const dir = freshDir("data");
  const path = join(dir, "dataset.jsonl");
  const rows = [
    { id: "s1", instruction: "Sort the list of numbers", output: "Use merge sort for stability." },
    { id: "s2", instruction: "Translate hello to French", output: "Bonjour." },
    { id: "s3", instruction: "Sort the list of numbers", output: "Quicksort works in place." },
    { id: "s4", instruction: "Summarize the paragraph", output: "" },
    { id: "s5", instruction: "Write a long story", output: "x".repeat(600) },
    { id: "s6", instruction: "", output: "y" },
  ];
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join("\n") + "\n");
  return path;
}

function byteJob(outDir: string, over: Partial<ExtractionJob> = {}): ExtractionJob {
  return {
    dataset: byteDataset(),
    embeddingModel: "hash:16",
    originalModel: "seeded:1",
    prunedModel: "seeded:2",
    tau: 1.0,
    batchSize: 4,
    outDir,
    ...over,
  };
}

function readOut(dir: string, name: string) {
  return readJsonl(join(dir, name)).map((r) => r.obj);
}

test("exports stay aligned and skips go to the sidecar", () => {
  const out = freshDir("align");
  const summary = runJob(byteJob(out));
  expect(summary.kept).toBe(3);
  expect(summary.skipped).toBe(3);

  const corpus = readOut(out, "corpus.jsonl");
  const embeddings = readOut(out, "embeddings.jsonl");
  const divergences = readOut(out, "divergences.jsonl");
  const skipped = readOut(out, "skipped.jsonl");

  const ids = corpus.map((r) => r.id);
  expect(ids).toEqual(["s1", "s2", "s3"]);
  expect(embeddings.map((r) => r.id)).toEqual(ids);
  expect(divergences.map((r) => r.id)).toEqual(ids);

  const reasons = Object.fromEntries(skipped.map((r) => [r.id, r.reason as string]));
  expect(reasons.s4).toMatch(/tokenizes to nothing/);
  expect(reasons.s5).toMatch(/context overflow/);
  expect(reasons.s6).toMatch(/fewer than two tokens/);
});

test("token counts and record lengths match the tokenized text", () => {
  const out = freshDir("counts");
  runJob(byteJob(out));
  const corpus = readOut(out, "corpus.jsonl");
  const divergences = readOut(out, "divergences.jsonl");
  for (const [i, row] of corpus.entries()) {
    expect(row.x_tokens).toBe(Buffer.byteLength(row.instruction as string, "utf8"));
    expect(row.y_tokens).toBe(Buffer.byteLength(row.output as string, "utf8"));
    const rec = divergences[i]!;
    expect(rec.x_tokens).toBe(row.x_tokens);
    expect(rec.y_tokens).toBe(row.y_tokens);
    expect(rec.per_token_jsd).toHaveLength(row.y_tokens as number);
  }
});

test("per-token values live in [0, 1] and differ between real model pairs", () => {
  const out = freshDir("range");
  runJob(byteJob(out));
  let positive = 0;
  for (const rec of readOut(out, "divergences.jsonl")) {
    for (const v of rec.per_token_jsd as number[]) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
      if (v > 0) positive += 1;
    }
  }
  expect(positive).toBeGreaterThan(0);
});

test("identical model as both sides exports divergence <= 1e-6 everywhere", () => {
  const out = freshDir("self");
  runJob(byteJob(out, { prunedModel: "seeded:1" }));
  for (const rec of readOut(out, "divergences.jsonl")) {
    for (const v of rec.per_token_jsd as number[]) {
      expect(v).toBeLessThanOrEqual(1e-6);
    }
  }

  const toy = freshDir("self-toy");
  runJob(byteJob(toy, {
    dataset: join(FIXTURES, "toy-dataset.jsonl"),
    originalModel: "file:" + join(FIXTURES, "toy-original.json"),
    prunedModel: "file:" + join(FIXTURES, "toy-original.json"),
  }));
  for (const rec of readOut(toy, "divergences.jsonl")) {
    for (const v of rec.per_token_jsd as number[]) {
      expect(v).toBeLessThanOrEqual(1e-6);
    }
  }
});

test("identical instructions embed to identical vectors", () => {
  const out = freshDir("embed");
  runJob(byteJob(out));
  const embeddings = readOut(out, "embeddings.jsonl");
  const byId = Object.fromEntries(embeddings.map((r) => [r.id as string, r.vector as number[]]));
  expect(byId.s1).toEqual(byId.s3);
  expect(byId.s1).not.toEqual(byId.s2);
  const dims = new Set(embeddings.map((r) => (r.vector as number[]).length));
  expect([...dims]).toEqual([16]);
});

test("reruns and batch size changes leave every byte unchanged", () => {
  const a = freshDir("rerun-a");
  const b = freshDir("rerun-b");
  const c = freshDir("rerun-c");
  const dataset = byteDataset();
  runJob(byteJob(a, { dataset }));
  runJob(byteJob(b, { dataset }));
  runJob(byteJob(c, { dataset, batchSize: 1 }));
  for (const name of ["corpus.jsonl", "embeddings.jsonl", "divergences.jsonl", "skipped.jsonl"]) {
    const ref = readFileSync(join(a, name));
    expect(readFileSync(join(b, name)).equals(ref)).toBe(true);
    expect(readFileSync(join(c, name)).equals(ref)).toBe(true);
  }
});

test("sample limit cuts the dataset before tokenization", () => {
  const out = freshDir("limit");
  const summary = runJob(byteJob(out, { limit: 2 }));
  expect(summary.kept).toBe(2);
  expect(summary.skipped).toBe(0);
  expect(readOut(out, "corpus.jsonl").map((r) => r.id)).toEqual(["s1", "s2"]);
});

test("distribution export writes normalized token pairs", () => {
  const out = freshDir("dist");
  const summary = runJob(byteJob(out, { distributions: true }));
  expect(summary.form).toBe("distributions");
  for (const rec of readOut(out, "divergences.jsonl")) {
    const pairs = rec.token_pairs as number[][][];
    expect(pairs).toHaveLength(rec.y_tokens as number);
    for (const [p, q] of pairs.map((pair) => [pair[0]!, pair[1]!])) {
      expect(p).toHaveLength(256);
      expect(q).toHaveLength(256);
      const sum = (xs: number[]) => xs.reduce((acc, x) => acc + x, 0);
      expect(sum(p)).toBeCloseTo(1.0, 9);
      expect(sum(q)).toBeCloseTo(1.0, 9);
    }
    expect(rec.per_token_jsd).toBeUndefined();
  }
});

test("distribution export refuses oversized vocabularies", () => {
  const dir = freshDir("bigvocab");
  const words = Array.from({ length: 1500 }, (_, i) => `w${i}`);
  const spec = {
    kind: "token-table",
    tokenizer: { type: "wordlist", words },
    context: 64,
    bos_row: new Array(1500).fill(0),
    rows: words.map(() => new Array(1500).fill(0)),
  };
  const modelPath = join(dir, "wide.json");
  writeFileSync(modelPath, JSON.stringify(spec));
  const dataset = join(dir, "data.jsonl");
  writeFileSync(dataset, JSON.stringify({ id: "a", instruction: "w0", output: "w1 w2" }) + "\n");
  const job = byteJob(join(dir, "out"), {
    dataset,
    originalModel: "file:" + modelPath,
    prunedModel: "file:" + modelPath,
    distributions: true,
  });
  expect(() => runJob(job)).toThrow(/<= 1024/);
});

test("tokenizer mismatch between the model pair is rejected", () => {
  const out = freshDir("mismatch");
  const job = byteJob(out, {
    prunedModel: "file:" + join(FIXTURES, "toy-pruned.json"),
  });
  expect(() => runJob(job)).toThrow(/tokenizer mismatch/);
});

test("job parameters are validated up front", () => {
  const out = freshDir("params");
  expect(() => runJob(byteJob(out, { tau: 0 }))).toThrow(/tau/);
  expect(() => runJob(byteJob(out, { tau: NaN }))).toThrow(/tau/);
  expect(() => runJob(byteJob(out, { batchSize: 0 }))).toThrow(/batch size/);
  expect(() => runJob(byteJob(out, { limit: -1 }))).toThrow(/limit/);
});

test("malformed dataset records fail with the offending line", () => {
  const dir = freshDir("malformed");
  const dataset = join(dir, "data.jsonl");
  writeFileSync(dataset, '{"id": "a", "instruction": "hi"}\n');
  expect(() => runJob(byteJob(join(dir, "out"), { dataset }))).toThrow(/:1: field 'output'/);

  writeFileSync(dataset, [
    '{"id": "a", "instruction": "hi", "output": "there"}',
    '{"id": "a", "instruction": "again", "output": "dup"}',
  ].join("\n"));
  expect(() => runJob(byteJob(join(dir, "out"), { dataset }))).toThrow(/:2: duplicate id/);
});

test("records without ids get deterministic line-based ones", () => {
  const dir = freshDir("autoid");
  const dataset = join(dir, "data.jsonl");
  writeFileSync(dataset, [
    '{"instruction": "first task", "output": "first answer"}',
    '{"instruction": "second task", "output": "second answer"}',
  ].join("\n") + "\n");
  const out = join(dir, "out");
  runJob(byteJob(out, { dataset }));
  expect(readOut(out, "corpus.jsonl").map((r) => r.id)).toEqual(["r1", "r2"]);
});
