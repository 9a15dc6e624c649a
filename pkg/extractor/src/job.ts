/**
 * Extraction job: turn a raw instruction dataset plus an original/pruned
 * model pair into the three interchange files the selection engine reads.
 *
 *   corpus.jsonl       {id, instruction, output, x_tokens, y_tokens}
 *   embeddings.jsonl   {id, vector}
 *   divergences.jsonl  {id, x_tokens, y_tokens, per_token_jsd}       (default)
 *                      {id, x_tokens, y_tokens, token_pairs}         (--distributions)
 *   skipped.jsonl      {id, line, reason} sidecar for dropped samples
 *
 * Sequences are framed as [BOS, x_1..x_n, y_1..y_m]. x_tokens counts the
 * instruction tokens only (the BOS framing token is excluded); y_tokens
 * counts exactly the tokens of the output, and the divergence record holds
 * one entry per output token. Samples the models cannot score (context
 * overflow, outputs that tokenize to nothing, fewer than two tokens total)
 * go to the sidecar log and are excluded from all three exports, which
 * keeps the files aligned.
 */
import { join } from "node:path";

import { jsdBase2, softmaxWithTemperature } from "./divergence.js";
import { loadEmbedder } from "./embedder.js";
import { ConfigError, InputError } from "./errors.js";
import { readJsonl, writeJsonl } from "./jsonl.js";
import { loadCausalModel, type CausalModel } from "./models.js";

export interface ExtractionJob {
  dataset: string;
  embeddingModel: string;
  originalModel: string;
  prunedModel: string;
  tau: number;
  batchSize: number;
  outDir: string;
  limit?: number;
  distributions?: boolean;
}

export interface JobSummary {
  kept: number;
  skipped: number;
  dim: number;
  form: "per-token-jsd" | "distributions";
}

const DISTRIBUTION_VOCAB_LIMIT = 1024;

interface PreparedSample {
  id: string;
  instruction: string;
  output: string;
  xIds: number[];
  yIds: number[];
}

interface SkipEntry {
  id: string;
  line: number;
  reason: string;
}

export function validateJob(job: ExtractionJob): void {
  if (!(job.tau > 0) || !Number.isFinite(job.tau)) {
    throw new ConfigError(`tau must be positive and finite, got ${job.tau}`);
  }
  if (!Number.isInteger(job.batchSize) || job.batchSize < 1) {
    throw new ConfigError(`batch size must be an integer >= 1, got ${job.batchSize}`);
  }
  if (job.limit !== undefined && (!Number.isInteger(job.limit) || job.limit < 1)) {
    throw new ConfigError(`sample limit must be an integer >= 1, got ${job.limit}`);
  }
}

function readDataset(path: string, limit?: number): { id: string; instruction: string; output: string; line: number }[] {
  const rows = readJsonl(path);
  if (rows.length === 0) throw new InputError(`${path}: dataset is empty`);
  const out: { id: string; instruction: string; output: string; line: number }[] = [];
  const seen = new Set<string>();
  for (const { line, obj } of rows) {
    if (limit !== undefined && out.length >= limit) break;
    const where = `${path}:${line}`;
    for (const key of ["instruction", "output"]) {
      if (typeof obj[key] !== "string") {
        throw new InputError(`${where}: field '${key}' must be a string`);
      }
    }
    let id: string;
    if (obj.id === undefined) {
      id = `r${line}`;
    } else if (typeof obj.id === "string" && obj.id.length > 0) {
      id = obj.id;
    } else {
      throw new InputError(`${where}: id must be a nonempty string`);
    }
    if (seen.has(id)) throw new InputError(`${where}: duplicate id '${id}'`);
    seen.add(id);
    out.push({ id, instruction: obj.instruction as string, output: obj.output as string, line });
  }
  return out;
}

function prepareCorpus(
  job: ExtractionJob,
  original: CausalModel,
  pruned: CausalModel,
): { kept: PreparedSample[]; skips: SkipEntry[] } {
  const tokenizer = original.tokenizer;
  const context = Math.min(original.contextSize, pruned.contextSize);
  const kept: PreparedSample[] = [];
  const skips: SkipEntry[] = [];
  for (const entry of readDataset(job.dataset, job.limit)) {
    const xIds = tokenizer.encode(entry.instruction);
    const yIds = tokenizer.encode(entry.output);
    let reason: string | null = null;
    if (yIds.length === 0) {
      reason = "output tokenizes to nothing";
    } else if (xIds.length + yIds.length < 2) {
      reason = "fewer than two tokens in total";
    } else if (1 + xIds.length + yIds.length > context) {
      reason = `context overflow: ${1 + xIds.length + yIds.length} tokens > ${context}`;
    }
    if (reason !== null) {
      skips.push({ id: entry.id, line: entry.line, reason });
      continue;
    }
    kept.push({ id: entry.id, instruction: entry.instruction, output: entry.output, xIds, yIds });
  }
  return { kept, skips };
}

function batches<T>(items: T[], size: number): T[][] {
  const out: T[][] = [];
  for (let i = 0; i < items.length; i += size) out.push(items.slice(i, i + size));
  return out;
}

export function embedCorpus(job: ExtractionJob, kept: PreparedSample[]): object[] {
  const embedder = loadEmbedder(job.embeddingModel);
  const records: object[] = [];
  for (const batch of batches(kept, job.batchSize)) {
    for (const sample of batch) {
      const vec = embedder.embed(sample.instruction);
      if (vec.length !== embedder.dim) {
        throw new InputError(`embedding dimension drifted: got ${vec.length}, expected ${embedder.dim}`);
      }
      records.push({ id: sample.id, vector: Array.from(vec) });
    }
  }
  return records;
}

export function exportDivergences(
  job: ExtractionJob,
  original: CausalModel,
  pruned: CausalModel,
  kept: PreparedSample[],
): object[] {
  if (job.distributions && original.tokenizer.vocabSize > DISTRIBUTION_VOCAB_LIMIT) {
    throw new ConfigError(
      `distribution export is limited to vocabularies <= ${DISTRIBUTION_VOCAB_LIMIT}, ` +
        `got ${original.tokenizer.vocabSize}`,
    );
  }
  const bos = original.tokenizer.bosId;
  const records: object[] = [];
  for (const batch of batches(kept, job.batchSize)) {
    for (const sample of batch) {
      const prefix = [bos, ...sample.xIds];
      const jsd: number[] = [];
      const pairs: number[][][] = [];
      for (const yId of sample.yIds) {
        const p = softmaxWithTemperature(original.logitRow(prefix), job.tau);
        const q = softmaxWithTemperature(pruned.logitRow(prefix), job.tau);
        if (job.distributions) {
          pairs.push([Array.from(p), Array.from(q)]);
        } else {
          jsd.push(jsdBase2(p, q));
        }
        prefix.push(yId);
      }
      const base = { id: sample.id, x_tokens: sample.xIds.length, y_tokens: sample.yIds.length };
      records.push(job.distributions ? { ...base, token_pairs: pairs } : { ...base, per_token_jsd: jsd });
    }
  }
  return records;
}

export function runJob(job: ExtractionJob): JobSummary {
  validateJob(job);
  const original = loadCausalModel(job.originalModel);
  const pruned = loadCausalModel(job.prunedModel);
  if (original.tokenizer.signature !== pruned.tokenizer.signature) {
    throw new InputError(
      `tokenizer mismatch: '${job.originalModel}' and '${job.prunedModel}' ` +
        "do not share one vocabulary",
    );
  }
  const embedder = loadEmbedder(job.embeddingModel);

  const { kept, skips } = prepareCorpus(job, original, pruned);
  if (kept.length === 0) throw new InputError("no samples survived tokenization");

  const corpusRecords = kept.map((s) => ({
    id: s.id,
    instruction: s.instruction,
    output: s.output,
    x_tokens: s.xIds.length,
    y_tokens: s.yIds.length,
  }));
  writeJsonl(join(job.outDir, "corpus.jsonl"), corpusRecords);
  writeJsonl(join(job.outDir, "skipped.jsonl"), skips);
  writeJsonl(join(job.outDir, "embeddings.jsonl"), embedCorpus(job, kept));
  writeJsonl(join(job.outDir, "divergences.jsonl"), exportDivergences(job, original, pruned, kept));

  return {
    kept: kept.length,
    skipped: skips.length,
    dim: embedder.dim,
    form: job.distributions ? "distributions" : "per-token-jsd",
  };
}
