#!/usr/bin/env node
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { ConfigError, InputError } from "./errors.js";
import { runJob, type ExtractionJob } from "./job.js";

const USAGE = `usage: extractor --dataset FILE --embedding-model ID --original-model ID
                 --pruned-model ID --out DIR [--tau F] [--batch-size N]
                 [--limit N] [--distributions]

Reads a JSONL instruction dataset ({id?, instruction, output} per line) and
writes corpus.jsonl, embeddings.jsonl, divergences.jsonl, and skipped.jsonl
to the output directory.

  --dataset FILE          instruction dataset to export
  --embedding-model ID    sentence embedder, e.g. hash:64
  --original-model ID     original causal model, e.g. seeded:1 or file:spec.json
  --pruned-model ID       pruned causal model (must share the tokenizer)
  --out DIR               output directory
  --tau F                 softmax temperature (default 1.0)
  --batch-size N          inference batch size (default 16)
  --limit N               only read the first N dataset records
  --distributions         export full distribution pairs instead of scalar
                          per-token values (vocabularies <= 1024 only)
`;

function numberFlag(raw: string | undefined, name: string, fallback: number): number {
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (Number.isNaN(value)) throw new ConfigError(`--${name} expects a number, got '${raw}'`);
  return value;
}

export function jobFromArgs(argv: string[]): ExtractionJob | null {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: false,
      options: {
        dataset: { type: "string" },
        "embedding-model": { type: "string" },
        "original-model": { type: "string" },
        "pruned-model": { type: "string" },
        out: { type: "string" },
        tau: { type: "string" },
        "batch-size": { type: "string" },
        limit: { type: "string" },
        distributions: { type: "boolean" },
        help: { type: "boolean" },
      },
    });
  } catch (err) {
    throw new ConfigError((err as Error).message);
  }
  const v = parsed.values;
  if (v.help) return null;
  for (const name of ["dataset", "embedding-model", "original-model", "pruned-model", "out"] as const) {
    if (v[name] === undefined) throw new ConfigError(`missing required flag --${name}`);
  }
  const job: ExtractionJob = {
    dataset: v.dataset!,
    embeddingModel: v["embedding-model"]!,
    originalModel: v["original-model"]!,
    prunedModel: v["pruned-model"]!,
    outDir: v.out!,
    tau: numberFlag(v.tau, "tau", 1.0),
    batchSize: numberFlag(v["batch-size"], "batch-size", 16),
  };
  if (v.limit !== undefined) job.limit = numberFlag(v.limit, "limit", 0);
  if (v.distributions) job.distributions = true;
  return job;
}

export function main(argv: string[]): number {
  let job: ExtractionJob | null;
  try {
    job = jobFromArgs(argv);
  } catch (err) {
    if (err instanceof ConfigError) {
      console.error(`extractor: config error: ${err.message}`);
      return 4;
    }
    throw err;
  }
  if (job === null) {
    process.stdout.write(USAGE);
    return 0;
  }
  try {
    const summary = runJob(job);
    console.log(`corpus: ${summary.kept} samples kept, ${summary.skipped} skipped`);
    console.log(`embeddings: dim ${summary.dim}`);
    console.log(`divergences: form ${summary.form}`);
    console.log(`wrote 4 files to ${job.outDir}`);
    return 0;
  } catch (err) {
    if (err instanceof ConfigError) {
      console.error(`extractor: config error: ${err.message}`);
      return 4;
    }
    if (err instanceof InputError) {
      console.error(`extractor: input error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
