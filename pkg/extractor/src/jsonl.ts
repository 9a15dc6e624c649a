import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { InputError } from "./errors.js";

export interface JsonlRow {
  line: number;
  obj: Record<string, unknown>;
}

export function readJsonl(path: string): JsonlRow[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new InputError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const rows: JsonlRow[] = [];
  text.split("\n").forEach((line, idx) => {
    if (!line.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new InputError(`${path}:${idx + 1}: invalid JSON: ${(err as Error).message}`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new InputError(`${path}:${idx + 1}: record must be a JSON object`);
    }
    rows.push({ line: idx + 1, obj: obj as Record<string, unknown> });
  });
  return rows;
}

/** Key order in each line follows the object's insertion order, so callers
 *  control the exact bytes; reruns of the same job rewrite identical files. */
export function writeJsonl(path: string, records: object[]): void {
  mkdirSync(dirname(path), { recursive: true });
  const body = records.map((r) => JSON.stringify(r)).join("\n");
  writeFileSync(path, body.length > 0 ? body + "\n" : "");
}
