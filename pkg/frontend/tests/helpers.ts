import { readFileSync, readdirSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { Schema } from "../src/validate.js";

/** The annotator lives inside the pipeline repository; walk up to its root. */
export const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

export function loadSchema(): Schema {
  const path = join(REPO_ROOT, "src", "figmine", "schemas", "groundtruth.schema.json");
  return JSON.parse(readFileSync(path, "utf-8"));
}

export function groundTruthIds(): string[] {
  const dir = join(REPO_ROOT, "fixtures", "groundtruth");
  return readdirSync(dir)
    .filter((name) => name.endsWith(".json"))
    .map((name) => name.replace(/\.json$/, ""))
    .sort();
}

export function loadGroundTruth(figureId: string): Record<string, unknown> {
  const path = join(REPO_ROOT, "fixtures", "groundtruth", `${figureId}.json`);
  return JSON.parse(readFileSync(path, "utf-8"));
}
