/**
 * Regenerate the committed sample exports in fixtures/secondary/.
 *
 * The files are produced through the same AnnotationStore the browser UI
 * uses, so they exercise the real export path (schema validation, geometry
 * checks, item_id assignment). Timestamps are fixed to keep the output
 * byte-stable across runs.
 *
 * Run from frontend/: `npm run make-exports`
 */
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { AnnotationStore } from "../src/store.js";

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..", "..");
const SCHEMA_PATH = join(REPO_ROOT, "src", "figmine", "schemas", "groundtruth.schema.json");
const OUT_DIR = join(REPO_ROOT, "fixtures", "secondary");

const REVIEWER = "fixture-reviewer";
const REVIEWED_AT = "2026-08-15T00:00:00Z";

function writeJson(path: string, payload: unknown): void {
  writeFileSync(path, JSON.stringify(payload, null, 2) + "\n");
  console.log(`wrote ${path}`);
}

function main(): void {
  const schema = JSON.parse(readFileSync(SCHEMA_PATH, "utf-8"));
  mkdirSync(OUT_DIR, { recursive: true });

  // An annotation session on one fixture figure: a single master drawn as a
  // graph, given the subfigure label "a" (typed as "(A)" to exercise
  // normalization) and a 50 nm scale bar.
  const store = new AnnotationStore(schema);
  store.loadFigure(
    "10-0004-fixture-0004_fig1",
    "figures/10-0004-fixture-0004_fig1.png",
    { width: 600, height: 400 },
  );
  const master = store.addMaster({ x0: 10, y0: 10, x1: 590, y1: 390 }, "graph");
  store.setSubfigureLabel(master, "(A)");
  store.setScaleBarFromLine(master, { x0: 480, y0: 370, x1: 560, y1: 372 }, "50 nm");
  writeJson(join(OUT_DIR, "annotation_export_sample.json"), store.exportFigure());

  // A review session: the pipeline's ground truth for the two-master figure
  // imported, accepted wholesale, and re-exported with the verdict attached.
  const review = new AnnotationStore(schema);
  const sourcePath = join(REPO_ROOT, "fixtures", "groundtruth", "10-0002-fixture-0002_fig1.json");
  review.importFigure(JSON.parse(readFileSync(sourcePath, "utf-8")));
  review.acceptAll(REVIEWER, REVIEWED_AT);
  writeJson(join(OUT_DIR, "review_accept_all_sample.json"), review.exportFigure());
}

main();
