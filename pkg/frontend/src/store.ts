/**
 * Annotation state for one figure: masters with their dependents, insets,
 * subfigure labels and scale bars, plus an undo/redo history and a review
 * verdict. The store is DOM-free so every rule it enforces is unit-testable.
 *
 * Geometry rules are the pipeline's own: dependents and insets must sit
 * fully inside their master (inclusive containment) and two masters may
 * overlap by at most `MASTER_OVERLAP_IOU_TOLERANCE` IoU. Violations are
 * rejected at mutation time, so they can never reach an export.
 */
import {
  MASTER_OVERLAP_IOU_TOLERANCE,
  containsBox,
  iou,
  isDrawableBox,
} from "./geometry.js";
import type {
  Annotation,
  Box,
  GroundTruthFile,
  ImageClass,
  ImageSize,
  PipelineFigure,
  ReviewInfo,
  Verdict,
} from "./types.js";
import { isImageClass } from "./types.js";
import type { Schema } from "./validate.js";
import { validateValue } from "./validate.js";

/** How many states the undo stack retains. */
export const UNDO_DEPTH = 50;

/** Raised when a mutation would violate an annotation rule. */
export class AnnotationError extends Error {
  /** The offending rectangle, if the rule concerned one (for visual cues). */
  readonly box: Box | null;

  constructor(message: string, box: Box | null = null) {
    super(message);
    this.name = "AnnotationError";
    this.box = box;
  }
}

export interface FigureState {
  figure_id: string;
  image_path: string | null;
  image_size: ImageSize | null;
  annotations: Annotation[];
  review: ReviewInfo | null;
}

/** Join key shared with the pipeline: `<figure_id>/<subfigure_id or index>`. */
export function itemId(figureId: string, subfigureId: string | null, index: number): string {
  return `${figureId}/${subfigureId !== null ? subfigureId : index}`;
}

/** Canonical subfigure identifier: "(A)" -> "a", empty -> null. */
export function normalizeSubfigureId(raw: string): string | null {
  let text = raw.trim();
  text = text.replace(/^\(+/, "").replace(/\)+$/, "");
  text = text.replace(/\.+$/, "").trim().toLowerCase();
  return text.length > 0 ? text : null;
}

/** Scale-bar pixel length is the long side of the drawn line's box. */
export function scaleBarLengthPx(line: Box): number {
  return Math.max(line.x1 - line.x0, line.y1 - line.y0);
}

function cloneState(state: FigureState): FigureState {
  return structuredClone(state);
}

function emptyState(figureId: string): FigureState {
  return {
    figure_id: figureId,
    image_path: null,
    image_size: null,
    annotations: [],
    review: null,
  };
}

export class AnnotationStore {
  private schema: Schema;
  private current: FigureState;
  private past: FigureState[] = [];
  private future: FigureState[] = [];

  /** Last rejected mutation, for the canvas layer to flash a cue. */
  lastRejection: AnnotationError | null = null;

  constructor(schema: Schema) {
    this.schema = schema;
    this.current = emptyState("untitled");
  }

  /* ----------------------------- reads ------------------------------ */

  get state(): FigureState {
    return this.current;
  }

  get annotations(): readonly Annotation[] {
    return this.current.annotations;
  }

  masterCount(): number {
    return this.current.annotations.length;
  }

  dependentCount(): number {
    return this.current.annotations.reduce((n, a) => n + a.dependents.length, 0);
  }

  insetCount(): number {
    return this.current.annotations.reduce((n, a) => n + a.insets.length, 0);
  }

  canUndo(): boolean {
    return this.past.length > 0;
  }

  canRedo(): boolean {
    return this.future.length > 0;
  }

  /* --------------------------- lifecycle ---------------------------- */

  /** Start annotating a figure from scratch; clears history. */
  loadFigure(
    figureId: string,
    imagePath: string | null = null,
    imageSize: ImageSize | null = null,
  ): void {
    if (figureId.length === 0) {
      throw new AnnotationError("figure_id must not be empty");
    }
    this.current = { ...emptyState(figureId), image_path: imagePath, image_size: imageSize };
    this.past = [];
    this.future = [];
    this.lastRejection = null;
  }

  /** Pre-populate boxes from one figure of a pipeline document. */
  seedFromPipeline(figure: PipelineFigure, imageSize: ImageSize | null = null): void {
    this.loadFigure(figure.figure_id, figure.image_path, imageSize);
    this.current.annotations = figure.masters.map((m) => ({
      item_id: "",
      box: { ...m.box },
      classification: m.classification,
      subfigure_id: m.subfigure_id,
      dependents: m.dependents.map((b) => ({ ...b })),
      insets: m.insets.map((b) => ({ ...b })),
      scale_bar:
        m.scale !== null
          ? { length_px: m.scale.bar_length_px, label_text: m.scale.label_text }
          : null,
      reviewed: false,
    }));
    this.renumber();
  }

  /* --------------------------- mutations ---------------------------- */

  /**
   * Run one mutation transactionally: checks and edits both happen inside
   * `apply`; an AnnotationError rolls the state back untouched and is kept
   * in `lastRejection` so the UI can show why the gesture was blocked.
   */
  private mutate<T>(apply: (state: FigureState) => T): T {
    const before = cloneState(this.current);
    let result: T;
    try {
      result = apply(this.current);
    } catch (err) {
      this.current = before;
      if (err instanceof AnnotationError) {
        this.lastRejection = err;
      }
      throw err;
    }
    this.past.push(before);
    if (this.past.length > UNDO_DEPTH) {
      this.past.shift();
    }
    this.future = [];
    this.lastRejection = null;
    this.renumber();
    return result;
  }

  private master(state: FigureState, index: number): Annotation {
    const ann = state.annotations[index];
    if (ann === undefined) {
      throw new AnnotationError(`no master at index ${index}`);
    }
    return ann;
  }

  private checkInsideImage(state: FigureState, box: Box): void {
    if (box.x0 < 0 || box.y0 < 0) {
      throw new AnnotationError("box extends past the top-left image edge", box);
    }
    const size = state.image_size;
    if (size !== null && (box.x1 > size.width || box.y1 > size.height)) {
      throw new AnnotationError("box extends past the image edge", box);
    }
  }

  private checkMasterOverlap(state: FigureState, box: Box, ignoreIndex: number | null): void {
    for (let i = 0; i < state.annotations.length; i += 1) {
      if (i === ignoreIndex) {
        continue;
      }
      const overlap = iou(box, state.annotations[i]!.box);
      if (overlap > MASTER_OVERLAP_IOU_TOLERANCE) {
        throw new AnnotationError(
          `masters may overlap by at most IoU ${MASTER_OVERLAP_IOU_TOLERANCE}; ` +
            `this box overlaps master ${i} by ${overlap.toFixed(3)}`,
          box,
        );
      }
    }
  }

  addMaster(box: Box, classification: ImageClass = "unclear"): number {
    return this.mutate((state) => {
      if (!isDrawableBox(box)) {
        throw new AnnotationError("master box must have positive area", box);
      }
      this.checkInsideImage(state, box);
      this.checkMasterOverlap(state, box, null);
      state.annotations.push({
        item_id: "",
        box: { ...box },
        classification,
        subfigure_id: null,
        dependents: [],
        insets: [],
        scale_bar: null,
        reviewed: false,
      });
      return state.annotations.length - 1;
    });
  }

  private addChildBox(index: number, box: Box, kind: "dependents" | "insets"): void {
    const noun = kind.slice(0, -1);
    this.mutate((state) => {
      const ann = this.master(state, index);
      if (!isDrawableBox(box)) {
        throw new AnnotationError(`${noun} box must have positive area`, box);
      }
      if (!containsBox(ann.box, box)) {
        throw new AnnotationError(`${noun} must lie fully inside its master box`, box);
      }
      ann[kind].push({ ...box });
    });
  }

  addDependent(index: number, box: Box): void {
    this.addChildBox(index, box, "dependents");
  }

  addInset(index: number, box: Box): void {
    this.addChildBox(index, box, "insets");
  }

  moveMaster(index: number, box: Box): void {
    this.mutate((state) => {
      const ann = this.master(state, index);
      if (!isDrawableBox(box)) {
        throw new AnnotationError("master box must have positive area", box);
      }
      this.checkInsideImage(state, box);
      this.checkMasterOverlap(state, box, index);
      for (const child of [...ann.dependents, ...ann.insets]) {
        if (!containsBox(box, child)) {
          throw new AnnotationError("moved master would no longer contain its children", box);
        }
      }
      ann.box = { ...box };
    });
  }

  reclassify(index: number, classification: ImageClass): void {
    this.mutate((state) => {
      if (!isImageClass(classification)) {
        throw new AnnotationError(`unknown image class '${classification}'`);
      }
      this.master(state, index).classification = classification;
    });
  }

  setSubfigureLabel(index: number, raw: string | null): void {
    this.mutate((state) => {
      this.master(state, index).subfigure_id = raw === null ? null : normalizeSubfigureId(raw);
    });
  }

  /** Attach a scale bar from a drawn line box and its label text. */
  setScaleBarFromLine(index: number, line: Box, labelText: string): void {
    this.mutate((state) => {
      const ann = this.master(state, index);
      if (!containsBox(ann.box, line)) {
        throw new AnnotationError("scale bar must lie fully inside its master box", line);
      }
      const length = scaleBarLengthPx(line);
      if (length < 1) {
        throw new AnnotationError("scale bar must span at least one pixel", line);
      }
      ann.scale_bar = { length_px: length, label_text: labelText };
    });
  }

  /** Replace the label text of an existing scale bar. */
  setScaleBarLabel(index: number, labelText: string): void {
    this.mutate((state) => {
      const ann = this.master(state, index);
      if (ann.scale_bar === null) {
        throw new AnnotationError("draw the scale bar line before entering its label");
      }
      ann.scale_bar = { ...ann.scale_bar, label_text: labelText };
    });
  }

  clearScaleBar(index: number): void {
    this.mutate((state) => {
      this.master(state, index).scale_bar = null;
    });
  }

  deleteMaster(index: number): void {
    this.mutate((state) => {
      this.master(state, index);
      state.annotations.splice(index, 1);
    });
  }

  /* ----------------------------- review ----------------------------- */

  markReviewed(index: number, reviewed = true): void {
    this.mutate((state) => {
      this.master(state, index).reviewed = reviewed;
    });
  }

  /** Record the reviewer's verdict for the whole figure. */
  setReview(reviewer: string, verdict: Verdict, reviewedAt: string): void {
    this.mutate((state) => {
      if (reviewer.trim().length === 0) {
        throw new AnnotationError("reviewer id must not be empty");
      }
      state.review = { reviewer: reviewer.trim(), reviewed_at: reviewedAt, verdict };
    });
  }

  /** Accept every master as-is and record an 'accepted' verdict. */
  acceptAll(reviewer: string, reviewedAt: string): void {
    this.mutate((state) => {
      if (reviewer.trim().length === 0) {
        throw new AnnotationError("reviewer id must not be empty");
      }
      for (const ann of state.annotations) {
        ann.reviewed = true;
      }
      state.review = { reviewer: reviewer.trim(), reviewed_at: reviewedAt, verdict: "accepted" };
    });
  }

  /* --------------------------- undo / redo -------------------------- */

  undo(): boolean {
    const previous = this.past.pop();
    if (previous === undefined) {
      return false;
    }
    this.future.push(this.current);
    this.current = previous;
    return true;
  }

  redo(): boolean {
    const next = this.future.pop();
    if (next === undefined) {
      return false;
    }
    this.past.push(this.current);
    this.current = next;
    return true;
  }

  /* ------------------------- import / export ------------------------ */

  private renumber(): void {
    this.current.annotations.forEach((ann, index) => {
      ann.item_id = itemId(this.current.figure_id, ann.subfigure_id, index);
    });
  }

  /**
   * Geometry violations in the given state. Mutations should make this
   * unreachable; it is re-checked on import and export as a backstop.
   */
  geometryIssues(state: FigureState = this.current): string[] {
    const issues: string[] = [];
    state.annotations.forEach((ann, i) => {
      for (const [kind, boxes] of [
        ["dependent", ann.dependents],
        ["inset", ann.insets],
      ] as const) {
        boxes.forEach((child, j) => {
          if (!containsBox(ann.box, child)) {
            issues.push(`master ${i}: ${kind} ${j} lies outside the master box`);
          }
        });
      }
      for (let j = i + 1; j < state.annotations.length; j += 1) {
        const overlap = iou(ann.box, state.annotations[j]!.box);
        if (overlap > MASTER_OVERLAP_IOU_TOLERANCE) {
          issues.push(
            `masters ${i} and ${j} overlap by IoU ${overlap.toFixed(3)} ` +
              `(tolerance ${MASTER_OVERLAP_IOU_TOLERANCE})`,
          );
        }
      }
    });
    return issues;
  }

  /** Serialize the current figure; refuses to produce an invalid file. */
  exportFigure(): GroundTruthFile {
    this.renumber();
    const payload: GroundTruthFile = {
      schema_version: "1",
      figure_id: this.current.figure_id,
      ...(this.current.image_size !== null ? { image_size: { ...this.current.image_size } } : {}),
      annotations: this.current.annotations.map((ann) => structuredClone(ann)),
      review: this.current.review !== null ? { ...this.current.review } : null,
    };
    const problems = [...validateValue(this.schema, payload), ...this.geometryIssues()];
    if (problems.length > 0) {
      throw new AnnotationError(`export blocked:\n  ${problems.join("\n  ")}`);
    }
    return payload;
  }

  /**
   * Adopt a previously exported file (or pipeline-written ground truth).
   * A payload that fails the schema or the geometry rules is refused with
   * a diagnostic and the current state is left untouched.
   */
  importFigure(payload: unknown): void {
    const schemaErrors = validateValue(this.schema, payload);
    if (schemaErrors.length > 0) {
      throw new AnnotationError(
        `load refused: file does not match the ground-truth schema:\n  ${schemaErrors.join("\n  ")}`,
      );
    }
    const file = payload as GroundTruthFile;
    const next: FigureState = {
      figure_id: file.figure_id,
      image_path: null,
      image_size: file.image_size !== undefined ? { ...file.image_size } : null,
      annotations: file.annotations.map((ann) => ({
        item_id: ann.item_id,
        box: { ...ann.box },
        classification: ann.classification,
        subfigure_id: ann.subfigure_id ?? null,
        dependents: (ann.dependents ?? []).map((b) => ({ ...b })),
        insets: (ann.insets ?? []).map((b) => ({ ...b })),
        scale_bar: ann.scale_bar != null ? { ...ann.scale_bar } : null,
        reviewed: ann.reviewed ?? false,
      })),
      review: file.review != null ? { ...file.review } : null,
    };
    const geometryErrors = this.geometryIssues(next);
    if (geometryErrors.length > 0) {
      throw new AnnotationError(
        `load refused: geometry rules violated:\n  ${geometryErrors.join("\n  ")}`,
      );
    }
    this.current = next;
    this.past = [];
    this.future = [];
    this.lastRejection = null;
    this.renumber();
  }
}
