/** Wire types shared with the mining pipeline's JSON outputs. */

/** Classes a master image may carry, in canonical order (used for shortcuts). */
export const IMAGE_CLASSES = [
  "microscopy",
  "diffraction",
  "graph",
  "illustration",
  "photo",
  "parent",
  "unclear",
] as const;

export type ImageClass = (typeof IMAGE_CLASSES)[number];

export function isImageClass(value: unknown): value is ImageClass {
  return typeof value === "string" && (IMAGE_CLASSES as readonly string[]).includes(value);
}

/** What a drawn rectangle or text entry is meant to be. */
export const ROLES = [
  "master",
  "dependent",
  "inset",
  "subfigure_label",
  "scale_bar_line",
  "scale_bar_label",
] as const;

export type Role = (typeof ROLES)[number];

/** Pixel rectangle, inclusive corners, image coordinate space. */
export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface ScaleBar {
  length_px: number;
  label_text: string;
}

/** One master image plus everything attached to it. */
export interface Annotation {
  item_id: string;
  box: Box;
  classification: ImageClass;
  subfigure_id: string | null;
  dependents: Box[];
  insets: Box[];
  scale_bar: ScaleBar | null;
  reviewed: boolean;
}

export type Verdict = "accepted" | "edited" | "rejected";

export interface ReviewInfo {
  reviewer: string;
  reviewed_at: string;
  verdict: Verdict;
}

export interface ImageSize {
  width: number;
  height: number;
}

/** The export format: one file per figure, validated against the ground-truth schema. */
export interface GroundTruthFile {
  schema_version: "1";
  figure_id: string;
  image_size?: ImageSize;
  annotations: Annotation[];
  review: ReviewInfo | null;
}

/* ------------------------------------------------------------------ */
/* Pipeline document subset (read-only: used to pre-populate boxes).  */
/* ------------------------------------------------------------------ */

export interface PipelineScale {
  bar_length_px: number;
  label_text: string;
}

export interface PipelineMaster {
  box: Box;
  subfigure_id: string | null;
  classification: ImageClass;
  dependents: Box[];
  insets: Box[];
  scale: PipelineScale | null;
}

export interface PipelineFigure {
  figure_id: string;
  image_path: string;
  masters: PipelineMaster[];
}

export interface PipelineDocument {
  figures: PipelineFigure[];
}

function asBox(value: unknown, where: string): Box {
  if (typeof value !== "object" || value === null) {
    throw new Error(`${where}: expected a bounding box object`);
  }
  const raw = value as Record<string, unknown>;
  const out: Partial<Box> = {};
  for (const key of ["x0", "y0", "x1", "y1"] as const) {
    const v = raw[key];
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new Error(`${where}: bounding box field '${key}' missing or not a number`);
    }
    out[key] = v;
  }
  return out as Box;
}

/**
 * Parse the subset of a pipeline document the annotator consumes.
 * Throws with a field path when the payload does not look like one.
 */
export function parsePipelineDocument(data: unknown): PipelineDocument {
  if (typeof data !== "object" || data === null) {
    throw new Error("pipeline document: expected a JSON object");
  }
  const root = data as Record<string, unknown>;
  if (!Array.isArray(root.figures)) {
    throw new Error("pipeline document: missing 'figures' array");
  }
  const figures = root.figures.map((figValue, fi) => {
    const where = `figures[${fi}]`;
    if (typeof figValue !== "object" || figValue === null) {
      throw new Error(`${where}: expected an object`);
    }
    const fig = figValue as Record<string, unknown>;
    if (typeof fig.figure_id !== "string" || fig.figure_id.length === 0) {
      throw new Error(`${where}: missing 'figure_id'`);
    }
    if (typeof fig.image_path !== "string") {
      throw new Error(`${where}: missing 'image_path'`);
    }
    if (!Array.isArray(fig.masters)) {
      throw new Error(`${where}: missing 'masters' array`);
    }
    const masters = fig.masters.map((mValue, mi) => {
      const mWhere = `${where}.masters[${mi}]`;
      if (typeof mValue !== "object" || mValue === null) {
        throw new Error(`${mWhere}: expected an object`);
      }
      const m = mValue as Record<string, unknown>;
      if (!isImageClass(m.classification)) {
        throw new Error(`${mWhere}: 'classification' is not a known image class`);
      }
      const subfigureId = m.subfigure_id;
      if (subfigureId !== null && typeof subfigureId !== "string") {
        throw new Error(`${mWhere}: 'subfigure_id' must be a string or null`);
      }
      let scale: PipelineScale | null = null;
      if (m.scale !== null && m.scale !== undefined) {
        const s = m.scale as Record<string, unknown>;
        if (typeof s.bar_length_px !== "number" || typeof s.label_text !== "string") {
          throw new Error(`${mWhere}: 'scale' needs bar_length_px and label_text`);
        }
        scale = { bar_length_px: s.bar_length_px, label_text: s.label_text };
      }
      const dependents = Array.isArray(m.dependents) ? m.dependents : [];
      const insets = Array.isArray(m.insets) ? m.insets : [];
      return {
        box: asBox(m.box, `${mWhere}.box`),
        subfigure_id: subfigureId ?? null,
        classification: m.classification,
        dependents: dependents.map((b, bi) => asBox(b, `${mWhere}.dependents[${bi}]`)),
        insets: insets.map((b, bi) => asBox(b, `${mWhere}.insets[${bi}]`)),
        scale,
      };
    });
    return { figure_id: fig.figure_id, image_path: fig.image_path, masters };
  });
  return { figures };
}
