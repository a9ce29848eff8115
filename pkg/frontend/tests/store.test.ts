import { describe, expect, it } from "vitest";

import {
  AnnotationError,
  AnnotationStore,
  UNDO_DEPTH,
  itemId,
  normalizeSubfigureId,
  scaleBarLengthPx,
} from "../src/store.js";
import type { PipelineFigure } from "../src/types.js";
import { groundTruthIds, loadGroundTruth, loadSchema } from "./helpers.js";

const schema = loadSchema();

function freshStore(figureId = "fig", width = 1000, height = 1000): AnnotationStore {
  const store = new AnnotationStore(schema);
  store.loadFigure(figureId, null, { width, height });
  return store;
}

describe("item ids", () => {
  it("joins on subfigure id when present, index otherwise", () => {
    expect(itemId("fig", "a", 3)).toBe("fig/a");
    expect(itemId("fig", null, 3)).toBe("fig/3");
  });

  it("normalizes typed subfigure labels like the pipeline does", () => {
    expect(normalizeSubfigureId("(A)")).toBe("a");
    expect(normalizeSubfigureId("  b.  ")).toBe("b");
    expect(normalizeSubfigureId("")).toBeNull();
    expect(normalizeSubfigureId("( )")).toBeNull();
  });
});

describe("drawing masters", () => {
  it("adds a master and assigns its item id", () => {
    const store = freshStore();
    const index = store.addMaster({ x0: 10, y0: 10, x1: 110, y1: 110 }, "microscopy");
    expect(index).toBe(0);
    expect(store.annotations[0]!.item_id).toBe("fig/0");
    store.setSubfigureLabel(0, "(A)");
    expect(store.annotations[0]!.item_id).toBe("fig/a");
  });

  it("allows masters that overlap within the IoU tolerance", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    // Overlap 10x100 = 1000, union 19000: IoU ~ 0.053.
    store.addMaster({ x0: 90, y0: 0, x1: 190, y1: 100 });
    expect(store.masterCount()).toBe(2);
  });

  it("blocks masters that overlap beyond the IoU tolerance", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    const intruder = { x0: 20, y0: 0, x1: 120, y1: 100 };
    expect(() => store.addMaster(intruder)).toThrow(AnnotationError);
    expect(store.masterCount()).toBe(1);
    expect(store.lastRejection?.box).toEqual(intruder);
  });

  it("blocks boxes that leave the image", () => {
    const store = freshStore("fig", 200, 200);
    expect(() => store.addMaster({ x0: 150, y0: 150, x1: 250, y1: 180 })).toThrow(
      /past the image edge/,
    );
    expect(() => store.addMaster({ x0: -5, y0: 0, x1: 50, y1: 50 })).toThrow(AnnotationError);
  });

  it("blocks degenerate boxes", () => {
    const store = freshStore();
    expect(() => store.addMaster({ x0: 10, y0: 10, x1: 10, y1: 50 })).toThrow(
      /positive area/,
    );
  });
});

describe("dependents and insets", () => {
  it("accepts children that touch the master's edges (inclusive containment)", () => {
    const store = freshStore();
    store.addMaster({ x0: 10, y0: 10, x1: 110, y1: 110 });
    store.addDependent(0, { x0: 10, y0: 10, x1: 110, y1: 110 });
    store.addInset(0, { x0: 10, y0: 60, x1: 60, y1: 110 });
    expect(store.dependentCount()).toBe(1);
    expect(store.insetCount()).toBe(1);
  });

  it("blocks a dependent outside its master at draw time, with a cue", () => {
    const store = freshStore();
    store.addMaster({ x0: 10, y0: 10, x1: 110, y1: 110 });
    const outside = { x0: 100, y0: 100, x1: 130, y1: 130 };
    let caught: unknown = null;
    try {
      store.addDependent(0, outside);
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(AnnotationError);
    expect((caught as AnnotationError).message).toMatch(/inside its master/);
    expect((caught as AnnotationError).box).toEqual(outside);
    expect(store.lastRejection).toBe(caught);
    expect(store.dependentCount()).toBe(0);
    // A successful mutation clears the rejection cue.
    store.addDependent(0, { x0: 20, y0: 20, x1: 40, y1: 40 });
    expect(store.lastRejection).toBeNull();
  });

  it("applies the same containment rule to insets", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    expect(() => store.addInset(0, { x0: 50, y0: 50, x1: 101, y1: 60 })).toThrow(
      /inside its master/,
    );
  });

  it("refuses to move a master away from its children", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    store.addDependent(0, { x0: 80, y0: 80, x1: 100, y1: 100 });
    expect(() => store.moveMaster(0, { x0: 0, y0: 0, x1: 90, y1: 90 })).toThrow(
      /no longer contain/,
    );
    store.moveMaster(0, { x0: 0, y0: 0, x1: 120, y1: 120 });
    expect(store.annotations[0]!.box).toEqual({ x0: 0, y0: 0, x1: 120, y1: 120 });
  });
});

describe("scale bars and text entry", () => {
  it("derives pixel length from the long side of the drawn line", () => {
    expect(scaleBarLengthPx({ x0: 480, y0: 370, x1: 560, y1: 372 })).toBe(80);
    expect(scaleBarLengthPx({ x0: 10, y0: 10, x1: 12, y1: 110 })).toBe(100);
  });

  it("attaches and relabels a scale bar on the selected master", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 600, y1: 400 });
    store.setScaleBarFromLine(0, { x0: 480, y0: 370, x1: 560, y1: 372 }, "50 nm");
    expect(store.annotations[0]!.scale_bar).toEqual({ length_px: 80, label_text: "50 nm" });
    store.setScaleBarLabel(0, "0.5 µm");
    expect(store.annotations[0]!.scale_bar).toEqual({ length_px: 80, label_text: "0.5 µm" });
  });

  it("requires the line to sit inside the master", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    expect(() =>
      store.setScaleBarFromLine(0, { x0: 90, y0: 98, x1: 170, y1: 99 }, "50 nm"),
    ).toThrow(/inside its master/);
  });

  it("refuses a label before the line exists", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    expect(() => store.setScaleBarLabel(0, "50 nm")).toThrow(/before entering its label/);
  });
});

describe("undo and redo", () => {
  it("keeps at least 20 levels of undo", () => {
    expect(UNDO_DEPTH).toBeGreaterThanOrEqual(20);
    const store = freshStore("fig", 2000, 2000);
    const snapshots: string[] = [];
    for (let i = 0; i < 30; i += 1) {
      const x = (i % 6) * 120;
      const y = Math.floor(i / 6) * 120;
      store.addMaster({ x0: x, y0: y, x1: x + 100, y1: y + 100 });
      snapshots.push(JSON.stringify(store.state));
    }
    for (let back = 1; back <= 20; back += 1) {
      expect(store.undo()).toBe(true);
      expect(JSON.stringify(store.state)).toBe(snapshots[30 - back - 1]);
    }
    expect(store.masterCount()).toBe(10);
  });

  it("redo replays undone work; a new edit clears it", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    store.addMaster({ x0: 200, y0: 0, x1: 300, y1: 100 });
    store.undo();
    expect(store.masterCount()).toBe(1);
    expect(store.redo()).toBe(true);
    expect(store.masterCount()).toBe(2);
    store.undo();
    store.addMaster({ x0: 400, y0: 0, x1: 500, y1: 100 });
    expect(store.canRedo()).toBe(false);
  });

  it("undo on an empty history is a no-op", () => {
    const store = freshStore();
    expect(store.undo()).toBe(false);
  });

  it("a blocked mutation does not consume an undo level", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 100, y1: 100 });
    expect(() => store.addMaster({ x0: 10, y0: 10, x1: 90, y1: 90 })).toThrow(AnnotationError);
    store.undo();
    expect(store.masterCount()).toBe(0);
    expect(store.canUndo()).toBe(false);
  });
});

describe("export and import", () => {
  function populated(): AnnotationStore {
    const store = freshStore("demo-fig", 800, 600);
    store.addMaster({ x0: 0, y0: 0, x1: 390, y1: 600 }, "microscopy");
    store.setSubfigureLabel(0, "a");
    store.addDependent(0, { x0: 10, y0: 300, x1: 190, y1: 590 });
    store.addInset(0, { x0: 300, y0: 10, x1: 380, y1: 90 });
    store.setScaleBarFromLine(0, { x0: 20, y0: 560, x1: 100, y1: 562 }, "50 nm");
    store.addMaster({ x0: 410, y0: 0, x1: 800, y1: 600 }, "graph");
    store.setSubfigureLabel(1, "b");
    return store;
  }

  it("export then import restores the canvas state", () => {
    const store = populated();
    store.setReview("r1", "edited", "2026-08-15T12:00:00Z");
    const payload = store.exportFigure();
    const clone = new AnnotationStore(schema);
    clone.importFigure(JSON.parse(JSON.stringify(payload)));
    expect(clone.state).toEqual(store.state);
  });

  it("exports validate against the shared schema", () => {
    const payload = populated().exportFigure();
    expect(payload.schema_version).toBe("1");
    expect(payload.annotations.map((a) => a.item_id)).toEqual(["demo-fig/a", "demo-fig/b"]);
    // Round-trips through JSON without loss.
    expect(JSON.parse(JSON.stringify(payload))).toEqual(payload);
  });

  it("refuses to import a file that fails the schema, leaving state untouched", () => {
    const store = populated();
    const before = JSON.stringify(store.state);
    expect(() => store.importFigure({ figure_id: "x" })).toThrow(/load refused/);
    expect(() => store.importFigure({ figure_id: "x" })).toThrow(/annotations/);
    expect(JSON.stringify(store.state)).toBe(before);
  });

  it("refuses to import a schema-valid file that breaks geometry rules", () => {
    const store = freshStore();
    const payload = {
      figure_id: "bad",
      annotations: [
        {
          item_id: "bad/0",
          box: { x0: 0, y0: 0, x1: 100, y1: 100 },
          classification: "graph",
          dependents: [{ x0: 90, y0: 90, x1: 150, y1: 150 }],
        },
      ],
    };
    expect(() => store.importFigure(payload)).toThrow(/geometry rules violated/);
  });

  it("fills schema defaults for optional annotation fields", () => {
    const store = new AnnotationStore(schema);
    store.importFigure({
      figure_id: "sparse",
      annotations: [
        {
          item_id: "sparse/0",
          box: { x0: 0, y0: 0, x1: 10, y1: 10 },
          classification: "photo",
        },
      ],
    });
    expect(store.annotations[0]).toEqual({
      item_id: "sparse/0",
      box: { x0: 0, y0: 0, x1: 10, y1: 10 },
      classification: "photo",
      subfigure_id: null,
      dependents: [],
      insets: [],
      scale_bar: null,
      reviewed: false,
    });
  });

  it("geometryIssues reports both invariants", () => {
    const store = freshStore();
    const issues = store.geometryIssues({
      figure_id: "x",
      image_path: null,
      image_size: null,
      review: null,
      annotations: [
        {
          item_id: "x/0",
          box: { x0: 0, y0: 0, x1: 100, y1: 100 },
          classification: "graph",
          subfigure_id: null,
          dependents: [{ x0: 50, y0: 50, x1: 150, y1: 150 }],
          insets: [],
          scale_bar: null,
          reviewed: false,
        },
        {
          item_id: "x/1",
          box: { x0: 10, y0: 10, x1: 110, y1: 110 },
          classification: "graph",
          subfigure_id: null,
          dependents: [],
          insets: [],
          scale_bar: null,
          reviewed: false,
        },
      ],
    });
    expect(issues.some((i) => i.includes("outside the master box"))).toBe(true);
    expect(issues.some((i) => i.includes("overlap"))).toBe(true);
  });
});

describe("pipeline pre-population", () => {
  const figure: PipelineFigure = {
    figure_id: "doc-fig",
    image_path: "figures/doc-fig.png",
    masters: [
      {
        box: { x0: 0, y0: 0, x1: 300, y1: 200 },
        subfigure_id: "a",
        classification: "microscopy",
        dependents: [{ x0: 10, y0: 10, x1: 90, y1: 90 }],
        insets: [],
        scale: { bar_length_px: 60, label_text: "2 µm" },
      },
      {
        box: { x0: 310, y0: 0, x1: 600, y1: 200 },
        subfigure_id: null,
        classification: "graph",
        dependents: [],
        insets: [],
        scale: null,
      },
    ],
  };

  it("seeds boxes, classes, labels and scale bars from a document figure", () => {
    const store = new AnnotationStore(schema);
    store.seedFromPipeline(figure, { width: 600, height: 200 });
    expect(store.masterCount()).toBe(2);
    expect(store.annotations[0]!.item_id).toBe("doc-fig/a");
    expect(store.annotations[0]!.scale_bar).toEqual({ length_px: 60, label_text: "2 µm" });
    expect(store.annotations[1]!.item_id).toBe("doc-fig/1");
    expect(store.annotations[1]!.scale_bar).toBeNull();
    // Seeded state is immediately exportable.
    expect(store.exportFigure().annotations).toHaveLength(2);
  });

  it("copies boxes instead of referencing them", () => {
    const store = new AnnotationStore(schema);
    store.seedFromPipeline(structuredClone(figure), null);
    const sourceCopy = structuredClone(figure);
    store.moveMaster(1, { x0: 320, y0: 0, x1: 610, y1: 200 });
    expect(figure).toEqual(sourceCopy);
  });
});

describe("review mode", () => {
  it("imports, accepts all, and re-exports the pipeline's ground truth unchanged", () => {
    const ids = groundTruthIds();
    expect(ids.length).toBeGreaterThan(0);
    for (const figureId of ids) {
      const payload = loadGroundTruth(figureId);
      const store = new AnnotationStore(schema);
      store.importFigure(payload);
      store.acceptAll("rev-1", "2026-08-15T09:30:00Z");
      const exported = store.exportFigure();
      expect(exported.review).toEqual({
        reviewer: "rev-1",
        reviewed_at: "2026-08-15T09:30:00Z",
        verdict: "accepted",
      });
      const truth = payload.annotations as Record<string, unknown>[];
      expect(exported.annotations).toHaveLength(truth.length);
      exported.annotations.forEach((ann, i) => {
        const { reviewed: _ours, ...ours } = ann as unknown as Record<string, unknown>;
        const { reviewed: _theirs, ...theirs } = truth[i]!;
        expect(ours).toEqual(theirs);
        expect(ann.reviewed).toBe(true);
      });
    }
  });

  it("records the reviewer id and timestamp on every verdict", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 10, y1: 10 });
    store.setReview("  alice  ", "rejected", "2026-08-15T10:00:00Z");
    expect(store.state.review).toEqual({
      reviewer: "alice",
      reviewed_at: "2026-08-15T10:00:00Z",
      verdict: "rejected",
    });
    expect(() => store.setReview("   ", "accepted", "t")).toThrow(/reviewer id/);
  });

  it("deleting a master decrements the exported counts", () => {
    const figureId = groundTruthIds().find(
      (id) => (loadGroundTruth(id).annotations as unknown[]).length >= 2,
    );
    expect(figureId).toBeDefined();
    const payload = loadGroundTruth(figureId!);
    const before = (payload.annotations as unknown[]).length;
    const store = new AnnotationStore(schema);
    store.importFigure(payload);
    store.deleteMaster(0);
    const exported = store.exportFigure();
    expect(exported.annotations).toHaveLength(before - 1);
    expect(store.masterCount()).toBe(before - 1);
  });

  it("reclassifying a master updates the exported class", () => {
    const figureId = groundTruthIds()[0]!;
    const store = new AnnotationStore(schema);
    store.importFigure(loadGroundTruth(figureId));
    store.reclassify(0, "unclear");
    expect(store.exportFigure().annotations[0]!.classification).toBe("unclear");
    expect(() => store.reclassify(0, "spectrum" as never)).toThrow(/unknown image class/);
  });

  it("marks individual masters as reviewed", () => {
    const store = freshStore();
    store.addMaster({ x0: 0, y0: 0, x1: 10, y1: 10 });
    store.markReviewed(0);
    expect(store.annotations[0]!.reviewed).toBe(true);
    store.markReviewed(0, false);
    expect(store.annotations[0]!.reviewed).toBe(false);
  });
});
