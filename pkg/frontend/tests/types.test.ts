import { describe, expect, it } from "vitest";

import { isImageClass, parsePipelineDocument } from "../src/types.js";

const goodDocument = {
  schema_version: "1",
  figures: [
    {
      figure_id: "fig-1",
      image_path: "figures/fig-1.png",
      caption_text: "ignored by the annotator",
      masters: [
        {
          box: { x0: 0, y0: 0, x1: 100, y1: 100 },
          subfigure_id: "a",
          classification: "microscopy",
          dependents: [{ x0: 5, y0: 5, x1: 50, y1: 50 }],
          insets: [],
          scale: {
            bar_length_px: 40,
            label_text: "50 nm",
            nm_per_pixel: 1.25,
          },
          extra_pipeline_field: true,
        },
      ],
    },
  ],
};

describe("parsePipelineDocument", () => {
  it("keeps only the fields the annotator needs", () => {
    const doc = parsePipelineDocument(goodDocument);
    expect(doc.figures).toHaveLength(1);
    const master = doc.figures[0]!.masters[0]!;
    expect(master.classification).toBe("microscopy");
    expect(master.scale).toEqual({ bar_length_px: 40, label_text: "50 nm" });
    expect(master.dependents).toHaveLength(1);
    expect("extra_pipeline_field" in master).toBe(false);
  });

  it("tolerates masters without scale or children", () => {
    const doc = parsePipelineDocument({
      figures: [
        {
          figure_id: "f",
          image_path: "p.png",
          masters: [
            {
              box: { x0: 0, y0: 0, x1: 1, y1: 1 },
              subfigure_id: null,
              classification: "graph",
              scale: null,
            },
          ],
        },
      ],
    });
    expect(doc.figures[0]!.masters[0]!.dependents).toEqual([]);
    expect(doc.figures[0]!.masters[0]!.scale).toBeNull();
  });

  it("names the offending path when a figure is malformed", () => {
    expect(() => parsePipelineDocument({ figures: [{}] })).toThrow(/figures\[0\]/);
    expect(() =>
      parsePipelineDocument({
        figures: [
          {
            figure_id: "f",
            image_path: "p.png",
            masters: [{ box: { x0: 0 }, classification: "graph", subfigure_id: null }],
          },
        ],
      }),
    ).toThrow(/box/);
    expect(() =>
      parsePipelineDocument({
        figures: [
          {
            figure_id: "f",
            image_path: "p.png",
            masters: [
              {
                box: { x0: 0, y0: 0, x1: 1, y1: 1 },
                classification: "spectrum",
                subfigure_id: null,
              },
            ],
          },
        ],
      }),
    ).toThrow(/image class/);
    expect(() => parsePipelineDocument(null)).toThrow(/JSON object/);
    expect(() => parsePipelineDocument({})).toThrow(/figures/);
  });
});

describe("isImageClass", () => {
  it("accepts exactly the seven classes", () => {
    expect(isImageClass("graph")).toBe(true);
    expect(isImageClass("parent")).toBe(true);
    expect(isImageClass("spectrum")).toBe(false);
    expect(isImageClass(3)).toBe(false);
  });
});
