/** Canvas rendering for the annotator. Pure drawing: no event handling here. */
import type { FigureState } from "./store.js";
import type { Box, ImageClass } from "./types.js";

export const CLASS_COLORS: Record<ImageClass, string> = {
  microscopy: "#2b8cbe",
  diffraction: "#88419d",
  graph: "#e34a33",
  illustration: "#31a354",
  photo: "#fdae61",
  parent: "#636363",
  unclear: "#969696",
};

export interface ViewState {
  /** Canvas pixels per image pixel. */
  scale: number;
  /** Index of the selected master, or null. */
  selection: number | null;
  /** Rectangle being dragged right now, in image coordinates. */
  draft: Box | null;
  /** Rectangle of the last rejected gesture, flashed in red. */
  rejected: Box | null;
}

function drawBox(
  ctx: CanvasRenderingContext2D,
  box: Box,
  scale: number,
  style: { stroke: string; width: number; dash?: number[] },
): void {
  ctx.save();
  ctx.strokeStyle = style.stroke;
  ctx.lineWidth = style.width;
  ctx.setLineDash(style.dash ?? []);
  ctx.strokeRect(
    box.x0 * scale,
    box.y0 * scale,
    (box.x1 - box.x0) * scale,
    (box.y1 - box.y0) * scale,
  );
  ctx.restore();
}

function drawTag(
  ctx: CanvasRenderingContext2D,
  box: Box,
  scale: number,
  text: string,
  color: string,
): void {
  ctx.save();
  ctx.font = "12px sans-serif";
  const pad = 3;
  const width = ctx.measureText(text).width + 2 * pad;
  const x = box.x0 * scale;
  const y = Math.max(0, box.y0 * scale - 16);
  ctx.fillStyle = color;
  ctx.fillRect(x, y, width, 16);
  ctx.fillStyle = "#ffffff";
  ctx.fillText(text, x + pad, y + 12);
  ctx.restore();
}

export function render(
  ctx: CanvasRenderingContext2D,
  image: CanvasImageSource | null,
  state: FigureState,
  view: ViewState,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (image !== null) {
    ctx.drawImage(image, 0, 0, ctx.canvas.width, ctx.canvas.height);
  } else {
    ctx.fillStyle = "#f4f4f4";
    ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  }

  state.annotations.forEach((ann, i) => {
    const color = CLASS_COLORS[ann.classification];
    const selected = view.selection === i;
    drawBox(ctx, ann.box, view.scale, { stroke: color, width: selected ? 3 : 2 });
    for (const dep of ann.dependents) {
      drawBox(ctx, dep, view.scale, { stroke: color, width: 1.5, dash: [6, 4] });
    }
    for (const inset of ann.insets) {
      drawBox(ctx, inset, view.scale, { stroke: color, width: 1.5, dash: [2, 3] });
    }
    const parts = [ann.subfigure_id ?? `#${i}`, ann.classification];
    if (ann.scale_bar !== null) {
      parts.push(ann.scale_bar.label_text);
    }
    if (ann.reviewed) {
      parts.push("✓");
    }
    drawTag(ctx, ann.box, view.scale, parts.join(" · "), color);
  });

  if (view.draft !== null) {
    drawBox(ctx, view.draft, view.scale, { stroke: "#111111", width: 1, dash: [4, 2] });
  }
  if (view.rejected !== null) {
    drawBox(ctx, view.rejected, view.scale, { stroke: "#d7191c", width: 3, dash: [3, 3] });
  }
}

/** Hit test: innermost (last drawn) master whose box contains the point. */
export function pickMaster(state: FigureState, x: number, y: number): number | null {
  for (let i = state.annotations.length - 1; i >= 0; i -= 1) {
    const box = state.annotations[i]!.box;
    if (x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1) {
      return i;
    }
  }
  return null;
}
