/** Keyboard mapping, kept pure so it can be tested without a DOM. */
import { IMAGE_CLASSES, type ImageClass, type Role } from "./types.js";

export type UiAction =
  | { kind: "set-class"; value: ImageClass }
  | { kind: "set-role"; value: Role }
  | { kind: "undo" }
  | { kind: "redo" }
  | { kind: "delete-selection" }
  | { kind: "export" };

const ROLE_KEYS: Record<string, Role> = {
  m: "master",
  d: "dependent",
  i: "inset",
  t: "subfigure_label",
  s: "scale_bar_line",
  b: "scale_bar_label",
};

/**
 * Translate a key press into a UI action. Digits 1-7 pick the image class
 * in canonical order; letters pick the drawing role; `u`/`r` drive the
 * undo stack. Returns null for keys with no binding.
 */
export function interpretKey(key: string): UiAction | null {
  if (/^[1-7]$/.test(key)) {
    const value = IMAGE_CLASSES[Number(key) - 1];
    return value !== undefined ? { kind: "set-class", value } : null;
  }
  const lower = key.toLowerCase();
  const role = ROLE_KEYS[lower];
  if (role !== undefined) {
    return { kind: "set-role", value: role };
  }
  switch (lower) {
    case "u":
      return { kind: "undo" };
    case "r":
      return { kind: "redo" };
    case "x":
    case "delete":
    case "backspace":
      return { kind: "delete-selection" };
    case "e":
      return { kind: "export" };
    default:
      return null;
  }
}

/** Legend rendered next to the canvas. */
export function shortcutLegend(): string[] {
  const classes = IMAGE_CLASSES.map((c, i) => `${i + 1}: ${c}`);
  const roles = Object.entries(ROLE_KEYS).map(([k, r]) => `${k}: draw ${r.replace(/_/g, " ")}`);
  return [...classes, ...roles, "u: undo", "r: redo", "x: delete selection", "e: export"];
}
