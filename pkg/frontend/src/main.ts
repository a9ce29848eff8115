/** Browser bootstrap: wires the store, canvas and controls together. */
import { pickMaster, render, type ViewState } from "./canvas.js";
import { normalizedBox } from "./geometry.js";
import { interpretKey, shortcutLegend, type UiAction } from "./shortcuts.js";
import { AnnotationError, AnnotationStore } from "./store.js";
import {
  IMAGE_CLASSES,
  ROLES,
  parsePipelineDocument,
  type ImageClass,
  type PipelineDocument,
  type PipelineFigure,
  type Role,
} from "./types.js";

const SCHEMA_URL = "../src/figmine/schemas/groundtruth.schema.json";
const MAX_CANVAS = { width: 960, height: 720 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function nowTimestamp(): string {
  return new Date().toISOString().replace(/\.\d{3}Z$/, "Z");
}

async function start(): Promise<void> {
  const schema = await (await fetch(SCHEMA_URL)).json();
  const store = new AnnotationStore(schema);

  const canvas = el<HTMLCanvasElement>("canvas");
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("2d canvas is unavailable");
  }
  const status = el<HTMLPreElement>("status");
  const figureList = el<HTMLSelectElement>("figure-list");
  const roleBox = el<HTMLDivElement>("role-box");
  const classSelect = el<HTMLSelectElement>("class-select");
  const reviewerInput = el<HTMLInputElement>("reviewer");
  const subfigureInput = el<HTMLInputElement>("subfigure-text");
  const scaleLabelInput = el<HTMLInputElement>("scale-text");

  let document_: PipelineDocument | null = null;
  let documentUrl: string | null = null;
  let image: HTMLImageElement | null = null;
  let activeRole: Role = "master";
  let activeClass: ImageClass = "microscopy";
  const view: ViewState = { scale: 1, selection: null, draft: null, rejected: null };

  const say = (message: string): void => {
    status.textContent = message;
  };

  const redraw = (): void => {
    render(ctx, image, store.state, view);
  };

  const flashRejection = (err: AnnotationError): void => {
    view.rejected = err.box;
    say(`blocked: ${err.message}`);
    redraw();
    window.setTimeout(() => {
      view.rejected = null;
      redraw();
    }, 900);
  };

  const attempt = (action: () => void): void => {
    try {
      action();
      redraw();
    } catch (err) {
      if (err instanceof AnnotationError) {
        flashRejection(err);
      } else {
        say(String(err));
      }
    }
  };

  const fitCanvas = (width: number, height: number): void => {
    view.scale = Math.min(1, MAX_CANVAS.width / width, MAX_CANVAS.height / height);
    canvas.width = Math.round(width * view.scale);
    canvas.height = Math.round(height * view.scale);
  };

  const openFigure = (figure: PipelineFigure): void => {
    const img = new Image();
    img.onload = () => {
      image = img;
      store.seedFromPipeline(figure, { width: img.naturalWidth, height: img.naturalHeight });
      fitCanvas(img.naturalWidth, img.naturalHeight);
      view.selection = null;
      say(`loaded ${figure.figure_id}: ${figure.masters.length} masters pre-populated`);
      redraw();
    };
    img.onerror = () => {
      image = null;
      store.seedFromPipeline(figure, null);
      fitCanvas(800, 600);
      view.selection = null;
      say(`loaded ${figure.figure_id} without its image (${figure.image_path} not reachable)`);
      redraw();
    };
    img.src = documentUrl !== null ? new URL(figure.image_path, documentUrl).href : figure.image_path;
  };

  const loadDocument = async (url: string): Promise<void> => {
    const response = await fetch(url);
    if (!response.ok) {
      throw new Error(`fetch failed with status ${response.status}`);
    }
    document_ = parsePipelineDocument(await response.json());
    documentUrl = new URL(url, window.location.href).href;
    figureList.replaceChildren(
      ...document_.figures.map((fig, i) => {
        const option = document.createElement("option");
        option.value = String(i);
        option.textContent = fig.figure_id;
        return option;
      }),
    );
    const first = document_.figures[0];
    if (first !== undefined) {
      figureList.value = "0";
      openFigure(first);
    } else {
      say("document loaded but contains no figures");
    }
  };

  /* --- controls ---------------------------------------------------- */

  roleBox.replaceChildren(
    ...ROLES.map((role) => {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = "role";
      input.value = role;
      input.checked = role === activeRole;
      input.addEventListener("change", () => {
        activeRole = role;
      });
      label.append(input, ` ${role.replace(/_/g, " ")}`);
      return label;
    }),
  );

  classSelect.replaceChildren(
    ...IMAGE_CLASSES.map((cls) => {
      const option = document.createElement("option");
      option.value = cls;
      option.textContent = cls;
      return option;
    }),
  );
  classSelect.value = activeClass;
  classSelect.addEventListener("change", () => {
    activeClass = classSelect.value as ImageClass;
    if (view.selection !== null) {
      attempt(() => store.reclassify(view.selection!, activeClass));
    }
  });

  el<HTMLUListElement>("legend").replaceChildren(
    ...shortcutLegend().map((line) => {
      const item = document.createElement("li");
      item.textContent = line;
      return item;
    }),
  );

  el<HTMLButtonElement>("load-doc").addEventListener("click", () => {
    const url = el<HTMLInputElement>("doc-url").value.trim();
    loadDocument(url).catch((err) => say(`could not load pipeline output: ${err}`));
  });

  figureList.addEventListener("change", () => {
    const figure = document_?.figures[Number(figureList.value)];
    if (figure !== undefined) {
      openFigure(figure);
    }
  });

  el<HTMLInputElement>("import-file").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (file === undefined) {
      return;
    }
    file.text().then((text) => {
      attempt(() => {
        store.importFigure(JSON.parse(text));
        image = null;
        const size = store.state.image_size;
        fitCanvas(size?.width ?? 800, size?.height ?? 600);
        view.selection = null;
        say(`imported ${store.state.figure_id}: ${store.masterCount()} masters`);
      });
    });
  });

  el<HTMLButtonElement>("apply-subfigure").addEventListener("click", () => {
    if (view.selection !== null) {
      attempt(() => store.setSubfigureLabel(view.selection!, subfigureInput.value));
    }
  });

  el<HTMLButtonElement>("apply-scale-text").addEventListener("click", () => {
    if (view.selection !== null) {
      attempt(() => store.setScaleBarLabel(view.selection!, scaleLabelInput.value));
    }
  });

  el<HTMLButtonElement>("delete-master").addEventListener("click", () => {
    if (view.selection !== null) {
      attempt(() => {
        store.deleteMaster(view.selection!);
        view.selection = null;
      });
    }
  });

  el<HTMLButtonElement>("mark-reviewed").addEventListener("click", () => {
    if (view.selection !== null) {
      attempt(() => store.markReviewed(view.selection!));
    }
  });

  el<HTMLButtonElement>("accept-all").addEventListener("click", () => {
    attempt(() => {
      store.acceptAll(reviewerInput.value, nowTimestamp());
      say(`accepted all ${store.masterCount()} masters`);
    });
  });

  el<HTMLButtonElement>("mark-edited").addEventListener("click", () => {
    attempt(() => store.setReview(reviewerInput.value, "edited", nowTimestamp()));
  });

  el<HTMLButtonElement>("mark-rejected").addEventListener("click", () => {
    attempt(() => store.setReview(reviewerInput.value, "rejected", nowTimestamp()));
  });

  el<HTMLButtonElement>("export").addEventListener("click", () => {
    attempt(() => {
      const payload = store.exportFigure();
      const blob = new Blob([JSON.stringify(payload, null, 2) + "\n"], {
        type: "application/json",
      });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${payload.figure_id}.json`;
      link.click();
      URL.revokeObjectURL(link.href);
      say(`exported ${payload.figure_id}.json (${payload.annotations.length} annotations)`);
    });
  });

  /* --- canvas gestures ---------------------------------------------- */

  let dragStart: { x: number; y: number } | null = null;

  const imagePoint = (event: MouseEvent): { x: number; y: number } => {
    const rect = canvas.getBoundingClientRect();
    return {
      x: (event.clientX - rect.left) / view.scale,
      y: (event.clientY - rect.top) / view.scale,
    };
  };

  canvas.addEventListener("mousedown", (event) => {
    dragStart = imagePoint(event);
  });

  canvas.addEventListener("mousemove", (event) => {
    if (dragStart === null) {
      return;
    }
    const p = imagePoint(event);
    view.draft = normalizedBox(dragStart.x, dragStart.y, p.x, p.y);
    redraw();
  });

  canvas.addEventListener("mouseup", (event) => {
    if (dragStart === null) {
      return;
    }
    const p = imagePoint(event);
    const box = normalizedBox(dragStart.x, dragStart.y, p.x, p.y);
    dragStart = null;
    view.draft = null;
    const isClick = box.x1 - box.x0 < 3 && box.y1 - box.y0 < 3;
    if (isClick) {
      view.selection = pickMaster(store.state, p.x, p.y);
      redraw();
      return;
    }
    attempt(() => {
      switch (activeRole) {
        case "master":
          view.selection = store.addMaster(box, activeClass);
          break;
        case "dependent":
          requireSelection();
          store.addDependent(view.selection!, box);
          break;
        case "inset":
          requireSelection();
          store.addInset(view.selection!, box);
          break;
        case "subfigure_label":
          requireSelection();
          store.setSubfigureLabel(view.selection!, subfigureInput.value);
          break;
        case "scale_bar_line":
          requireSelection();
          store.setScaleBarFromLine(view.selection!, box, scaleLabelInput.value);
          // The text entry immediately follows the gesture.
          scaleLabelInput.focus();
          break;
        case "scale_bar_label":
          requireSelection();
          store.setScaleBarLabel(view.selection!, scaleLabelInput.value);
          break;
      }
    });
  });

  const requireSelection = (): void => {
    if (view.selection === null) {
      throw new AnnotationError("select a master first (click inside one)");
    }
  };

  window.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) {
      return;
    }
    const action: UiAction | null = interpretKey(event.key);
    if (action === null) {
      return;
    }
    event.preventDefault();
    switch (action.kind) {
      case "set-class":
        activeClass = action.value;
        classSelect.value = action.value;
        if (view.selection !== null) {
          attempt(() => store.reclassify(view.selection!, action.value));
        }
        break;
      case "set-role": {
        activeRole = action.value;
        const radios = roleBox.querySelectorAll<HTMLInputElement>("input[name=role]");
        radios.forEach((radio) => {
          radio.checked = radio.value === action.value;
        });
        break;
      }
      case "undo":
        store.undo();
        redraw();
        break;
      case "redo":
        store.redo();
        redraw();
        break;
      case "delete-selection":
        if (view.selection !== null) {
          attempt(() => {
            store.deleteMaster(view.selection!);
            view.selection = null;
          });
        }
        break;
      case "export":
        el<HTMLButtonElement>("export").click();
        break;
    }
  });

  fitCanvas(800, 600);
  say("load a pipeline output, import a ground-truth file, or draw from scratch");
  redraw();
}

start().catch((err) => {
  const status = document.getElementById("status");
  if (status !== null) {
    status.textContent = `failed to start: ${err}`;
  }
});
