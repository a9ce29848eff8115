"""Master-dependent-inset assembly from raw detections.

Two detection backends feed this module: an external detections JSON file
(the hand-off point for neural detectors) or the built-in rule-based
whitespace-gutter segmenter. Assembly binds subfigure labels to master
candidates, absorbs contained boxes as insets or dependents, pulls label-free
stacked neighbors in as dependents, and applies two-tier confidence
classification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import geometry
from .models import (
    BoundingBox,
    ConfidenceTier,
    Detection,
    DetectionKind,
    ImageClass,
    MasterImage,
    SchemaError,
    normalize_subfigure_id,
)

log = logging.getLogger(__name__)


class BackendKind(str, Enum):
    EXTERNAL_JSON = "external_json"
    RULE_BASED = "rule_based"


@dataclass(frozen=True)
class DetectionBackend:
    kind: BackendKind
    source: str | None = None

    def __post_init__(self):
        if self.kind is BackendKind.EXTERNAL_JSON and not self.source:
            raise SchemaError("source", "external_json backend requires a source path")


@dataclass(frozen=True)
class SeparatorConfig:
    """Tunable constants for assembly and rule-based segmentation."""

    inset_containment: float = 0.95
    inset_area_fraction: float = 0.30
    sibling_reach_factor: float = 1.5
    gutter_variance: float = 25.0
    gutter_brightness: float = 220.0
    gutter_thickness: int = 8
    min_image_px: int = 32

    def __post_init__(self):
        for name in ("inset_containment", "inset_area_fraction"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise SchemaError(name, f"must be in (0, 1], got {value}")
        if self.sibling_reach_factor <= 0:
            raise SchemaError("sibling_reach_factor", "must be positive")
        if self.gutter_thickness < 1 or self.min_image_px < 1:
            raise SchemaError("gutter_thickness", "pixel sizes must be >= 1")


DEFAULT_CONFIG = SeparatorConfig()


@dataclass(frozen=True)
class LayoutMask:
    """Positions of detected subfigure labels within the figure canvas."""

    width: int
    height: int
    label_boxes: tuple

    def __post_init__(self):
        object.__setattr__(self, "label_boxes", tuple(self.label_boxes))
        for b in self.label_boxes:
            if b.x1 > self.width or b.y1 > self.height:
                raise SchemaError("label_boxes", f"{b.as_tuple()} exceeds mask size {self.width}x{self.height}")

    def rasterize(self) -> np.ndarray:
        mask = np.zeros((self.height, self.width), dtype=np.uint8)
        for b in self.label_boxes:
            mask[b.y0 : b.y1, b.x0 : b.x1] = 1
        return mask


def build_layout_mask(labels, size) -> LayoutMask:
    """Binary-mask layout of subfigure labels; out-of-bounds boxes are clipped."""
    width, height = size
    boxes = []
    for d in labels:
        if d.kind is not DetectionKind.SUBFIGURE_LABEL:
            raise SchemaError("labels", f"expected subfigure_label, got {d.kind.value}")
        b = d.box
        if b.x1 > width or b.y1 > height:
            log.warning("label box %s clipped to image bounds %dx%d", b.as_tuple(), width, height)
            b = BoundingBox(min(b.x0, width - 1), min(b.y0, height - 1), min(b.x1, width), min(b.y1, height))
        boxes.append(b)
    return LayoutMask(width=width, height=height, label_boxes=tuple(boxes))


def classify_with_threshold(scores, threshold: float):
    """Argmax classification with an acceptance tier: (ImageClass, ConfidenceTier).

    Ties break by ImageClass declaration order; tier is high_threshold iff the
    winning score is >= threshold.
    """
    if not scores:
        raise SchemaError("scores", "must be non-empty")
    normalized = {ImageClass(k): float(v) for k, v in scores.items()}
    best_score = max(normalized.values())
    best = next(c for c in ImageClass if normalized.get(c) == best_score)
    tier = ConfidenceTier.HIGH_THRESHOLD if best_score >= threshold else ConfidenceTier.NO_THRESHOLD_ONLY
    return best, tier


# ---------------------------------------------------------------------------
# Rule-based segmentation
# ---------------------------------------------------------------------------


def _gutter_runs(flags, min_thickness: int, extent: int):
    """Maximal interior runs of gutter rows/columns at least min_thickness long."""
    runs = []
    start = None
    for i, f in enumerate(list(flags) + [False]):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= min_thickness and start > 0 and i < extent:
                runs.append((start, i))
            start = None
    return runs


def rule_based_segment(image: np.ndarray, config: SeparatorConfig = DEFAULT_CONFIG) -> list:
    """Recursively split a grayscale image along bright low-variance gutters.

    Leaves become master_candidate detections with class_scores {unclear: 1.0}.
    Candidates tile the image: their union plus gutter bands covers every pixel.
    """
    if image.ndim != 2:
        raise SchemaError("image", f"expected 2-D grayscale array, got shape {image.shape}")
    h, w = image.shape
    if h == 0 or w == 0:
        raise SchemaError("image", "must be non-empty")

    def leaf(x0, y0, x1, y1):
        return Detection(
            box=BoundingBox(x0, y0, x1, y1),
            kind=DetectionKind.MASTER_CANDIDATE,
            confidence=1.0,
            class_scores={ImageClass.UNCLEAR.value: 1.0},
        )

    if w < config.min_image_px or h < config.min_image_px:
        return [leaf(0, 0, w, h)]

    out: list = []

    def split(x0, y0, x1, y1):
        region = image[y0:y1, x0:x1].astype(np.float64)
        rh, rw = region.shape
        rows = (region.var(axis=1) < config.gutter_variance) & (region.mean(axis=1) > config.gutter_brightness)
        runs = _gutter_runs(rows, config.gutter_thickness, rh)
        if runs:
            prev = 0
            for s, e in runs:
                if s > prev:
                    split(x0, y0 + prev, x1, y0 + s)
                prev = e
            if rh > prev:
                split(x0, y0 + prev, x1, y0 + rh)
            return
        cols = (region.var(axis=0) < config.gutter_variance) & (region.mean(axis=0) > config.gutter_brightness)
        runs = _gutter_runs(cols, config.gutter_thickness, rw)
        if runs:
            prev = 0
            for s, e in runs:
                if s > prev:
                    split(x0 + prev, y0, x0 + s, y1)
                prev = e
            if rw > prev:
                split(x0 + prev, y0, x0 + rw, y1)
            return
        out.append(leaf(x0, y0, x1, y1))

    split(0, 0, w, h)
    return out


# ---------------------------------------------------------------------------
# MDI assembly
# ---------------------------------------------------------------------------


def _reading_order(box: BoundingBox):
    return (box.y0, box.x0, box.x1, box.y1)


def _scores_of(det: Detection) -> dict:
    if det.class_scores:
        return {c.value: s for c, s in det.class_scores.items()}
    return {ImageClass.UNCLEAR.value: 1.0}


def assemble_mdi(
    detections,
    image_size,
    high_threshold: float = 0.99,
    config: SeparatorConfig = DEFAULT_CONFIG,
):
    """Assemble detections into masters; returns (masters, unmatched_detections).

    Every candidate detection ends as exactly one of: master, dependent of a
    master, inset of a master, or unmatched. Scale-bar detections are not
    consumed here; they pass to scale resolution untouched.
    """
    labels = [d for d in detections if d.kind is DetectionKind.SUBFIGURE_LABEL]
    masters_in = [d for d in detections if d.kind is DetectionKind.MASTER_CANDIDATE]
    dep_hints = [d for d in detections if d.kind is DetectionKind.DEPENDENT_CANDIDATE]
    inset_hints = [d for d in detections if d.kind is DetectionKind.INSET_CANDIDATE]
    unmatched: list = []

    # Candidate containment: a candidate ~fully inside a strictly larger one is
    # absorbed by its smallest container; small absorbed boxes are insets,
    # large ones dependents.
    order = sorted(range(len(masters_in)), key=lambda i: _reading_order(masters_in[i].box))
    pos = {i: k for k, i in enumerate(order)}
    container: dict = {}
    for i in order:
        bi = masters_in[i].box
        best = None
        for j in order:
            if i == j:
                continue
            bj = masters_in[j].box
            ratio = geometry.containment_ratio(bi.as_tuple(), bj.as_tuple())
            if ratio < config.inset_containment:
                continue
            if geometry.area(bj.as_tuple()) < geometry.area(bi.as_tuple()):
                continue
            if geometry.area(bj.as_tuple()) == geometry.area(bi.as_tuple()) and pos[j] > pos[i]:
                continue
            if best is None or geometry.area(bj.as_tuple()) < geometry.area(masters_in[best].box.as_tuple()):
                best = j
        if best is not None:
            container[i] = best

    def top_ancestor(i):
        while i in container:
            i = container[i]
        return i

    top_level = [i for i in order if i not in container]

    # Label-to-candidate association: containment of the label center first,
    # else nearest center; each top-level candidate keeps at most one label.
    assignment: dict = {}
    for li, lab in enumerate(labels):
        lc = geometry.center(lab.box.as_tuple())
        inside = [i for i in top_level if geometry.contains_point(masters_in[i].box.as_tuple(), lc)]
        if inside:
            target = min(inside, key=lambda i: geometry.area(masters_in[i].box.as_tuple()))
        elif top_level:
            target = min(
                top_level,
                key=lambda i: (
                    geometry.center_distance(masters_in[i].box.as_tuple(), lab.box.as_tuple()),
                    _reading_order(masters_in[i].box),
                ),
            )
        else:
            unmatched.append(lab)
            continue
        assignment.setdefault(target, []).append(li)

    label_of: dict = {}
    for target, cands in assignment.items():
        cands.sort(
            key=lambda li: (
                geometry.center_distance(masters_in[target].box.as_tuple(), labels[li].box.as_tuple()),
                _reading_order(labels[li].box),
            )
        )
        label_of[target] = cands[0]
        unmatched.extend(labels[li] for li in cands[1:])

    # Sibling absorption: a label-free top-level candidate stacked with a
    # labeled one (horizontal overlap, small vertical gap) becomes its
    # dependent; the master box grows to the union.
    labeled = [i for i in top_level if i in label_of]
    absorbed_into: dict = {}
    for i in top_level:
        if i in label_of:
            continue
        bi = masters_in[i].box
        best = None
        best_key = None
        for j in labeled:
            bj = masters_in[j].box
            if geometry.x_overlap(bi.as_tuple(), bj.as_tuple()) <= 0:
                continue
            gap = max(0, bi.y0 - bj.y1, bj.y0 - bi.y1)
            if gap > config.sibling_reach_factor * bj.height:
                continue
            key = (gap, geometry.center_distance(bi.as_tuple(), bj.as_tuple()), _reading_order(bj))
            if best_key is None or key < best_key:
                best, best_key = j, key
        if best is not None:
            absorbed_into[i] = best

    def final_owner(j: int) -> int:
        t = top_ancestor(j)
        return absorbed_into.get(t, t)

    # Dependent/inset hints from external detectors attach to the candidate
    # fully containing them, skipping the size rule.
    hint_deps: dict = {}
    hint_insets: dict = {}
    final_masters = [i for i in top_level if i not in absorbed_into]
    for hints, sink in ((dep_hints, hint_deps), (inset_hints, hint_insets)):
        for d in hints:
            inside = [i for i in final_masters if masters_in[i].box.contains_box(d.box)]
            if inside:
                target = min(inside, key=lambda i: geometry.area(masters_in[i].box.as_tuple()))
                sink.setdefault(target, []).append(d.box)
            else:
                unmatched.append(d)

    used_ids: set = set()
    built: list = []
    for i in final_masters:
        det = masters_in[i]
        box = det.box
        dependents: list = []
        insets: list = []
        for j, parent in container.items():
            if final_owner(j) != i or j == i:
                continue
            inner = masters_in[j].box
            small = geometry.area(inner.as_tuple()) < config.inset_area_fraction * geometry.area(
                masters_in[parent].box.as_tuple()
            )
            (insets if small else dependents).append(inner)
        for j, target in absorbed_into.items():
            if target == i:
                dependents.append(masters_in[j].box)
                box = BoundingBox(*geometry.union(box.as_tuple(), masters_in[j].box.as_tuple()))
        dependents.extend(hint_deps.get(i, ()))
        insets.extend(hint_insets.get(i, ()))
        dependents.sort(key=_reading_order)
        insets.sort(key=_reading_order)

        subfigure_id = None
        if i in label_of:
            candidate_id = normalize_subfigure_id(labels[label_of[i]].text)
            if candidate_id in used_ids:
                log.warning("duplicate subfigure label %r; keeping first occurrence", candidate_id)
                unmatched.append(labels[label_of[i]])
            else:
                subfigure_id = candidate_id
                used_ids.add(candidate_id)

        scores = _scores_of(det)
        classification, tier = classify_with_threshold(scores, high_threshold)
        if dependents:
            classification = ImageClass.PARENT
        built.append(
            MasterImage(
                box=box,
                subfigure_id=subfigure_id,
                classification=classification,
                class_scores=scores,
                confidence_tier=tier,
                dependents=tuple(dependents),
                insets=tuple(insets),
            )
        )
    built.sort(key=lambda m: _reading_order(m.box))
    return built, unmatched
