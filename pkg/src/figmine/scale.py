"""Scale-bar resolution: label validation, line/label pairing, measurement.

Label text must read "number then unit". Lines and labels pair greedily by
the globally smallest center distance. Each pair lands in the master image
containing the line's center and yields real-space dimensions.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from enum import Enum

from . import geometry
from .models import DetectionKind, LengthUnit, ScaleInfo, SchemaError

UNIT_ALIASES = {
    "Å": LengthUnit.ANGSTROM,
    "A": LengthUnit.ANGSTROM,
    "nm": LengthUnit.NM,
    "µm": LengthUnit.UM,
    "um": LengthUnit.UM,
    "μm": LengthUnit.UM,
    "mm": LengthUnit.MM,
}

_LABEL_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([^\s\d]+)\s*$")


class RejectionReason(str, Enum):
    MALFORMED = "malformed"
    UNKNOWN_UNIT = "unknown_unit"
    LOW_CONFIDENCE = "low_confidence"


@dataclass(frozen=True)
class ScaleRejection:
    raw: str
    reason: RejectionReason


@dataclass(frozen=True)
class ScaleLabelText:
    """Validated scale label: "50 nm" parsed into magnitude and unit."""

    raw: str
    magnitude: float
    unit: LengthUnit
    recognition_confidence: float

    def __post_init__(self):
        if self.magnitude <= 0:
            raise SchemaError("magnitude", f"must be positive, got {self.magnitude}")


def validate_scale_label(raw: str, confidence: float, threshold: float):
    """Return ScaleLabelText, or ScaleRejection naming why the text is unusable."""
    if confidence < threshold:
        return ScaleRejection(raw=raw, reason=RejectionReason.LOW_CONFIDENCE)
    m = _LABEL_RE.match(raw or "")
    if not m:
        return ScaleRejection(raw=raw, reason=RejectionReason.MALFORMED)
    magnitude = float(m.group(1))
    if magnitude <= 0:
        return ScaleRejection(raw=raw, reason=RejectionReason.MALFORMED)
    unit = UNIT_ALIASES.get(m.group(2))
    if unit is None:
        return ScaleRejection(raw=raw, reason=RejectionReason.UNKNOWN_UNIT)
    return ScaleLabelText(raw=raw, magnitude=magnitude, unit=unit, recognition_confidence=confidence)


def greedy_pair(lines, labels):
    """Pair scale-bar lines with labels, globally smallest center distance first.

    Ties break by (line index, label index). Returns (pairs, leftover_lines,
    leftover_labels) with input order preserved in the leftovers.
    """
    for d in lines:
        if d.kind is not DetectionKind.SCALE_BAR_LINE:
            raise SchemaError("lines", f"expected scale_bar_line, got {d.kind.value}")
    for d in labels:
        if d.kind is not DetectionKind.SCALE_BAR_LABEL:
            raise SchemaError("labels", f"expected scale_bar_label, got {d.kind.value}")
    edges = sorted(
        (
            (geometry.center_distance(ln.box.as_tuple(), lb.box.as_tuple()), i, j)
            for i, ln in enumerate(lines)
            for j, lb in enumerate(labels)
        ),
    )
    used_lines: set = set()
    used_labels: set = set()
    pairs = []
    for _, i, j in edges:
        if i in used_lines or j in used_labels:
            continue
        used_lines.add(i)
        used_labels.add(j)
        pairs.append((lines[i], labels[j]))
        if len(used_lines) == len(lines) or len(used_labels) == len(labels):
            break
    leftover_lines = [d for i, d in enumerate(lines) if i not in used_lines]
    leftover_labels = [d for j, d in enumerate(labels) if j not in used_labels]
    return pairs, leftover_lines, leftover_labels


def assign_and_measure(pairs, masters, scale_threshold: float = 0.2):
    """Attach each (line, label) pair to the master containing the line center.

    Pairs whose label text fails validation, land in no master, or lose a
    conflict (a master keeps the pair with the higher label confidence) are
    returned as leftovers. Returns (masters, leftover_pairs).
    """
    chosen: dict = {}
    leftovers: list = []
    for line, label in pairs:
        parsed = validate_scale_label(label.text or "", label.confidence, scale_threshold)
        if isinstance(parsed, ScaleRejection):
            leftovers.append((line, label))
            continue
        lc = geometry.center(line.box.as_tuple())
        inside = [k for k, m in enumerate(masters) if geometry.contains_point(m.box.as_tuple(), lc)]
        if not inside:
            leftovers.append((line, label))
            continue
        k = min(inside, key=lambda idx: geometry.area(masters[idx].box.as_tuple()))
        incumbent = chosen.get(k)
        if incumbent is not None:
            if parsed.recognition_confidence > incumbent[2].recognition_confidence:
                leftovers.append((incumbent[0], incumbent[1]))
                chosen[k] = (line, label, parsed)
            else:
                leftovers.append((line, label))
        else:
            chosen[k] = (line, label, parsed)
    out = list(masters)
    for k, (line, label, parsed) in chosen.items():
        info = ScaleInfo.compute(
            bar_box=line.box,
            label_box=label.box,
            label_text=parsed.raw,
            magnitude=parsed.magnitude,
            unit=parsed.unit,
            master_box=masters[k].box,
        )
        out[k] = dataclasses.replace(masters[k], scale=info)
    return out, leftovers


def resolve_scales(detections, masters, scale_threshold: float = 0.2):
    """Full scale stage for one figure; returns (masters, unpaired_detections)."""
    lines = [d for d in detections if d.kind is DetectionKind.SCALE_BAR_LINE]
    labels = [d for d in detections if d.kind is DetectionKind.SCALE_BAR_LABEL]
    pairs, rest_lines, rest_labels = greedy_pair(lines, labels)
    new_masters, leftover_pairs = assign_and_measure(pairs, masters, scale_threshold)
    unpaired = list(rest_lines) + list(rest_labels)
    for line, label in leftover_pairs:
        unpaired.extend((line, label))
    return new_masters, unpaired
