"""Domain types and the JSON wire formats for the whole pipeline.

Everything here is an immutable value object; construction validates the
documented invariants and raises :class:`SchemaError` naming the offending
field. Serialization uses snake_case keys, explicit nulls for absent optional
fields and a fixed key order, so re-serializing a parsed document is
byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

SCHEMA_VERSION = "1"
PIPELINE_VERSION = "0.1.0"


class SchemaError(ValueError):
    """Raised when input data violates a schema or type invariant."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class ImageClass(str, Enum):
    # Order matters: argmax ties are broken by this declaration order.
    MICROSCOPY = "microscopy"
    DIFFRACTION = "diffraction"
    GRAPH = "graph"
    ILLUSTRATION = "illustration"
    PHOTO = "photo"
    PARENT = "parent"
    UNCLEAR = "unclear"


class DetectionKind(str, Enum):
    SUBFIGURE_LABEL = "subfigure_label"
    MASTER_CANDIDATE = "master_candidate"
    DEPENDENT_CANDIDATE = "dependent_candidate"
    INSET_CANDIDATE = "inset_candidate"
    SCALE_BAR_LINE = "scale_bar_line"
    SCALE_BAR_LABEL = "scale_bar_label"


CANDIDATE_KINDS = frozenset(
    {DetectionKind.MASTER_CANDIDATE, DetectionKind.DEPENDENT_CANDIDATE, DetectionKind.INSET_CANDIDATE}
)


class ConfidenceTier(str, Enum):
    HIGH_THRESHOLD = "high_threshold"
    NO_THRESHOLD_ONLY = "no_threshold_only"


class LabelCategory(str, Enum):
    SINGLE_LABEL = "single_label"
    MULTI_LABEL = "multi_label"
    LABEL_UNASSIGNED = "label_unassigned"
    CAPTION_UNASSIGNED = "caption_unassigned"


class LengthUnit(str, Enum):
    ANGSTROM = "angstrom"
    NM = "nm"
    UM = "um"
    MM = "mm"


UNIT_TO_NM = {
    LengthUnit.ANGSTROM: 0.1,
    LengthUnit.NM: 1.0,
    LengthUnit.UM: 1000.0,
    LengthUnit.MM: 1_000_000.0,
}


class JournalFamily(str, Enum):
    NATURE = "nature"
    ACS = "acs"
    FIXTURE = "fixture"


class SortOrder(str, Enum):
    RELEVANCE = "relevance"
    RECENT = "recent"


SIGNIFICANT_DIGITS = 6


def round_sig(x: float, sig: int = SIGNIFICANT_DIGITS) -> float:
    """Round to ``sig`` significant decimal digits (storage precision for scale values)."""
    if x == 0 or not math.isfinite(x):
        return float(x)
    return round(x, -int(math.floor(math.log10(abs(x)))) + (sig - 1))


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def normalize_subfigure_id(raw: str) -> str:
    """Canonical join key for a subfigure identifier: "(A)" -> "a"."""
    return raw.strip().strip("()").strip(".").strip().lower()


# ---------------------------------------------------------------------------
# Geometry and detections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundingBox:
    """Pixel rectangle, origin at the image's top-left corner."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise SchemaError(name, f"must be a non-negative integer, got {v!r}")
        if self.x0 >= self.x1:
            raise SchemaError("x1", f"must exceed x0 ({self.x0} >= {self.x1})")
        if self.y0 >= self.y1:
            raise SchemaError("y1", f"must exceed y0 ({self.y0} >= {self.y1})")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    def contains_box(self, other: "BoundingBox") -> bool:
        return (
            self.x0 <= other.x0 and self.y0 <= other.y0 and self.x1 >= other.x1 and self.y1 >= other.y1
        )

    def to_dict(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        return cls(d["x0"], d["y0"], d["x1"], d["y1"])


def _validate_scores(scores: dict, field_name: str) -> dict:
    out = {}
    for k, v in scores.items():
        cls = ImageClass(k)
        if not (0.0 <= float(v) <= 1.0):
            raise SchemaError(field_name, f"score for {cls.value} outside [0,1]: {v}")
        out[cls] = float(v)
    # canonical enum order for stable serialization
    return {c: out[c] for c in ImageClass if c in out}


@dataclass(frozen=True)
class Detection:
    """One raw detector output: a box plus its kind-specific payload."""

    box: BoundingBox
    kind: DetectionKind
    confidence: float
    text: str | None = None
    class_scores: dict | None = None

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise SchemaError("confidence", f"outside [0,1]: {self.confidence}")
        if self.class_scores is not None:
            if self.kind not in CANDIDATE_KINDS:
                raise SchemaError("class_scores", f"not allowed for kind {self.kind.value}")
            object.__setattr__(self, "class_scores", _validate_scores(self.class_scores, "class_scores"))
        if self.kind in (DetectionKind.SUBFIGURE_LABEL, DetectionKind.SCALE_BAR_LABEL) and not self.text:
            raise SchemaError("text", f"required for kind {self.kind.value}")

    def to_dict(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "kind": self.kind.value,
            "confidence": self.confidence,
            "text": self.text,
            "class_scores": None
            if self.class_scores is None
            else {c.value: s for c, s in self.class_scores.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(
            box=BoundingBox.from_dict(d["box"]),
            kind=DetectionKind(d["kind"]),
            confidence=d["confidence"],
            text=d.get("text"),
            class_scores=d.get("class_scores"),
        )


# ---------------------------------------------------------------------------
# Scale information
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleInfo:
    """A resolved scale bar: physical calibration for one master image."""

    bar_box: BoundingBox
    label_box: BoundingBox
    label_text: str
    magnitude: float
    unit: LengthUnit
    bar_length_px: int
    nm_per_pixel: float
    master_width_nm: float
    master_height_nm: float

    def __post_init__(self):
        if self.magnitude <= 0:
            raise SchemaError("magnitude", f"must be positive, got {self.magnitude}")
        if self.bar_length_px <= 0:
            raise SchemaError("bar_length_px", f"must be positive, got {self.bar_length_px}")
        expected = round_sig(self.magnitude * UNIT_TO_NM[self.unit] / self.bar_length_px)
        if not math.isclose(self.nm_per_pixel, expected, rel_tol=1e-9):
            raise SchemaError("nm_per_pixel", f"inconsistent: stored {self.nm_per_pixel}, computed {expected}")

    @classmethod
    def compute(
        cls,
        bar_box: BoundingBox,
        label_box: BoundingBox,
        label_text: str,
        magnitude: float,
        unit: LengthUnit,
        master_box: BoundingBox,
    ) -> "ScaleInfo":
        # Bars may be vertical, so pixel length is the larger box extent.
        bar_length_px = max(bar_box.width, bar_box.height)
        nm_per_pixel = round_sig(magnitude * UNIT_TO_NM[unit] / bar_length_px)
        return cls(
            bar_box=bar_box,
            label_box=label_box,
            label_text=label_text,
            magnitude=magnitude,
            unit=unit,
            bar_length_px=bar_length_px,
            nm_per_pixel=nm_per_pixel,
            master_width_nm=round_sig(master_box.width * nm_per_pixel),
            master_height_nm=round_sig(master_box.height * nm_per_pixel),
        )

    def to_dict(self) -> dict:
        return {
            "bar_box": self.bar_box.to_dict(),
            "label_box": self.label_box.to_dict(),
            "label_text": self.label_text,
            "magnitude": self.magnitude,
            "unit": self.unit.value,
            "bar_length_px": self.bar_length_px,
            "nm_per_pixel": self.nm_per_pixel,
            "master_width_nm": self.master_width_nm,
            "master_height_nm": self.master_height_nm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleInfo":
        return cls(
            bar_box=BoundingBox.from_dict(d["bar_box"]),
            label_box=BoundingBox.from_dict(d["label_box"]),
            label_text=d["label_text"],
            magnitude=d["magnitude"],
            unit=LengthUnit(d["unit"]),
            bar_length_px=d["bar_length_px"],
            nm_per_pixel=d["nm_per_pixel"],
            master_width_nm=d["master_width_nm"],
            master_height_nm=d["master_height_nm"],
        )


# ---------------------------------------------------------------------------
# Caption segments and hierarchical labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaptionSegment:
    """Caption text distributed to one subfigure identifier."""

    subfigure_id: str
    text: str
    matched_pattern: int
    cross_references: tuple = ()
    keywords: tuple = ()

    def __post_init__(self):
        if not self.text:
            raise SchemaError("text", "segment text must be non-empty")
        if self.subfigure_id != normalize_subfigure_id(self.subfigure_id):
            raise SchemaError("subfigure_id", f"not normalized: {self.subfigure_id!r}")
        object.__setattr__(self, "cross_references", tuple(self.cross_references))
        object.__setattr__(self, "keywords", tuple(self.keywords))

    def rendered(self) -> str:
        """Display form with the identifier prefix, e.g. ``(a) TEM images ...``."""
        punct = "" if self.text.rstrip().endswith((".", "!", "?")) else "."
        return f"({self.subfigure_id}) {self.text}{punct}"

    def to_dict(self) -> dict:
        return {
            "subfigure_id": self.subfigure_id,
            "text": self.text,
            "matched_pattern": self.matched_pattern,
            "cross_references": list(self.cross_references),
            "keywords": list(self.keywords),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaptionSegment":
        return cls(
            subfigure_id=d["subfigure_id"],
            text=d["text"],
            matched_pattern=d["matched_pattern"],
            cross_references=tuple(d.get("cross_references", ())),
            keywords=tuple(d.get("keywords", ())),
        )


@dataclass(frozen=True)
class HierarchicalLabels:
    """Self-labeling output: caption words, abstract context words, optional topic."""

    caption_labels: tuple
    abstract_labels: tuple
    topic_label: str | None
    topic_confidence: float

    def __post_init__(self):
        object.__setattr__(self, "caption_labels", tuple(self.caption_labels))
        object.__setattr__(self, "abstract_labels", tuple(self.abstract_labels))

    def to_dict(self) -> dict:
        return {
            "caption_labels": list(self.caption_labels),
            "abstract_labels": list(self.abstract_labels),
            "topic_label": self.topic_label,
            "topic_confidence": self.topic_confidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchicalLabels":
        return cls(
            caption_labels=tuple(d["caption_labels"]),
            abstract_labels=tuple(d["abstract_labels"]),
            topic_label=d.get("topic_label"),
            topic_confidence=d["topic_confidence"],
        )


# ---------------------------------------------------------------------------
# Master images
# ---------------------------------------------------------------------------


def label_category_for(keywords: tuple, caption_segment: str | None) -> LabelCategory:
    """The four-way labeling outcome; exactly one rule fires for any input."""
    if caption_segment is None:
        return LabelCategory.CAPTION_UNASSIGNED
    if len(keywords) == 0:
        return LabelCategory.LABEL_UNASSIGNED
    if len(keywords) == 1:
        return LabelCategory.SINGLE_LABEL
    return LabelCategory.MULTI_LABEL


@dataclass(frozen=True)
class MasterImage:
    """One master unit of a figure: its box, classification, sub-parts and labels."""

    box: BoundingBox
    classification: ImageClass
    class_scores: dict
    confidence_tier: ConfidenceTier
    subfigure_id: str | None = None
    dependents: tuple = ()
    insets: tuple = ()
    scale: ScaleInfo | None = None
    caption_segment: str | None = None
    keywords: tuple = ()
    label_category: LabelCategory = LabelCategory.CAPTION_UNASSIGNED
    crop_path: str | None = None
    hierarchical_labels: HierarchicalLabels | None = None

    def __post_init__(self):
        object.__setattr__(self, "class_scores", _validate_scores(self.class_scores, "class_scores"))
        object.__setattr__(self, "dependents", tuple(self.dependents))
        object.__setattr__(self, "insets", tuple(self.insets))
        object.__setattr__(self, "keywords", tuple(self.keywords))
        for name, boxes in (("dependents", self.dependents), ("insets", self.insets)):
            for b in boxes:
                if not self.box.contains_box(b):
                    raise SchemaError(name, f"{b.as_tuple()} not contained in master box {self.box.as_tuple()}")
        if self.classification is ImageClass.PARENT and not self.dependents:
            raise SchemaError("classification", "parent requires at least one dependent")
        if len(self.dependents) >= 2 and self.classification is not ImageClass.PARENT:
            raise SchemaError("classification", "two or more dependents imply parent")
        expected = label_category_for(self.keywords, self.caption_segment)
        if self.label_category is not expected:
            raise SchemaError(
                "label_category", f"stored {self.label_category.value} but rules give {expected.value}"
            )

    def to_dict(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "subfigure_id": self.subfigure_id,
            "classification": self.classification.value,
            "class_scores": {c.value: s for c, s in self.class_scores.items()},
            "confidence_tier": self.confidence_tier.value,
            "dependents": [b.to_dict() for b in self.dependents],
            "insets": [b.to_dict() for b in self.insets],
            "scale": None if self.scale is None else self.scale.to_dict(),
            "caption_segment": self.caption_segment,
            "keywords": list(self.keywords),
            "label_category": self.label_category.value,
            "crop_path": self.crop_path,
            "hierarchical_labels": None
            if self.hierarchical_labels is None
            else self.hierarchical_labels.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MasterImage":
        return cls(
            box=BoundingBox.from_dict(d["box"]),
            subfigure_id=d.get("subfigure_id"),
            classification=ImageClass(d["classification"]),
            class_scores=d["class_scores"],
            confidence_tier=ConfidenceTier(d["confidence_tier"]),
            dependents=tuple(BoundingBox.from_dict(b) for b in d.get("dependents", ())),
            insets=tuple(BoundingBox.from_dict(b) for b in d.get("insets", ())),
            scale=None if d.get("scale") is None else ScaleInfo.from_dict(d["scale"]),
            caption_segment=d.get("caption_segment"),
            keywords=tuple(d.get("keywords", ())),
            label_category=LabelCategory(d["label_category"]),
            crop_path=d.get("crop_path"),
            hierarchical_labels=None
            if d.get("hierarchical_labels") is None
            else HierarchicalLabels.from_dict(d["hierarchical_labels"]),
        )


# ---------------------------------------------------------------------------
# Figures, articles, documents
# ---------------------------------------------------------------------------

MASTER_OVERLAP_IOU_TOLERANCE = 0.1


@dataclass(frozen=True)
class FigureRecord:
    """One figure/caption pair with its full decomposition."""

    figure_id: str
    article_doi: str
    article_url: str
    figure_url: str
    image_path: str
    caption_text: str
    detections: tuple = ()
    masters: tuple = ()
    unmatched_detections: tuple = ()
    orphan_segments: tuple = ()

    def __post_init__(self):
        from . import geometry

        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "masters", tuple(self.masters))
        object.__setattr__(self, "unmatched_detections", tuple(self.unmatched_detections))
        object.__setattr__(self, "orphan_segments", tuple(self.orphan_segments))
        for i, a in enumerate(self.masters):
            for b in self.masters[i + 1 :]:
                overlap = geometry.iou(a.box.as_tuple(), b.box.as_tuple())
                if overlap > MASTER_OVERLAP_IOU_TOLERANCE:
                    raise SchemaError(
                        "masters", f"boxes {a.box.as_tuple()} and {b.box.as_tuple()} overlap (IoU {overlap:.3f})"
                    )
        seen = set()
        for m in self.masters:
            if m.subfigure_id is not None:
                if m.subfigure_id in seen:
                    raise SchemaError("masters", f"duplicate subfigure_id {m.subfigure_id!r}")
                seen.add(m.subfigure_id)

    def to_dict(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "article_doi": self.article_doi,
            "article_url": self.article_url,
            "figure_url": self.figure_url,
            "image_path": self.image_path,
            "caption_text": self.caption_text,
            "detections": [d.to_dict() for d in self.detections],
            "masters": [m.to_dict() for m in self.masters],
            "unmatched_detections": [d.to_dict() for d in self.unmatched_detections],
            "orphan_segments": [s.to_dict() for s in self.orphan_segments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FigureRecord":
        return cls(
            figure_id=d["figure_id"],
            article_doi=d["article_doi"],
            article_url=d["article_url"],
            figure_url=d["figure_url"],
            image_path=d["image_path"],
            caption_text=d["caption_text"],
            detections=tuple(Detection.from_dict(x) for x in d.get("detections", ())),
            masters=tuple(MasterImage.from_dict(x) for x in d.get("masters", ())),
            unmatched_detections=tuple(Detection.from_dict(x) for x in d.get("unmatched_detections", ())),
            orphan_segments=tuple(CaptionSegment.from_dict(x) for x in d.get("orphan_segments", ())),
        )


@dataclass(frozen=True)
class ArticleRecord:
    doi: str
    title: str
    url: str
    open_access: bool
    abstract_text: str | None = None

    def to_dict(self) -> dict:
        return {
            "doi": self.doi,
            "title": self.title,
            "url": self.url,
            "open_access": self.open_access,
            "abstract_text": self.abstract_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArticleRecord":
        return cls(
            doi=d["doi"],
            title=d["title"],
            url=d["url"],
            open_access=d["open_access"],
            abstract_text=d.get("abstract_text"),
        )


@dataclass(frozen=True)
class KeywordFamily:
    """A search term plus its synonyms, interchangeable in search."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise SchemaError("terms", "keyword family must have at least one term")
        seen = set()
        for t in self.terms:
            if not t or not isinstance(t, str):
                raise SchemaError("terms", f"invalid term {t!r}")
            if t != t.lower().strip():
                raise SchemaError("terms", f"term not lowercase-normalized: {t!r}")
            if t in seen:
                raise SchemaError("terms", f"duplicate term {t!r} within family")
            seen.add(t)


DEFAULT_HIGH_CONFIDENCE_THRESHOLD = 0.99
DEFAULT_SCALE_LABEL_CONFIDENCE_THRESHOLD = 0.2
DEFAULT_TOPIC_CONFIDENCE_THRESHOLD = 0.80


@dataclass(frozen=True)
class Query:
    """User search specification driving a pipeline run."""

    name: str
    journal_family: JournalFamily
    article_limit: int
    keyword_families: tuple
    sort_order: SortOrder = SortOrder.RELEVANCE
    open_access_only: bool = True
    high_confidence_threshold: float = DEFAULT_HIGH_CONFIDENCE_THRESHOLD
    scale_label_confidence_threshold: float = DEFAULT_SCALE_LABEL_CONFIDENCE_THRESHOLD
    topic_confidence_threshold: float = DEFAULT_TOPIC_CONFIDENCE_THRESHOLD
    output_directory: str = "output"

    def __post_init__(self):
        object.__setattr__(self, "keyword_families", tuple(self.keyword_families))
        if not isinstance(self.article_limit, int) or self.article_limit < 1:
            raise SchemaError("article_limit", f"must be >= 1, got {self.article_limit!r}")
        if not self.keyword_families:
            raise SchemaError("keyword_families", "must be non-empty")
        for name in (
            "high_confidence_threshold",
            "scale_label_confidence_threshold",
            "topic_confidence_threshold",
        ):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise SchemaError(name, f"must be in [0,1], got {v}")

    def all_terms(self) -> tuple:
        return tuple(t for fam in self.keyword_families for t in fam.terms)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "journal_family": self.journal_family.value,
            "article_limit": self.article_limit,
            "sort_order": self.sort_order.value,
            "keyword_families": [list(f.terms) for f in self.keyword_families],
            "open_access_only": self.open_access_only,
            "high_confidence_threshold": self.high_confidence_threshold,
            "scale_label_confidence_threshold": self.scale_label_confidence_threshold,
            "topic_confidence_threshold": self.topic_confidence_threshold,
            "output_directory": self.output_directory,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Query":
        return parse_query_dict(d)


@dataclass(frozen=True)
class LabelStatistics:
    """Aggregate counts over every master image in a document."""

    class_counts: dict = field(default_factory=dict)  # class value -> {"total", "high_threshold"}
    category_counts: dict = field(default_factory=dict)  # category value -> count
    keyword_counts: dict = field(default_factory=dict)  # keyword -> count

    def __post_init__(self):
        for cls_value, tiers in self.class_counts.items():
            ImageClass(cls_value)
            if tiers["high_threshold"] > tiers["total"]:
                raise SchemaError(
                    "class_counts", f"{cls_value}: high_threshold {tiers['high_threshold']} > total {tiers['total']}"
                )
        for cat in self.category_counts:
            LabelCategory(cat)

    def total_masters(self) -> int:
        return sum(self.category_counts.values())

    def to_dict(self) -> dict:
        return {
            "class_counts": self.class_counts,
            "category_counts": self.category_counts,
            "keyword_counts": self.keyword_counts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelStatistics":
        return cls(
            class_counts=d.get("class_counts", {}),
            category_counts=d.get("category_counts", {}),
            keyword_counts=d.get("keyword_counts", {}),
        )


def compute_statistics(figures) -> LabelStatistics:
    class_counts = {c.value: {"total": 0, "high_threshold": 0} for c in ImageClass}
    category_counts = {c.value: 0 for c in LabelCategory}
    keyword_counts: dict = {}
    for fig in figures:
        for m in fig.masters:
            entry = class_counts[m.classification.value]
            entry["total"] += 1
            if m.confidence_tier is ConfidenceTier.HIGH_THRESHOLD:
                entry["high_threshold"] += 1
            category_counts[m.label_category.value] += 1
            for kw in m.keywords:
                keyword_counts[kw] = keyword_counts.get(kw, 0) + 1
    return LabelStatistics(
        class_counts=class_counts,
        category_counts=category_counts,
        keyword_counts=dict(sorted(keyword_counts.items())),
    )


@dataclass(frozen=True)
class ExsclaimDocument:
    """Full output dataset: articles, figures, statistics and provenance."""

    query: Query
    articles: tuple
    figures: tuple
    statistics: LabelStatistics
    created_at: str
    pipeline_version: str = PIPELINE_VERSION

    def __post_init__(self):
        object.__setattr__(self, "articles", tuple(self.articles))
        object.__setattr__(self, "figures", tuple(self.figures))
        dois = {a.doi for a in self.articles}
        for fig in self.figures:
            if fig.article_doi not in dois:
                raise SchemaError("figures", f"{fig.figure_id}: article_doi {fig.article_doi!r} not in articles")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "pipeline_version": self.pipeline_version,
            "created_at": self.created_at,
            "query": self.query.to_dict(),
            "articles": [a.to_dict() for a in self.articles],
            "figures": [f.to_dict() for f in self.figures],
            "statistics": self.statistics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExsclaimDocument":
        return cls(
            query=parse_query_dict(d["query"]),
            articles=tuple(ArticleRecord.from_dict(a) for a in d.get("articles", ())),
            figures=tuple(FigureRecord.from_dict(f) for f in d.get("figures", ())),
            statistics=LabelStatistics.from_dict(d.get("statistics", {})),
            created_at=d["created_at"],
            pipeline_version=d.get("pipeline_version", PIPELINE_VERSION),
        )


# ---------------------------------------------------------------------------
# Top-level (de)serialization
# ---------------------------------------------------------------------------


def serialize_document(doc: ExsclaimDocument) -> str:
    """UTF-8 JSON text with deterministic key order; round-trip stable."""
    return json.dumps(doc.to_dict(), ensure_ascii=False, indent=2) + "\n"


def parse_document(text: str) -> ExsclaimDocument:
    return ExsclaimDocument.from_dict(json.loads(text))


def parse_query_dict(d: dict) -> Query:
    if not isinstance(d, dict):
        raise SchemaError("query", f"expected a JSON object, got {type(d).__name__}")
    for required in ("name", "journal_family", "article_limit", "keyword_families"):
        if required not in d:
            raise SchemaError(required, "missing required field")
    try:
        journal_family = JournalFamily(d["journal_family"])
    except ValueError:
        raise SchemaError("journal_family", f"unknown family {d['journal_family']!r}") from None
    try:
        sort_order = SortOrder(d.get("sort_order", "relevance"))
    except ValueError:
        raise SchemaError("sort_order", f"unknown order {d['sort_order']!r}") from None
    raw_families = d["keyword_families"]
    if not isinstance(raw_families, list) or not raw_families:
        raise SchemaError("keyword_families", "must be a non-empty list of term lists")
    families = []
    for i, terms in enumerate(raw_families):
        if not isinstance(terms, list) or not terms:
            raise SchemaError(f"keyword_families[{i}]", "must be a non-empty list of terms")
        normalized = []
        for t in terms:
            if not isinstance(t, str) or not t.strip():
                raise SchemaError(f"keyword_families[{i}]", f"invalid term {t!r}")
            norm = t.strip().lower()
            if norm not in normalized:
                normalized.append(norm)
        families.append(KeywordFamily(terms=tuple(normalized)))
    article_limit = d["article_limit"]
    if not isinstance(article_limit, int) or isinstance(article_limit, bool):
        raise SchemaError("article_limit", f"must be an integer, got {article_limit!r}")
    return Query(
        name=str(d["name"]),
        journal_family=journal_family,
        article_limit=article_limit,
        sort_order=sort_order,
        keyword_families=tuple(families),
        open_access_only=bool(d.get("open_access_only", True)),
        high_confidence_threshold=float(d.get("high_confidence_threshold", DEFAULT_HIGH_CONFIDENCE_THRESHOLD)),
        scale_label_confidence_threshold=float(
            d.get("scale_label_confidence_threshold", DEFAULT_SCALE_LABEL_CONFIDENCE_THRESHOLD)
        ),
        topic_confidence_threshold=float(d.get("topic_confidence_threshold", DEFAULT_TOPIC_CONFIDENCE_THRESHOLD)),
        output_directory=str(d.get("output_directory", "output")),
    )


def parse_query(text: str) -> Query:
    """Parse query JSON text, filling defaults and normalizing terms."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("query", f"invalid JSON: {e}") from None
    return parse_query_dict(data)


# ---------------------------------------------------------------------------
# Detection and ground-truth file formats
# ---------------------------------------------------------------------------


def parse_detections_file(data: dict) -> tuple:
    """Parse one detections-file payload into (figure_id, image_size, detections)."""
    for required in ("figure_id", "detections"):
        if required not in data:
            raise SchemaError(required, "missing required field")
    size = data.get("image_size")
    image_size = None if size is None else (size["width"], size["height"])
    detections = tuple(Detection.from_dict(d) for d in data["detections"])
    return data["figure_id"], image_size, detections


def detections_to_dict(figure_id: str, image_size: tuple | None, detections) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "figure_id": figure_id}
    if image_size is not None:
        out["image_size"] = {"width": image_size[0], "height": image_size[1]}
    out["detections"] = [d.to_dict() for d in detections]
    return out
