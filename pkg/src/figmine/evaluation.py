"""Evaluation against ground-truth annotations.

Predictions and truths align by item_id (<figure_id>/<subfigure_id or
index>). Confusion matrices index row = truth, column = prediction over the
ImageClass enum order; the high tier filter excludes abstained predictions
from the matrix and reports them separately.
"""

from __future__ import annotations

import logging

import numpy as np

from .models import ConfidenceTier, ImageClass, SchemaError

log = logging.getLogger(__name__)

CLASS_ORDER = tuple(ImageClass)
CLASS_INDEX = {c: i for i, c in enumerate(CLASS_ORDER)}


def item_id(figure_id: str, subfigure_id, index: int) -> str:
    return f"{figure_id}/{subfigure_id if subfigure_id is not None else index}"


def _check_alignment(predictions: dict, truths: dict) -> None:
    missing = sorted(set(truths) - set(predictions))
    extra = sorted(set(predictions) - set(truths))
    if missing or extra:
        raise SchemaError(
            "item_id",
            f"prediction/truth ids misaligned; missing from predictions: {missing}; "
            f"missing from truths: {extra}",
        )


def confusion_matrix(predictions: dict, truths: dict, tier_filter=None):
    """K x K counts from id-aligned maps; returns (matrix, abstained_ids).

    predictions: item_id -> (ImageClass, ConfidenceTier); truths: item_id ->
    ImageClass. With tier_filter high_threshold, predictions below the tier
    are abstentions: excluded from the matrix, returned as the second element.
    """
    _check_alignment(predictions, truths)
    k = len(CLASS_ORDER)
    matrix = np.zeros((k, k), dtype=np.int64)
    abstained = []
    for key in sorted(truths):
        pred_class, tier = predictions[key]
        if tier_filter is not None and ConfidenceTier(tier) is not ConfidenceTier(tier_filter):
            abstained.append(key)
            continue
        matrix[CLASS_INDEX[ImageClass(truths[key])], CLASS_INDEX[ImageClass(pred_class)]] += 1
    return matrix, abstained


def precision_recall(matrix) -> dict:
    """Per-class (precision, recall); 0/0 cases are None, never 0."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise SchemaError("matrix", f"must be square, got shape {matrix.shape}")
    out = {}
    for i, cls in enumerate(CLASS_ORDER[: matrix.shape[0]]):
        tp = int(matrix[i, i])
        col = int(matrix[:, i].sum())
        row = int(matrix[i, :].sum())
        precision = tp / col if col else None
        recall = tp / row if row else None
        out[cls] = (precision, recall)
    return out


def scale_length_error(predicted_px: dict, truth_px: dict):
    """Mean |pred - truth| / truth over shared ids; None when no valid pairs."""
    errors = []
    for key in sorted(set(predicted_px) & set(truth_px)):
        t = truth_px[key]
        if t == 0:
            log.warning("zero truth bar length for %s; pair excluded", key)
            continue
        errors.append(abs(predicted_px[key] - t) / t)
    if not errors:
        return None
    return float(np.mean(errors))


# ---------------------------------------------------------------------------
# Document/ground-truth adapters
# ---------------------------------------------------------------------------


def document_predictions(doc) -> tuple:
    """(class predictions, scale bar pixel lengths) keyed by item_id."""
    classes: dict = {}
    scales: dict = {}
    for fig in doc.figures:
        for idx, m in enumerate(fig.masters):
            key = item_id(fig.figure_id, m.subfigure_id, idx)
            classes[key] = (m.classification, m.confidence_tier)
            if m.scale is not None:
                scales[key] = m.scale.bar_length_px
    return classes, scales


def groundtruth_truths(payloads) -> tuple:
    """(class truths, scale bar pixel lengths) from groundtruth file payloads."""
    classes: dict = {}
    scales: dict = {}
    for payload in payloads:
        for ann in payload.get("annotations", ()):
            classes[ann["item_id"]] = ImageClass(ann["classification"])
            bar = ann.get("scale_bar")
            if bar is not None:
                scales[ann["item_id"]] = bar["length_px"]
    return classes, scales


def evaluate_document(doc, payloads) -> dict:
    """Full report: both confusion matrices, per-class metrics, scale error.

    Only figures covered by the ground-truth payloads are evaluated; within
    those figures prediction and truth ids must align exactly.
    """
    covered = {p["figure_id"] for p in payloads}
    pred_classes, pred_scales = document_predictions(doc)
    truth_classes, truth_scales = groundtruth_truths(payloads)
    pred_classes = {k: v for k, v in pred_classes.items() if k.split("/", 1)[0] in covered}
    pred_scales = {k: v for k, v in pred_scales.items() if k.split("/", 1)[0] in covered}

    matrix_all, _ = confusion_matrix(pred_classes, truth_classes)
    matrix_high, abstained = confusion_matrix(
        pred_classes, truth_classes, tier_filter=ConfidenceTier.HIGH_THRESHOLD
    )
    per_class_all = precision_recall(matrix_all)
    per_class_high = precision_recall(matrix_high)

    def render(per_class):
        return {
            c.value: {"precision": p, "recall": r}
            for c, (p, r) in per_class.items()
        }

    return {
        "items": len(truth_classes),
        "classes": [c.value for c in CLASS_ORDER],
        "confusion_no_threshold": matrix_all.tolist(),
        "confusion_high_threshold": matrix_high.tolist(),
        "abstained": abstained,
        "metrics_no_threshold": render(per_class_all),
        "metrics_high_threshold": render(per_class_high),
        "scale_mean_absolute_relative_error": scale_length_error(pred_scales, truth_scales),
    }
