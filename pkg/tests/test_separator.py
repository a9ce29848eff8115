import json
import os
import random
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from figmine import geometry
from figmine.models import (
    BoundingBox,
    ConfidenceTier,
    Detection,
    DetectionKind,
    ImageClass,
    parse_detections_file,
)
from figmine.scale import resolve_scales
from figmine.separator import SeparatorConfig, assemble_mdi, classify_with_threshold, rule_based_segment


def panel_image(rows, cols, size=(300, 200), gutter=12):
    """Dark panels separated by bright gutters."""
    w, h = size
    img = np.full((h, w), 255, dtype=np.uint8)
    ph = (h - (rows - 1) * gutter) // rows
    pw = (w - (cols - 1) * gutter) // cols
    for r in range(rows):
        for c in range(cols):
            y0 = r * (ph + gutter)
            x0 = c * (pw + gutter)
            img[y0 : y0 + ph, x0 : x0 + pw] = 70
    return img


# ---------------------------------------------------------------------------
# Rule-based layout segmentation
# ---------------------------------------------------------------------------


def test_two_by_two_grid_splits_into_four():
    dets = rule_based_segment(panel_image(2, 2))
    assert len(dets) == 4
    assert all(d.kind is DetectionKind.MASTER_CANDIDATE for d in dets)


def test_single_panel_yields_single_candidate():
    dets = rule_based_segment(np.full((100, 100), 70, dtype=np.uint8))
    assert len(dets) == 1
    assert dets[0].box.as_tuple() == (0, 0, 100, 100)


def test_tiny_image_is_one_leaf():
    dets = rule_based_segment(np.full((20, 20), 70, dtype=np.uint8))
    assert len(dets) == 1


def test_row_split_only():
    dets = rule_based_segment(panel_image(2, 1))
    assert len(dets) == 2
    boxes = sorted(d.box.as_tuple() for d in dets)
    assert boxes[0][1] < boxes[1][1]


def test_rule_based_rejects_non_2d():
    with pytest.raises(ValueError):
        rule_based_segment(np.zeros((10, 10, 3), dtype=np.uint8))


@given(st.integers(1, 3), st.integers(1, 3))
def test_rule_based_leaves_never_overlap(rows, cols):
    dets = rule_based_segment(panel_image(rows, cols, size=(320, 240)))
    for i, a in enumerate(dets):
        for b in dets[i + 1 :]:
            assert geometry.intersection_area(a.box.as_tuple(), b.box.as_tuple()) == 0


# ---------------------------------------------------------------------------
# Two-tier classification
# ---------------------------------------------------------------------------


def test_threshold_nesting_and_rescale_invariance():
    rng = random.Random(7)
    start = time.monotonic()
    classes = list(ImageClass)
    for _ in range(1000):
        scores = {c: rng.random() for c in rng.sample(classes, rng.randint(1, len(classes)))}
        t2 = rng.random()
        t1 = t2 + (1.0 - t2) * rng.random()  # t1 >= t2
        cls1, tier1 = classify_with_threshold(scores, t1)
        cls2, tier2 = classify_with_threshold(scores, t2)
        assert cls1 is cls2
        if tier1 is ConfidenceTier.HIGH_THRESHOLD:
            assert tier2 is ConfidenceTier.HIGH_THRESHOLD
        factor = 0.1 + rng.random() * 5
        rescaled = {c: s * factor for c, s in scores.items()}
        cls3, _ = classify_with_threshold(rescaled, t1)
        assert cls3 is cls1  # argmax is invariant under positive rescaling
    assert time.monotonic() - start < 1.0


def test_classification_tie_breaks_by_declaration_order():
    scores = {ImageClass.GRAPH: 0.5, ImageClass.MICROSCOPY: 0.5}
    cls, _ = classify_with_threshold(scores, 0.99)
    assert cls is ImageClass.MICROSCOPY


def test_high_tier_at_boundary():
    cls, tier = classify_with_threshold({ImageClass.GRAPH: 0.99, ImageClass.UNCLEAR: 0.01}, 0.99)
    assert cls is ImageClass.GRAPH
    assert tier is ConfidenceTier.HIGH_THRESHOLD


# ---------------------------------------------------------------------------
# MDI assembly
# ---------------------------------------------------------------------------


def _master(box, **scores):
    return Detection(
        box=BoundingBox(*box),
        kind=DetectionKind.MASTER_CANDIDATE,
        confidence=0.9,
        class_scores={ImageClass(k): v for k, v in scores.items()},
    )


def _label(box, text):
    return Detection(box=BoundingBox(*box), kind=DetectionKind.SUBFIGURE_LABEL, confidence=0.9, text=text)


def test_containment_absorption_small_becomes_inset():
    dets = [
        _master((0, 0, 200, 200), microscopy=1.0),
        _master((150, 150, 195, 195), microscopy=1.0),  # ~5% of container
        _label((5, 5, 20, 20), "(a)"),
    ]
    masters, unmatched = assemble_mdi(dets, (200, 200))
    assert len(masters) == 1
    assert masters[0].insets == (BoundingBox(150, 150, 195, 195),)
    assert masters[0].dependents == ()
    assert unmatched == []


def test_containment_absorption_large_becomes_dependent_and_parent():
    dets = [
        _master((0, 0, 200, 200), microscopy=1.0),
        _master((10, 10, 190, 150), microscopy=1.0),  # well above the inset share
        _label((2, 2, 8, 8), "(a)"),
    ]
    masters, _ = assemble_mdi(dets, (200, 200))
    assert len(masters) == 1
    assert masters[0].dependents == (BoundingBox(10, 10, 190, 150),)
    assert masters[0].classification is ImageClass.PARENT


def test_sibling_absorption_grows_master_box():
    dets = [
        _master((0, 0, 100, 100), microscopy=1.0),
        _master((0, 110, 100, 210), microscopy=1.0),  # stacked, no label
        _label((5, 5, 20, 20), "(a)"),
    ]
    masters, _ = assemble_mdi(dets, (100, 210))
    assert len(masters) == 1
    assert masters[0].box == BoundingBox(0, 0, 100, 210)
    assert masters[0].dependents == (BoundingBox(0, 110, 100, 210),)
    assert masters[0].classification is ImageClass.PARENT


def test_far_sibling_stays_separate():
    dets = [
        _master((0, 0, 100, 100), microscopy=1.0),
        _master((0, 300, 100, 400), microscopy=1.0),  # gap 200 > 1.5 * 100
        _label((5, 5, 20, 20), "(a)"),
    ]
    masters, _ = assemble_mdi(dets, (100, 400))
    assert len(masters) == 2
    assert masters[1].subfigure_id is None


def test_duplicate_labels_keep_first_master():
    dets = [
        _master((0, 0, 100, 100), graph=1.0),
        _master((200, 0, 300, 100), graph=1.0),
        _label((5, 5, 20, 20), "(a)"),
        _label((205, 5, 220, 20), "(a)"),
    ]
    masters, unmatched = assemble_mdi(dets, (300, 100))
    assert [m.subfigure_id for m in masters] == ["a", None]
    assert [d.kind for d in unmatched] == [DetectionKind.SUBFIGURE_LABEL]


def test_label_conflict_resolved_by_distance():
    # both labels sit inside one candidate; nearer one wins
    dets = [
        _master((0, 0, 200, 200), graph=1.0),
        _label((90, 90, 110, 110), "(a)"),  # at center
        _label((0, 0, 10, 10), "(b)"),
    ]
    masters, unmatched = assemble_mdi(dets, (200, 200))
    assert masters[0].subfigure_id == "a"
    assert [d.text for d in unmatched] == ["(b)"]


@given(st.integers(2, 5))
def test_conservation_every_candidate_has_one_role(n):
    # n stacked candidates, first labeled: all others absorb or stay masters
    dets = [_master((0, i * 110, 100, i * 110 + 100), microscopy=1.0) for i in range(n)]
    dets.append(_label((5, 5, 20, 20), "(a)"))
    masters, unmatched = assemble_mdi(dets, (100, n * 110 + 100))
    n_masters = len(masters)
    n_deps = sum(len(m.dependents) for m in masters)
    n_insets = sum(len(m.insets) for m in masters)
    n_unmatched = sum(1 for d in unmatched if d.kind is DetectionKind.MASTER_CANDIDATE)
    assert n_masters + n_deps + n_insets + n_unmatched == n


def test_masters_sorted_in_reading_order():
    dets = [
        _master((200, 0, 300, 100), graph=1.0),
        _master((0, 0, 100, 100), graph=1.0),
        _master((0, 150, 100, 250), graph=1.0),
        _label((5, 5, 20, 20), "(a)"),
        _label((205, 5, 220, 20), "(b)"),
        _label((5, 155, 20, 170), "(c)"),
    ]
    masters, _ = assemble_mdi(dets, (300, 250))
    assert [m.box.as_tuple()[:2][::-1] for m in masters] == sorted(
        m.box.as_tuple()[:2][::-1] for m in masters
    )


# ---------------------------------------------------------------------------
# Fixture corpus: exact assembly
# ---------------------------------------------------------------------------


def _load_fixture_case(detections_dir, groundtruth_dir, fid):
    with open(os.path.join(detections_dir, f"{fid}.json"), encoding="utf-8") as f:
        _, size, dets = parse_detections_file(json.load(f))
    with open(os.path.join(groundtruth_dir, f"{fid}.json"), encoding="utf-8") as f:
        truth = json.load(f)
    return size, dets, truth


def _assembled(size, dets):
    masters, _ = assemble_mdi(dets, size)
    masters, _ = resolve_scales(dets, masters)
    return masters


def test_fixture_assembly_matches_authored_truth(detections_dir, groundtruth_dir):
    fids = sorted(name[: -len(".json")] for name in os.listdir(groundtruth_dir))
    assert len(fids) == 12
    for fid in fids:
        size, dets, truth = _load_fixture_case(detections_dir, groundtruth_dir, fid)
        masters = _assembled(size, dets)
        annotations = {a["item_id"]: a for a in truth["annotations"]}
        assert len(masters) == len(annotations), fid
        for idx, m in enumerate(masters):
            item = f"{fid}/{m.subfigure_id if m.subfigure_id is not None else idx}"
            want = annotations[item]
            assert m.box.to_dict() == want["box"], item
            assert m.classification.value == want["classification"], item
            assert m.subfigure_id == want["subfigure_id"], item
            assert [b.to_dict() for b in m.dependents] == want["dependents"], item
            assert [b.to_dict() for b in m.insets] == want["insets"], item
            if want["scale_bar"] is None:
                assert m.scale is None, item
            else:
                assert m.scale is not None, item
                assert m.scale.bar_length_px == want["scale_bar"]["length_px"], item
                assert m.scale.label_text == want["scale_bar"]["label_text"], item


def test_fixture_parent_case_label_b_with_two_dependents(detections_dir, groundtruth_dir):
    fid = "10-0001-fixture-0001_fig1"
    size, dets, _ = _load_fixture_case(detections_dir, groundtruth_dir, fid)
    masters = _assembled(size, dets)
    parent = next(m for m in masters if m.subfigure_id == "b")
    assert parent.classification is ImageClass.PARENT
    assert len(parent.dependents) == 2


def test_separator_config_validation():
    with pytest.raises(ValueError):
        SeparatorConfig(inset_containment=1.5)
