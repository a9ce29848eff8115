import math
import random
import time
from fractions import Fraction

import pytest

from figmine.models import (
    BoundingBox,
    ConfidenceTier,
    Detection,
    DetectionKind,
    ImageClass,
    LengthUnit,
    MasterImage,
    ScaleInfo,
    round_sig,
)
from figmine.scale import (
    RejectionReason,
    ScaleLabelText,
    ScaleRejection,
    assign_and_measure,
    greedy_pair,
    resolve_scales,
    validate_scale_label,
)

NM = {LengthUnit.ANGSTROM: Fraction(1, 10), LengthUnit.NM: 1, LengthUnit.UM: 1000, LengthUnit.MM: 10**6}


def _line(box):
    return Detection(box=BoundingBox(*box), kind=DetectionKind.SCALE_BAR_LINE, confidence=0.9)


def _label(box, text="100 nm", confidence=0.9):
    return Detection(box=BoundingBox(*box), kind=DetectionKind.SCALE_BAR_LABEL, confidence=confidence, text=text)


def _master(box, subfigure_id=None):
    return MasterImage(
        box=BoundingBox(*box),
        classification=ImageClass.MICROSCOPY,
        class_scores={ImageClass.MICROSCOPY: 1.0},
        confidence_tier=ConfidenceTier.HIGH_THRESHOLD,
        subfigure_id=subfigure_id,
    )


# ---------------------------------------------------------------------------
# Label validation
# ---------------------------------------------------------------------------

VALIDATOR_TABLE = [
    # (raw, confidence, threshold, expected)
    ("50 nm", 0.9, 0.2, (50.0, LengthUnit.NM)),
    ("nm 50", 0.9, 0.2, RejectionReason.MALFORMED),
    ("2 Å", 0.9, 0.2, (2.0, LengthUnit.ANGSTROM)),
    ("2 A", 0.9, 0.2, (2.0, LengthUnit.ANGSTROM)),
    ("0.5 µm", 0.9, 0.2, (0.5, LengthUnit.UM)),
    ("0.5 μm", 0.9, 0.2, (0.5, LengthUnit.UM)),
    ("0.5 um", 0.9, 0.2, (0.5, LengthUnit.UM)),
    ("1 mm", 0.9, 0.2, (1.0, LengthUnit.MM)),
    ("100nm", 0.9, 0.2, (100.0, LengthUnit.NM)),
    ("  50 nm  ", 0.9, 0.2, (50.0, LengthUnit.NM)),
    ("50\tnm", 0.9, 0.2, (50.0, LengthUnit.NM)),
    ("2.5 nm", 0.9, 0.2, (2.5, LengthUnit.NM)),
    ("007 nm", 0.9, 0.2, (7.0, LengthUnit.NM)),
    ("50 px", 0.9, 0.2, RejectionReason.UNKNOWN_UNIT),
    ("50 cm", 0.9, 0.2, RejectionReason.UNKNOWN_UNIT),
    ("50 NM", 0.9, 0.2, RejectionReason.UNKNOWN_UNIT),
    ("50 Nm", 0.9, 0.2, RejectionReason.UNKNOWN_UNIT),
    ("50", 0.9, 0.2, RejectionReason.MALFORMED),
    ("nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("", 0.9, 0.2, RejectionReason.MALFORMED),
    ("   ", 0.9, 0.2, RejectionReason.MALFORMED),
    ("0 nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("0.0 nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("-5 nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("5.5.5 nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("1e3 nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("50 nm extra", 0.9, 0.2, RejectionReason.MALFORMED),
    ("½ nm", 0.9, 0.2, RejectionReason.MALFORMED),
    ("50 nm", 0.1, 0.2, RejectionReason.LOW_CONFIDENCE),
    ("garbage", 0.1, 0.2, RejectionReason.LOW_CONFIDENCE),
]


def test_validator_table_has_thirty_cases():
    assert len(VALIDATOR_TABLE) == 30


@pytest.mark.parametrize("raw,confidence,threshold,expected", VALIDATOR_TABLE)
def test_scale_label_validator(raw, confidence, threshold, expected):
    got = validate_scale_label(raw, confidence, threshold)
    if isinstance(expected, RejectionReason):
        assert isinstance(got, ScaleRejection)
        assert got.reason is expected
        assert got.raw == raw
    else:
        assert isinstance(got, ScaleLabelText)
        assert (got.magnitude, got.unit) == expected
        assert got.raw == raw
        assert got.recognition_confidence == confidence


def test_low_confidence_wins_over_parse_outcome():
    # the confidence gate fires before any text inspection
    got = validate_scale_label("50 nm", 0.19999, 0.2)
    assert isinstance(got, ScaleRejection)
    assert got.reason is RejectionReason.LOW_CONFIDENCE


# ---------------------------------------------------------------------------
# Greedy line/label pairing vs exhaustive oracle
# ---------------------------------------------------------------------------


def _random_box(rng, span=30):
    x0 = rng.randrange(span)
    y0 = rng.randrange(span)
    return (x0, y0, x0 + rng.randrange(1, 8), y0 + rng.randrange(1, 8))


def _sq_dist(a, b):
    # 4 * squared center distance, exact in integers
    dx = (a[0] + a[2]) - (b[0] + b[2])
    dy = (a[1] + a[3]) - (b[1] + b[3])
    return dx * dx + dy * dy


def _oracle_pairing(line_boxes, label_boxes):
    """Repeatedly scan all remaining pairs, take the minimum each step."""
    remaining_lines = set(range(len(line_boxes)))
    remaining_labels = set(range(len(label_boxes)))
    order = []
    while remaining_lines and remaining_labels:
        best = min(
            ((_sq_dist(line_boxes[i], label_boxes[j]), i, j) for i in remaining_lines for j in remaining_labels),
        )
        _, i, j = best
        remaining_lines.discard(i)
        remaining_labels.discard(j)
        order.append((i, j))
    return order


def test_greedy_pairing_matches_exhaustive_oracle():
    rng = random.Random(20260815)
    start = time.monotonic()
    for _ in range(200):
        n_lines = rng.randint(0, 5)
        n_labels = rng.randint(0, 5)
        line_boxes = [_random_box(rng) for _ in range(n_lines)]
        label_boxes = [_random_box(rng) for _ in range(n_labels)]
        lines = [_line(b) for b in line_boxes]
        labels = [_label(b) for b in label_boxes]
        pairs, rest_lines, rest_labels = greedy_pair(lines, labels)
        want = _oracle_pairing(line_boxes, label_boxes)
        got = [(lines.index(ln), labels.index(lb)) for ln, lb in pairs]
        assert got == want
        assert len(pairs) == min(n_lines, n_labels)
        assert len(rest_lines) == n_lines - len(pairs)
        assert len(rest_labels) == n_labels - len(pairs)
        if want:
            global_min = min(
                (_sq_dist(a, b), i, j) for i, a in enumerate(line_boxes) for j, b in enumerate(label_boxes)
            )
            assert got[0] == global_min[1:]
    assert time.monotonic() - start < 5.0


def test_greedy_pairing_rejects_wrong_kinds():
    with pytest.raises(ValueError):
        greedy_pair([_label((0, 0, 5, 5))], [])
    with pytest.raises(ValueError):
        greedy_pair([], [_line((0, 0, 5, 5))])


def test_greedy_tie_breaks_by_line_then_label_index():
    # two lines equidistant from one label: lower line index wins
    lines = [_line((0, 0, 10, 10)), _line((0, 0, 10, 10))]
    labels = [_label((20, 0, 30, 10))]
    pairs, rest_lines, _ = greedy_pair(lines, labels)
    assert pairs[0][0] is lines[0]
    assert rest_lines == [lines[1]]


# ---------------------------------------------------------------------------
# Measurement arithmetic
# ---------------------------------------------------------------------------


def test_scale_arithmetic_random_triples():
    rng = random.Random(99)
    units = list(LengthUnit)
    for _ in range(50):
        magnitude = round(rng.uniform(0.1, 500.0), 3)
        unit = rng.choice(units)
        px = rng.randint(1, 400)
        info = ScaleInfo.compute(
            bar_box=BoundingBox(0, 0, px, 1),  # height 1 so width is the long side
            label_box=BoundingBox(0, 6, 40, 16),
            label_text=f"{magnitude} {unit.value}",
            magnitude=magnitude,
            unit=unit,
            master_box=BoundingBox(0, 0, 500, 500),
        )
        expected = round_sig(float(Fraction(str(magnitude)) * NM[unit] / px))
        assert math.isclose(info.nm_per_pixel, expected, rel_tol=1e-9)
        assert info.bar_length_px == px
        assert math.isclose(info.master_width_nm, round_sig(500 * info.nm_per_pixel), rel_tol=1e-9)


def test_vertical_bar_uses_long_side():
    info = ScaleInfo.compute(
        bar_box=BoundingBox(10, 10, 16, 110),
        label_box=BoundingBox(20, 10, 60, 30),
        label_text="2 Å",
        magnitude=2.0,
        unit=LengthUnit.ANGSTROM,
        master_box=BoundingBox(0, 0, 300, 300),
    )
    assert info.bar_length_px == 100
    assert math.isclose(info.nm_per_pixel, 0.002, rel_tol=1e-9)


def test_unit_lattice_hand_values():
    cases = [
        (LengthUnit.ANGSTROM, 1.0, 10, 0.01),
        (LengthUnit.NM, 100.0, 100, 1.0),
        (LengthUnit.UM, 1.0, 400, 2.5),
        (LengthUnit.MM, 1.0, 100, 10000.0),
    ]
    for unit, magnitude, px, want in cases:
        info = ScaleInfo.compute(
            bar_box=BoundingBox(0, 0, px, 3),
            label_box=BoundingBox(0, 5, 30, 15),
            label_text=f"{magnitude} {unit.value}",
            magnitude=magnitude,
            unit=unit,
            master_box=BoundingBox(0, 0, 500, 500),
        )
        assert math.isclose(info.nm_per_pixel, want, rel_tol=1e-9)


# ---------------------------------------------------------------------------
# Assignment to masters
# ---------------------------------------------------------------------------


def test_pair_lands_in_smallest_containing_master():
    outer = _master((0, 0, 400, 400), "a")
    inner = _master((100, 100, 300, 300), "b")
    pair = (_line((150, 150, 250, 156)), _label((150, 160, 200, 176), "100 nm"))
    out, leftovers = assign_and_measure([pair], [outer, inner])
    assert leftovers == []
    assert out[0].scale is None
    assert out[1].scale is not None
    assert out[1].scale.nm_per_pixel == 1.0


def test_pair_outside_all_masters_left_over():
    masters = [_master((0, 0, 100, 100), "a")]
    pair = (_line((200, 200, 300, 206)), _label((200, 210, 240, 226), "100 nm"))
    out, leftovers = assign_and_measure([pair], masters)
    assert out[0].scale is None
    assert leftovers == [pair]


def test_master_conflict_keeps_higher_recognition_confidence():
    masters = [_master((0, 0, 400, 400), "a")]
    weak = (_line((10, 10, 110, 16)), _label((10, 20, 50, 36), "1 µm", confidence=0.9))
    strong = (_line((10, 300, 210, 306)), _label((10, 310, 60, 326), "500 nm", confidence=0.95))
    out, leftovers = assign_and_measure([weak, strong], masters)
    assert out[0].scale is not None
    assert out[0].scale.label_text == "500 nm"
    assert leftovers == [weak]


def test_rejected_label_text_leaves_master_unscaled():
    masters = [_master((0, 0, 100, 100), "a")]
    pair = (_line((10, 80, 60, 86)), _label((10, 60, 40, 76), "nm 50"))
    out, leftovers = assign_and_measure([pair], masters)
    assert out[0].scale is None
    assert leftovers == [pair]


def test_resolve_scales_routes_unpaired_detections():
    masters = [_master((0, 0, 200, 200), "a")]
    dets = [
        _line((10, 180, 110, 186)),
        _label((10, 160, 50, 176), "100 nm"),
        _label((150, 10, 190, 26), "5 nm"),  # no line left to pair with
    ]
    out, unpaired = resolve_scales(dets, masters)
    assert out[0].scale is not None
    assert out[0].scale.label_text == "100 nm"
    assert [d.text for d in unpaired] == ["5 nm"]


def test_resolve_scales_ignores_other_detection_kinds():
    masters = [_master((0, 0, 200, 200), "a")]
    extra = Detection(box=BoundingBox(0, 0, 200, 200), kind=DetectionKind.MASTER_CANDIDATE, confidence=0.9)
    out, unpaired = resolve_scales([extra], masters)
    assert out == masters
    assert unpaired == []
