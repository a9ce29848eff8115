"""Axis-aligned box arithmetic shared by the separator, scale resolver and eval code."""

from __future__ import annotations

import math


def area(box: tuple[int, int, int, int]) -> int:
    x0, y0, x1, y1 = box
    return (x1 - x0) * (y1 - y0)


def center(box: tuple[int, int, int, int]) -> tuple[float, float]:
    x0, y0, x1, y1 = box
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


def center_distance(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    (ax, ay), (bx, by) = center(a), center(b)
    return math.hypot(ax - bx, ay - by)


def intersection_area(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> int:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def containment_ratio(inner: tuple[int, int, int, int], outer: tuple[int, int, int, int]) -> float:
    """Fraction of ``inner`` covered by ``outer``."""
    a = area(inner)
    if a == 0:
        return 0.0
    return intersection_area(inner, outer) / a


def contains_point(box: tuple[int, int, int, int], point: tuple[float, float]) -> bool:
    x, y = point
    return box[0] <= x < box[2] and box[1] <= y < box[3]


def union(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def x_overlap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> int:
    return max(0, min(a[2], b[2]) - max(a[0], b[0]))
