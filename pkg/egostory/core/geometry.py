"""Box and point arithmetic shared by cues, importance targets and evaluation.

Boxes are ``(x, y, w, h)`` in pixels with the covered span ``[x, x + w)``.
"""

import math
from typing import Iterable, Sequence

from egostory.schemas import Point, Rect


def rect_area(r: Rect) -> float:
    return max(r.w, 0.0) * max(r.h, 0.0)


def rect_center(r: Rect) -> Point:
    return (r.x + r.w / 2.0, r.y + r.h / 2.0)


def iou(a: Rect, b: Rect) -> float:
    if a == b:
        return 1.0 if rect_area(a) > 0 else 0.0
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = rect_area(a) + rect_area(b) - inter
    if union <= 0:
        return 0.0
    return min(1.0, inter / union)


def max_iou(r: Rect, others: Iterable[Rect]) -> float:
    return max((iou(r, o) for o in others), default=0.0)


def distance(p: Point, q: Point) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def nearest_distance(p: Point, candidates: Sequence[Point]) -> float:
    return min(distance(p, q) for q in candidates)


def frame_center(width: float, height: float) -> Point:
    return (width / 2.0, height / 2.0)


def frame_diagonal(width: float, height: float) -> float:
    return math.hypot(width, height)


def rect_in_frame(r: Rect, width: float, height: float) -> bool:
    return r.w > 0 and r.h > 0 and r.x >= 0 and r.y >= 0 and r.x + r.w <= width and r.y + r.h <= height


def point_in_frame(p: Point, width: float, height: float) -> bool:
    return 0 <= p[0] < width and 0 <= p[1] < height


def point_in_rect(p: Point, r: Rect) -> bool:
    return r.x <= p[0] <= r.x + r.w and r.y <= p[1] <= r.y + r.h
