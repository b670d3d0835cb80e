"""Rectangle arithmetic for region search.

Coordinates are floats with a top-left origin. Areas use half-open
semantics; point containment is boundary-inclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class GeometryError(ValueError):
    """Raised for degenerate geometric input (zero-area boxes, empty sets)."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_list(self) -> list[float]:
        return [self.x, self.y]


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        vals = (self.x0, self.y0, self.x1, self.y1)
        if not all(math.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite rect {vals}")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise GeometryError(f"zero-area or inverted rect {vals}")

    @classmethod
    def from_seq(cls, seq: Sequence[float]) -> "Rect":
        if len(seq) != 4:
            raise GeometryError(f"box needs 4 coordinates, got {len(seq)}")
        return cls(*(float(v) for v in seq))

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> Point:
        return Point((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    def within(self, bounds: "Rect") -> bool:
        return (self.x0 >= bounds.x0 and self.y0 >= bounds.y0
                and self.x1 <= bounds.x1 and self.y1 <= bounds.y1)


def area(r: Rect) -> float:
    return (r.x1 - r.x0) * (r.y1 - r.y0)


def intersection_area(a: Rect, b: Rect) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def intersect(a: Rect, b: Rect) -> Rect | None:
    """Overlap of two rects, or None when they share no positive area."""
    x0, y0 = max(a.x0, b.x0), max(a.y0, b.y0)
    x1, y1 = min(a.x1, b.x1), min(a.y1, b.y1)
    if x1 <= x0 or y1 <= y0:
        return None
    return Rect(x0, y0, x1, y1)


def iou(a: Rect, b: Rect) -> float:
    if a == b:
        return 1.0
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def clamp(r: Rect, bounds: Rect) -> Rect:
    """Clip ``r`` to ``bounds``; raises if nothing of ``r`` survives."""
    out = intersect(r, bounds)
    if out is None:
        raise GeometryError(f"{r} lies entirely outside {bounds}")
    return out


def enclosing_box(rects: Iterable[Rect], padding: float, bounds: Rect) -> Rect:
    """Smallest box around ``rects``, padded on every side, clipped to ``bounds``."""
    rects = list(rects)
    if not rects:
        raise GeometryError("enclosing_box of an empty rect list")
    if padding < 0:
        raise GeometryError(f"negative padding {padding}")
    x0 = min(r.x0 for r in rects) - padding
    y0 = min(r.y0 for r in rects) - padding
    x1 = max(r.x1 for r in rects) + padding
    y1 = max(r.y1 for r in rects) + padding
    return clamp(Rect(x0, y0, x1, y1), bounds)


def scale_about(r: Rect, cx: float, cy: float, factor: float) -> Rect:
    """Scale both side lengths of ``r`` by ``factor`` keeping (cx, cy) fixed."""
    return Rect(cx + (r.x0 - cx) * factor, cy + (r.y0 - cy) * factor,
                cx + (r.x1 - cx) * factor, cy + (r.y1 - cy) * factor)


def contains(r: Rect, p: Point) -> bool:
    return r.x0 <= p.x <= r.x1 and r.y0 <= p.y <= r.y1


def remap_point(p_local: Point, region: Rect) -> Point:
    """Region-local point -> full-image coordinates."""
    return Point(region.x0 + p_local.x, region.y0 + p_local.y)


def to_local(p: Point, region: Rect) -> Point:
    """Inverse of :func:`remap_point`."""
    return Point(p.x - region.x0, p.y - region.y0)
