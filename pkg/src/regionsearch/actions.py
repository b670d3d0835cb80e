"""Focus, Shift and Scatter: region -> region transforms driven by relevance scores."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import Rect, area, enclosing_box, iou, scale_about
from .perceptor import ConfigError, ScoredScene, member_indices, outside_indices


class ActionKind(enum.IntEnum):
    # order doubles as the tie-break order everywhere
    FOCUS = 0
    SHIFT = 1
    SCATTER = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: str) -> "ActionKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown action {name!r}; expected focus, shift or scatter") from None


class ActionUnavailable(Exception):
    """The action has nothing to act on in this region. Not an error: the planner prunes it."""


@dataclass(frozen=True)
class ActionParams:
    focus_top_fraction: float = 0.15
    focus_shrink_ratio: float = 0.7
    focus_outlier_k: float = 2.0
    scatter_top_fraction: float = 0.10
    scatter_max_expand: float = 1.5
    shift_top_fraction: float = 0.15
    shift_max_iou: float = 0.3
    padding_px: float = 8.0
    shift_shrink_factor: float = 0.9
    shift_shrink_steps: int = 10

    def __post_init__(self):
        for name in ("focus_top_fraction", "scatter_top_fraction", "shift_top_fraction"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {v}")
        if not 0.0 < self.focus_shrink_ratio < 1.0:
            raise ConfigError(f"focus_shrink_ratio must be in (0, 1), got {self.focus_shrink_ratio}")
        if not self.focus_outlier_k > 0.0:
            raise ConfigError(f"focus_outlier_k must be > 0, got {self.focus_outlier_k}")
        if not self.scatter_max_expand > 1.0:
            raise ConfigError(f"scatter_max_expand must be > 1, got {self.scatter_max_expand}")
        if not 0.0 <= self.shift_max_iou < 1.0:
            raise ConfigError(f"shift_max_iou must be in [0, 1), got {self.shift_max_iou}")
        if self.padding_px < 0:
            raise ConfigError(f"padding_px must be >= 0, got {self.padding_px}")
        if not 0.0 < self.shift_shrink_factor < 1.0:
            raise ConfigError(f"shift_shrink_factor must be in (0, 1), got {self.shift_shrink_factor}")
        if self.shift_shrink_steps < 0:
            raise ConfigError("shift_shrink_steps must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ActionResult:
    """Region produced by an action plus bookkeeping for the trace."""
    kind: ActionKind
    region: Rect
    prune_steps: int = 0
    shrink_steps: int = 0
    constraint_violated: bool = False
    kept_ids: tuple[int, ...] = ()


def top_count(fraction: float, n: int) -> int:
    """ceil(fraction * n), at least 1 (guarding 0.15 * 20 style float noise)."""
    return max(1, math.ceil(fraction * n - 1e-9))


def _enclose(scored: ScoredScene, idx, padding: float, extra: Rect | None = None) -> Rect:
    boxes = scored.boxes[np.asarray(idx, dtype=np.intp)]
    x0, y0 = boxes[:, 0].min(), boxes[:, 1].min()
    x1, y1 = boxes[:, 2].max(), boxes[:, 3].max()
    if extra is not None:
        x0, y0 = min(x0, extra.x0), min(y0, extra.y0)
        x1, y1 = max(x1, extra.x1), max(y1, extra.y1)
    return enclosing_box([Rect(float(x0), float(y0), float(x1), float(y1))], padding, scored.bounds)


def focus_detailed(region: Rect, scored: ScoredScene, params: ActionParams) -> ActionResult:
    members = member_indices(scored, region)
    if members.size == 0:
        raise ActionUnavailable("focus: no elements in region")
    kept = list(members[:top_count(params.focus_top_fraction, members.size)])

    # outlier removal: distance to centroid beyond k * median distance
    if len(kept) > 1:
        c = scored.centers[kept]
        d = np.hypot(*(c - c.mean(axis=0)).T)
        limit = params.focus_outlier_k * float(np.median(d))
        inliers = [k for k, dist in zip(kept, d) if dist <= limit]
        kept = inliers if inliers else [kept[int(np.argmin(d))]]

    out = _enclose(scored, kept, params.padding_px)
    target = params.focus_shrink_ratio * area(region)
    steps = 0
    while area(out) > target and len(kept) > 1:
        c = scored.centers[kept]
        d = np.hypot(*(c - c.mean(axis=0)).T)
        # farthest goes first; among equals drop the lowest-ranked (last in score order)
        far = max(range(len(kept)), key=lambda j: (d[j], j))
        del kept[far]
        out = _enclose(scored, kept, params.padding_px)
        steps += 1
    return ActionResult(ActionKind.FOCUS, out, prune_steps=steps, kept_ids=tuple(int(k) for k in kept))


_DIRECTIONS = ("left", "right", "up", "down")


def _direction(dx: float, dy: float) -> int:
    if abs(dx) > abs(dy):
        return 0 if dx < 0 else 1
    return 2 if dy < 0 else 3


def shift_detailed(region: Rect, scored: ScoredScene, params: ActionParams) -> ActionResult:
    outside = outside_indices(scored, region)
    if outside.size == 0:
        raise ActionUnavailable("shift: no elements outside region")
    anchors = outside[:top_count(params.shift_top_fraction, outside.size)]

    rc = region.center
    groups: list[list[int]] = [[], [], [], []]
    sums = [0.0, 0.0, 0.0, 0.0]
    for i in anchors:
        cx, cy = scored.centers[i]
        g = _direction(float(cx) - rc.x, float(cy) - rc.y)
        groups[g].append(int(i))
        sums[g] += scored.scores[i]
    best = max(range(4), key=lambda g: (len(groups[g]) > 0, sums[g], -g))
    group = groups[best]

    out = _enclose(scored, group, params.padding_px)
    gx, gy = (float(v) for v in scored.centers[group].mean(axis=0))
    steps = 0
    while iou(out, region) > params.shift_max_iou and steps < params.shift_shrink_steps:
        out = scale_about(out, gx, gy, params.shift_shrink_factor)
        steps += 1
    violated = iou(out, region) > params.shift_max_iou
    return ActionResult(ActionKind.SHIFT, out, shrink_steps=steps,
                        constraint_violated=violated, kept_ids=tuple(group))


def scatter_detailed(region: Rect, scored: ScoredScene, params: ActionParams) -> ActionResult:
    outside = outside_indices(scored, region)
    if outside.size == 0:
        raise ActionUnavailable("scatter: no elements outside region")
    kept = outside[:top_count(params.scatter_top_fraction, outside.size)]
    cand = _enclose(scored, kept, params.padding_px, extra=region)

    cap = params.scatter_max_expand * area(region)
    if area(cand) > cap:
        rc = region.center
        cand = scale_about(cand, rc.x, rc.y, math.sqrt(cap / area(cand)))
        cand = enclosing_box([cand], 0.0, scored.bounds)
    return ActionResult(ActionKind.SCATTER, cand, kept_ids=tuple(int(k) for k in kept))


_DISPATCH = {
    ActionKind.FOCUS: focus_detailed,
    ActionKind.SHIFT: shift_detailed,
    ActionKind.SCATTER: scatter_detailed,
}


def apply_action(kind: ActionKind, region: Rect, scored: ScoredScene,
                 params: ActionParams) -> ActionResult | None:
    """Run one action; ``None`` when it is unavailable from ``region``."""
    try:
        return _DISPATCH[kind](region, scored, params)
    except ActionUnavailable:
        return None


def focus(region: Rect, scored: ScoredScene, params: ActionParams = ActionParams()) -> Rect:
    return focus_detailed(region, scored, params).region


def shift(region: Rect, scored: ScoredScene, params: ActionParams = ActionParams()) -> Rect:
    return shift_detailed(region, scored, params).region


def scatter(region: Rect, scored: ScoredScene, params: ActionParams = ActionParams()) -> Rect:
    return scatter_detailed(region, scored, params).region
