"""Region quality reward: interaction-weighted relevance, coverage, concentration."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .geometry import Rect, area
from .perceptor import ConfigError, ScoredScene, UiElement, member_indices

TERMS = ("rel", "cov", "con")


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 0.4
    beta: float = 0.4
    gamma: float = 0.2
    lambda_noninteractive: float = 0.5
    tau: float = 0.1
    epsilon: float = 1e-8

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"alpha + beta + gamma must equal 1, got {total}")
        if not 0.0 < self.lambda_noninteractive < 1.0:
            raise ConfigError(f"lambda_noninteractive must be in (0, 1), got {self.lambda_noninteractive}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")

    def without(self, disabled: Iterable[str]) -> "RewardWeights":
        """Zero the disabled terms and rescale the rest to sum to 1."""
        disabled = set(disabled)
        unknown = disabled - set(TERMS)
        if unknown:
            raise ConfigError(f"unknown reward term(s) {sorted(unknown)}")
        w = {"rel": self.alpha, "cov": self.beta, "con": self.gamma}
        for t in disabled:
            w[t] = 0.0
        total = sum(w.values())
        if total <= 0:
            raise ConfigError("at least one reward term with positive weight must stay enabled")
        return replace(self, alpha=w["rel"] / total, beta=w["cov"] / total, gamma=w["con"] / total)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RewardBreakdown:
    r_rel: float
    r_cov: float
    r_con: float
    total: float
    element_count: int

    def to_dict(self) -> dict:
        return asdict(self)


EMPTY_BREAKDOWN = RewardBreakdown(0.0, 0.0, 0.0, 0.0, 0)


def relevance_reward(elements: Sequence[tuple[UiElement, float]], weights: RewardWeights) -> float:
    if not elements:
        return 0.0
    scores = np.array([s for _, s in elements], dtype=np.float64)
    inter = np.array([e.interactive for e, _ in elements], dtype=np.bool_)
    return _kernels.weighted_relevance(scores, inter, weights.lambda_noninteractive, weights.epsilon)


def coverage_reward(elements: Sequence[UiElement], region: Rect) -> float:
    """Visible element area over region area. Overlaps are double-counted, so this can exceed 1."""
    if not elements:
        return 0.0
    boxes = np.array([e.box.as_list() for e in elements], dtype=np.float64)
    return _kernels.clipped_area_sum(boxes, region.x0, region.y0, region.x1, region.y1) / area(region)


def raw_coverage(elements: Sequence[UiElement], region: Rect) -> float:
    """Unclipped variant: full element areas over region area."""
    return sum(area(e.box) for e in elements) / area(region)


def concentration_reward(scores: Sequence[float], weights: RewardWeights) -> float:
    n = len(scores)
    if n == 0:
        return 0.0
    if n == 1:
        return 1.0
    h = _kernels.softmax_entropy(np.asarray(scores, dtype=np.float64), weights.tau)
    return min(1.0, max(0.0, 1.0 - h / math.log(n + weights.epsilon)))


def combine(r_rel: float, r_cov: float, r_con: float, weights: RewardWeights) -> float:
    return weights.alpha * r_rel + weights.beta * min(r_cov, 1.0) + weights.gamma * r_con


def evaluate(region: Rect, scored: ScoredScene, weights: RewardWeights) -> RewardBreakdown:
    idx = member_indices(scored, region)
    if idx.size == 0:
        return EMPTY_BREAKDOWN
    scores = scored.score_array[idx]
    r_rel = _kernels.weighted_relevance(scores, scored.interactive[idx],
                                        weights.lambda_noninteractive, weights.epsilon)
    r_cov = _kernels.clipped_area_sum(scored.boxes[idx], region.x0, region.y0,
                                      region.x1, region.y1) / area(region)
    r_con = concentration_reward(scores, weights)
    return RewardBreakdown(r_rel, r_cov, r_con, combine(r_rel, r_cov, r_con, weights), int(idx.size))
