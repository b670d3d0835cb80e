"""Training-free region search for GUI grounding.

A scene's elements are scored against an instruction, an MCTS planner
schedules Focus / Shift / Scatter region transforms under a composite region
reward, and the best region is handed to a grounder for the final click.
"""
from ._kernels import BACKEND
from .actions import ActionKind, ActionParams, ActionUnavailable, apply_action, focus, scatter, shift
from .geometry import Point, Rect, area, contains, enclosing_box, iou, remap_point
from .perceptor import (FileEmbeddingProvider, Instruction, MockEmbeddingProvider,
                        RemoteEmbeddingProvider, Scene, ScoredScene, UiElement,
                        build_prefixed_text, cosine, elements_in_region, score_scene)
from .planner import SearchConfig, SearchResult, run_search
from .reward import RewardBreakdown, RewardWeights, evaluate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ActionKind", "ActionParams", "ActionUnavailable", "apply_action", "focus",
    "scatter", "shift", "Point", "Rect", "area", "contains", "enclosing_box", "iou",
    "remap_point", "FileEmbeddingProvider", "Instruction", "MockEmbeddingProvider",
    "RemoteEmbeddingProvider", "Scene", "ScoredScene", "UiElement", "build_prefixed_text",
    "cosine", "elements_in_region", "score_scene", "SearchConfig", "SearchResult", "run_search",
    "RewardBreakdown", "RewardWeights", "evaluate",
]
