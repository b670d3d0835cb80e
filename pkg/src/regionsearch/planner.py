"""MCTS over regions: UCT selection, one-action expansion, direct reward
evaluation and running-mean backpropagation.

The planner is deterministic: ties break by action order
(focus < shift < scatter) and node creation order, unless a
``seeded_tiebreak`` seed is configured.
"""
from __future__ import annotations

import enum
import math
import random
from collections import deque
from dataclasses import dataclass, field

from .actions import ActionKind, ActionParams, apply_action
from .geometry import Rect, iou
from .perceptor import ConfigError, ScoredScene, rescored
from .reward import RewardBreakdown, RewardWeights, evaluate
from .trace import SearchTrace

ALL_ACTIONS = (ActionKind.FOCUS, ActionKind.SHIFT, ActionKind.SCATTER)
NOOP_TOL = 1e-9


class SearchError(RuntimeError):
    pass


class EmptyScene(SearchError):
    pass


class SlotStatus(enum.Enum):
    UNEXPANDED = "unexpanded"
    UNAVAILABLE = "unavailable"
    EXPANDED = "expanded"


@dataclass
class ActionSlot:
    status: SlotStatus = SlotStatus.UNEXPANDED
    child_id: int | None = None
    visits: int = 0
    value: float = 0.0


@dataclass
class SearchNode:
    node_id: int
    region: Rect
    depth: int
    incoming_action: ActionKind | None
    parent_id: int | None
    reward: RewardBreakdown
    visit_count: int = 0
    # re-visits of a leaf that could not expand; kept so
    # visit_count == 1 + sum(action visits) + dead_end_visits
    dead_end_visits: int = 0
    slots: dict[ActionKind, ActionSlot] = field(default_factory=dict)


@dataclass(frozen=True)
class SearchConfig:
    rollout_budget: int = 8
    max_depth: int = 3
    uct_c: float = 1.0
    action_params: ActionParams = field(default_factory=ActionParams)
    reward_weights: RewardWeights = field(default_factory=RewardWeights)
    exhaustive: bool = False
    actions: tuple[ActionKind, ...] = ALL_ACTIONS
    seeded_tiebreak: int | None = None
    rescore_per_region: bool = False

    def __post_init__(self):
        if self.rollout_budget < 0:
            raise ConfigError(f"rollout_budget must be >= 0, got {self.rollout_budget}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.uct_c < 0:
            raise ConfigError(f"uct_c must be >= 0, got {self.uct_c}")
        acts = tuple(sorted(set(ActionKind(a) for a in self.actions)))
        if not acts:
            raise ConfigError("at least one action must be enabled")
        object.__setattr__(self, "actions", acts)

    def to_dict(self) -> dict:
        return {
            "rollout_budget": self.rollout_budget,
            "max_depth": self.max_depth,
            "uct_c": self.uct_c,
            "exhaustive": self.exhaustive,
            "actions": [a.label for a in self.actions],
            "seeded_tiebreak": self.seeded_tiebreak,
            "rescore_per_region": self.rescore_per_region,
            "action_params": self.action_params.to_dict(),
            "reward_weights": self.reward_weights.to_dict(),
        }


@dataclass
class SearchResult:
    best_region: Rect
    best_node_id: int
    best_reward: RewardBreakdown
    trace: SearchTrace
    nodes: list[SearchNode]

    @property
    def node_count(self) -> int:
        return len(self.nodes)


class SearchTree:
    """Node store for one search. Not shared between searches."""

    def __init__(self, scored: ScoredScene, config: SearchConfig):
        self.scored = scored
        self.config = config
        self.nodes: list[SearchNode] = []
        self.trace = SearchTrace(config=config.to_dict())
        self.rng = random.Random(config.seeded_tiebreak) if config.seeded_tiebreak is not None else None

    @property
    def root(self) -> SearchNode:
        return self.nodes[0]

    def evaluate(self, region: Rect) -> RewardBreakdown:
        scored = rescored(self.scored) if self.config.rescore_per_region else self.scored
        return evaluate(region, scored, self.config.reward_weights)

    def add_node(self, region: Rect, parent: SearchNode | None, action: ActionKind | None,
                 visit_count: int) -> SearchNode:
        node = SearchNode(
            node_id=len(self.nodes), region=region,
            depth=0 if parent is None else parent.depth + 1,
            incoming_action=action, parent_id=None if parent is None else parent.node_id,
            reward=self.evaluate(region), visit_count=visit_count,
            slots={a: ActionSlot() for a in self.config.actions},
        )
        self.nodes.append(node)
        self.trace.node_created(node.node_id, node.parent_id,
                                "root" if action is None else action.label, node.depth,
                                region.as_list(), node.reward.to_dict())
        return node


def init_root(scored: ScoredScene, config: SearchConfig) -> SearchTree:
    """Tree whose root is one Focus step from the full image, already evaluated."""
    if len(scored) == 0:
        raise EmptyScene("scene has no elements")
    tree = SearchTree(scored, config)
    res = apply_action(ActionKind.FOCUS, scored.bounds, scored, config.action_params)
    if res is None:  # cannot happen for a nonempty scene
        raise SearchError("focus on the full image was unavailable")
    tree.add_node(res.region, None, None, visit_count=1)
    return tree


def uct_score(node: SearchNode, action: ActionKind, c: float) -> float:
    slot = node.slots[action]
    if slot.status is SlotStatus.UNAVAILABLE:
        raise ValueError(f"action {action.label} is unavailable at node {node.node_id}")
    if slot.status is SlotStatus.UNEXPANDED or slot.visits == 0:
        return math.inf
    return slot.value + c * math.sqrt(math.log(node.visit_count) / slot.visits)


def select_path(tree: SearchTree) -> list[int]:
    config = tree.config
    node = tree.root
    path = [node.node_id]
    while node.depth < config.max_depth:
        live = [a for a in config.actions if node.slots[a].status is not SlotStatus.UNAVAILABLE]
        if not live or any(node.slots[a].status is SlotStatus.UNEXPANDED for a in live):
            break
        scores = [uct_score(node, a, config.uct_c) for a in live]
        top = max(scores)
        tied = [a for a, s in zip(live, scores) if s == top]
        choice = tied[0] if tree.rng is None or len(tied) == 1 else tree.rng.choice(tied)
        node = tree.nodes[node.slots[choice].child_id]
        path.append(node.node_id)
    return path


def expand(tree: SearchTree, node: SearchNode) -> SearchNode | None:
    """Apply the first untried action that yields a new region; ``None`` if none does."""
    if node.depth >= tree.config.max_depth:
        return None
    params = tree.config.action_params
    for action in tree.config.actions:
        slot = node.slots[action]
        if slot.status is not SlotStatus.UNEXPANDED:
            continue
        res = apply_action(action, node.region, tree.scored, params)
        if res is None:
            slot.status = SlotStatus.UNAVAILABLE
            tree.trace.action_pruned(node.node_id, action.label, "unavailable")
            continue
        if iou(res.region, node.region) >= 1.0 - NOOP_TOL:
            slot.status = SlotStatus.UNAVAILABLE
            tree.trace.action_pruned(node.node_id, action.label, "no-op")
            continue
        child = tree.add_node(res.region, node, action, visit_count=0)
        if res.constraint_violated:
            tree.trace.constraint_flag(child.node_id, "shift_iou")
        slot.status = SlotStatus.EXPANDED
        slot.child_id = child.node_id
        return child
    return None


def backpropagate(tree: SearchTree, path: list[int], value: float) -> None:
    for parent_id, child_id in zip(path, path[1:]):
        parent = tree.nodes[parent_id]
        child = tree.nodes[child_id]
        slot = parent.slots[child.incoming_action]
        slot.visits += 1
        slot.value += (value - slot.value) / slot.visits
    last = tree.nodes[path[-1]]
    if last.visit_count > 0:
        last.dead_end_visits += 1
    for node_id in path:
        tree.nodes[node_id].visit_count += 1
    tree.trace.backpropagated(path, value)


def _exhaust(tree: SearchTree) -> None:
    queue = deque([tree.root])
    while queue:
        node = queue.popleft()
        path = _path_to(tree, node)
        while (child := expand(tree, node)) is not None:
            backpropagate(tree, path + [child.node_id], child.reward.total)
            queue.append(child)


def _path_to(tree: SearchTree, node: SearchNode) -> list[int]:
    path = [node.node_id]
    while node.parent_id is not None:
        node = tree.nodes[node.parent_id]
        path.append(node.node_id)
    return path[::-1]


def best_node(nodes: list[SearchNode]) -> SearchNode:
    return max(nodes, key=lambda n: (n.reward.total, -n.node_id))


def run_search(scored: ScoredScene, config: SearchConfig = SearchConfig()) -> SearchResult:
    tree = init_root(scored, config)
    if config.exhaustive:
        _exhaust(tree)
    else:
        for _ in range(config.rollout_budget):
            path = select_path(tree)
            tree.trace.selected(path)
            leaf = tree.nodes[path[-1]]
            child = expand(tree, leaf)
            if child is not None:
                backpropagate(tree, path + [child.node_id], child.reward.total)
            else:
                backpropagate(tree, path, leaf.reward.total)
    best = best_node(tree.nodes)
    return SearchResult(best.region, best.node_id, best.reward, tree.trace, tree.nodes)
