"""Search trace events plus JSON and Graphviz DOT export."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class SearchTrace:
    """Ordered event log of one search. ``events`` holds plain dicts so the
    trace round-trips through JSON unchanged."""
    config: dict = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)

    def node_created(self, node_id: int, parent_id: int | None, action: str, depth: int,
                     region: list[float], reward: dict) -> None:
        self.events.append({"event": "node_created", "node_id": node_id, "parent_id": parent_id,
                            "action": action, "depth": depth, "region": region, "reward": reward})

    def selected(self, path: list[int]) -> None:
        self.events.append({"event": "selected", "path": list(path)})

    def backpropagated(self, path: list[int], value: float) -> None:
        self.events.append({"event": "backpropagated", "path": list(path), "value": value})

    def constraint_flag(self, node_id: int, kind: str) -> None:
        self.events.append({"event": "constraint_flag", "node_id": node_id, "kind": kind})

    def action_pruned(self, node_id: int, action: str, reason: str) -> None:
        self.events.append({"event": "action_pruned", "node_id": node_id,
                            "action": action, "reason": reason})

    def of_kind(self, kind: str) -> list[dict]:
        return [e for e in self.events if e["event"] == kind]

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config, "events": self.events}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchTrace":
        if not isinstance(data, dict) or not isinstance(data.get("events"), list):
            raise ValueError("trace JSON must be an object with an 'events' list")
        return cls(config=dict(data.get("config", {})), events=list(data["events"]))

    @classmethod
    def from_json(cls, text: str) -> "SearchTrace":
        return cls.from_dict(json.loads(text))


def replay_stats(trace: SearchTrace) -> tuple[dict[int, int], dict[tuple[int, int], list[float]]]:
    """Rebuild node visit counts and per-edge backed-up values from the event log.

    Edges are keyed (parent_id, child_id). Root starts at one visit, every
    other node at zero, mirroring the planner.
    """
    visits: dict[int, int] = {}
    edges: dict[tuple[int, int], list[float]] = {}
    for ev in trace.events:
        if ev["event"] == "node_created":
            visits[ev["node_id"]] = 1 if ev["parent_id"] is None else 0
        elif ev["event"] == "backpropagated":
            path = ev["path"]
            for node_id in path:
                visits[node_id] += 1
            for parent, child in zip(path, path[1:]):
                edges.setdefault((parent, child), []).append(ev["value"])
    return visits, edges


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def to_dot(trace: SearchTrace, best_node_id: int | None = None) -> str:
    """One graph node per search node: action, depth, reward total, visit count."""
    visits, _ = replay_stats(trace)
    created = trace.of_kind("node_created")
    if best_node_id is None and created:
        best = max(created, key=lambda e: (e["reward"]["total"], -e["node_id"]))
        best_node_id = best["node_id"]
    flagged = {e["node_id"] for e in trace.of_kind("constraint_flag")}
    lines = ["digraph search {", '  node [shape=box, fontname="Helvetica"];']
    for ev in created:
        nid = ev["node_id"]
        label = (f"#{nid} {ev['action']}\\ndepth {ev['depth']}  "
                 f"r={_fmt(ev['reward']['total'])}\\nvisits {visits.get(nid, 0)}")
        attrs = [f'label="{label}"']
        if nid == best_node_id:
            attrs.append('style=filled, fillcolor="#cde8c4"')
        if nid in flagged:
            attrs.append("color=red")
        lines.append(f"  n{nid} [{', '.join(attrs)}];")
    for ev in created:
        if ev["parent_id"] is not None:
            lines.append(f'  n{ev["parent_id"]} -> n{ev["node_id"]} [label="{ev["action"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
