"""Search-then-predict evaluation: per-sample pipeline, batch runner, reports."""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

from ..actions import ActionKind, apply_action
from ..geometry import Rect, area, contains, remap_point
from ..perceptor import DEFAULT_TEMPLATE, RelevanceProvider, member_indices, score_scene
from ..planner import SearchConfig, run_search
from ..reward import evaluate
from .grounders import Grounder
from .samples import Sample

log = logging.getLogger(__name__)

POLICIES = ("drs", "full", "forward")


@dataclass
class SampleRecord:
    sample_id: str
    group: str
    data_type: str
    policy: str
    correct: bool = False
    region: list[float] | None = None
    point: list[float] | None = None
    reward: dict | None = None
    node_count: int = 0
    area_reduction: float = 0.0
    element_reduction: float = 0.0
    chain: list[list[float]] = field(default_factory=list)
    error: str | None = None
    trace: dict | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self, with_trace: bool = False) -> dict:
        d = asdict(self)
        if not with_trace:
            d.pop("trace")
        return d


class _SerialProvider:
    """Serializes embed calls: providers need not be thread-safe."""

    def __init__(self, provider: RelevanceProvider):
        self.provider = provider
        self._lock = threading.Lock()

    def embed(self, texts):
        with self._lock:
            return self.provider.embed(texts)


def forward_focus_chain(scored, config: SearchConfig) -> list[Rect]:
    """Root focus, then repeated focus up to ``max_depth`` times while it keeps shrinking."""
    params = config.action_params
    res = apply_action(ActionKind.FOCUS, scored.bounds, scored, params)
    chain = [res.region]
    for _ in range(config.max_depth):
        nxt = apply_action(ActionKind.FOCUS, chain[-1], scored, params)
        if nxt is None or area(nxt.region) >= area(chain[-1]):
            break
        chain.append(nxt.region)
    return chain


def evaluate_sample(sample: Sample, provider: RelevanceProvider, grounder: Grounder,
                    config: SearchConfig = SearchConfig(), *, policy: str = "drs",
                    template: str = DEFAULT_TEMPLATE, keep_trace: bool = False) -> SampleRecord:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    rec = SampleRecord(sample.sample_id, sample.group, sample.data_type, policy)
    try:
        scored = score_scene(sample.scene, sample.instruction, provider, template)
        full = scored.bounds
        if policy == "full":
            region = full
            rec.reward = evaluate(full, scored, config.reward_weights).to_dict()
        elif policy == "forward":
            chain = forward_focus_chain(scored, config)
            region = chain[-1]
            rec.chain = [r.as_list() for r in chain]
            rec.node_count = len(chain)
            rec.reward = evaluate(region, scored, config.reward_weights).to_dict()
        else:
            result = run_search(scored, config)
            region = result.best_region
            rec.reward = result.best_reward.to_dict()
            rec.node_count = result.node_count
            if keep_trace:
                rec.trace = result.trace.to_dict()
        rec.region = region.as_list()
        rec.area_reduction = 1.0 - area(region) / area(full)
        n = len(scored)
        rec.element_reduction = 1.0 - member_indices(scored, region).size / n if n else 0.0
        local = grounder.predict(sample.scene.image_ref, region, sample.instruction.text)
        point = remap_point(local, region)
        rec.point = point.as_list()
        rec.correct = contains(sample.gt_box, point)
    except Exception as exc:  # noqa: BLE001 - one bad sample must not sink the batch
        log.warning("sample %s failed: %s", sample.sample_id, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.correct = False
    return rec


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


@dataclass
class EvalReport:
    label: str
    n_samples: int
    n_failed: int
    accuracy: float
    by_group: dict[str, float]
    by_data_type: dict[str, float]
    by_group_type: dict[str, dict[str, float]]
    mean_area_reduction: float
    mean_element_reduction: float
    records: list[SampleRecord] = field(repr=False, default_factory=list)

    @classmethod
    def from_records(cls, records: Sequence[SampleRecord], label: str = "") -> "EvalReport":
        def acc(rs):
            return _mean([1.0 if r.correct else 0.0 for r in rs])

        groups = sorted({r.group for r in records})
        types = sorted({r.data_type for r in records})
        ok = [r for r in records if not r.failed]
        return cls(
            label=label,
            n_samples=len(records),
            n_failed=len(records) - len(ok),
            accuracy=acc(records),
            by_group={g: acc([r for r in records if r.group == g]) for g in groups},
            by_data_type={t: acc([r for r in records if r.data_type == t]) for t in types},
            by_group_type={g: {t: acc([r for r in records if r.group == g and r.data_type == t])
                               for t in types if any(r.group == g and r.data_type == t for r in records)}
                           for g in groups},
            mean_area_reduction=_mean([r.area_reduction for r in ok]),
            mean_element_reduction=_mean([r.element_reduction for r in ok]),
            records=list(records),
        )

    def to_dict(self, with_records: bool = True) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "records"}
        if with_records:
            d["records"] = [r.to_dict() for r in self.records]
        return d

    def to_json(self, with_records: bool = True) -> str:
        return json.dumps(self.to_dict(with_records), indent=1, sort_keys=True)

    def to_text(self) -> str:
        """Accuracy table with text / icon / avg columns per group, in percent."""
        def cell(v):
            return "   -  " if v is None else f"{100 * v:6.1f}"

        head = f"{'group':<12} {'text':>6} {'icon':>6} {'avg':>6}"
        lines = [f"# {self.label}" if self.label else "# report", head, "-" * len(head)]
        for g, acc in self.by_group.items():
            row = self.by_group_type.get(g, {})
            lines.append(f"{g or '(none)':<12} {cell(row.get('text'))} {cell(row.get('icon'))} {cell(acc)}")
        lines.append(f"{'overall':<12} {cell(self.by_data_type.get('text'))} "
                     f"{cell(self.by_data_type.get('icon'))} {cell(self.accuracy)}")
        lines.append(f"samples {self.n_samples}  failed {self.n_failed}  "
                     f"area reduction {100 * self.mean_area_reduction:.1f}%  "
                     f"element reduction {100 * self.mean_element_reduction:.1f}%")
        return "\n".join(lines) + "\n"


def run_benchmark(samples: Sequence[Sample], provider: RelevanceProvider, grounder: Grounder,
                  config: SearchConfig = SearchConfig(), parallelism: int = 1, *,
                  policy: str = "drs", template: str = DEFAULT_TEMPLATE,
                  label: str = "", keep_trace: bool = False) -> EvalReport:
    if not samples:
        raise ValueError("run_benchmark needs at least one sample")
    serial = _SerialProvider(provider)

    def one(sample):
        return evaluate_sample(sample, serial, grounder, config, policy=policy,
                               template=template, keep_trace=keep_trace)

    if parallelism <= 1:
        records = [one(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(one, samples))
    return EvalReport.from_records(records, label or policy)


ACTION_ROWS = (
    ("none", None),
    ("focus", (ActionKind.FOCUS,)),
    ("focus+shift", (ActionKind.FOCUS, ActionKind.SHIFT)),
    ("focus+shift+scatter", (ActionKind.FOCUS, ActionKind.SHIFT, ActionKind.SCATTER)),
)
REWARD_ROWS = (
    ("none", None),
    ("rel", ("cov", "con")),
    ("rel+cov", ("con",)),
    ("rel+cov+con", ()),
)


def baseline_policies(sample: Sample, provider: RelevanceProvider, grounder: Grounder,
                      config: SearchConfig = SearchConfig(), *,
                      template: str = DEFAULT_TEMPLATE) -> dict[str, SampleRecord]:
    """Full-screen, forward-only focus chain, and the search under each action subset."""
    out = {
        "full": evaluate_sample(sample, provider, grounder, config, policy="full", template=template),
        "forward": evaluate_sample(sample, provider, grounder, config, policy="forward",
                                   template=template),
    }
    for label, actions in ACTION_ROWS[1:]:
        out[f"drs[{label}]"] = evaluate_sample(sample, provider, grounder,
                                               replace(config, actions=actions),
                                               policy="drs", template=template)
    return out


def ablation_lattice(kind: str, samples: Sequence[Sample], provider: RelevanceProvider,
                     grounder: Grounder, config: SearchConfig = SearchConfig(),
                     parallelism: int = 1, template: str = DEFAULT_TEMPLATE) -> list[EvalReport]:
    """Four-row action lattice (``kind="actions"``) or reward lattice (``kind="reward"``).

    The first row of either lattice is the full-screen baseline (no search).
    """
    rows = {"actions": ACTION_ROWS, "reward": REWARD_ROWS}.get(kind)
    if rows is None:
        raise ValueError(f"lattice kind must be actions or reward, got {kind!r}")
    reports = []
    for label, setting in rows:
        if setting is None:
            reports.append(run_benchmark(samples, provider, grounder, config, parallelism,
                                         policy="full", template=template, label=label))
            continue
        if kind == "actions":
            cfg = replace(config, actions=setting)
        else:
            cfg = replace(config, reward_weights=config.reward_weights.without(setting))
        reports.append(run_benchmark(samples, provider, grounder, cfg, parallelism,
                                     policy="drs", template=template, label=label))
    return reports
