"""Seeded synthetic GUI scenes with one instruction target each.

Layout is a jittered grid: every element sits inside its own grid cell, so
boxes never overlap. Descriptions are drawn from a small UI vocabulary and
the instruction is built from the target's description, which makes the
target the top-scoring element under the hashing mock provider.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

from ..geometry import Rect
from ..perceptor import (DEFAULT_TEMPLATE, Instruction, MockEmbeddingProvider,
                         Scene, UiElement, build_prefixed_text, score_scene)
from .samples import Sample, dump_samples

WORDS = (
    "account", "archive", "back", "bold", "bookmark", "brush", "calendar", "camera", "cart",
    "chart", "close", "color", "comment", "compile", "copy", "crop", "cursor", "debug", "delete",
    "download", "draft", "edit", "email", "export", "filter", "folder", "font", "forward",
    "gallery", "grid", "help", "history", "home", "import", "inbox", "layer", "layout", "link",
    "lock", "map", "menu", "merge", "music", "network", "note", "palette", "paste", "pause",
    "play", "preview", "print", "profile", "redo", "refresh", "render", "reply", "save",
    "search", "select", "send", "settings", "share", "sort", "stop", "sync", "table", "terminal",
    "timeline", "toolbar", "trash", "undo", "upload", "user", "video", "volume", "window", "zoom",
)
ICON_SUFFIX = ("icon", "button", "glyph")
GROUPS = ("mobile", "desktop", "web")
VERBS = ("click", "open", "tap", "select")


class GeneratorError(ValueError):
    """The generator parameters cannot be satisfied."""


@dataclass(frozen=True)
class GeneratorSpec:
    n_scenes: int = 50
    min_elements: int = 8
    max_elements: int = 20
    width: int = 1920
    height: int = 1080
    grid_cols: int = 8
    grid_rows: int = 6
    jitter: float = 0.5
    profile: str = "easy"
    interactive_fraction: float = 0.6
    icon_fraction: float = 0.4
    empty_icon_fraction: float = 0.05
    related_neighbors: int = 2
    margin: float = 0.1
    mock_dim: int = 256
    template: str = DEFAULT_TEMPLATE

    def validate(self) -> None:
        if self.profile not in ("easy", "hard"):
            raise GeneratorError(f"profile must be easy or hard, got {self.profile!r}")
        if self.n_scenes < 0:
            raise GeneratorError("n_scenes must be >= 0")
        if not 1 <= self.min_elements <= self.max_elements:
            raise GeneratorError(
                f"need 1 <= min_elements <= max_elements, got {self.min_elements}, {self.max_elements}")
        cells = self.grid_cols * self.grid_rows
        if self.max_elements > cells:
            raise GeneratorError(
                f"infeasible layout: max_elements={self.max_elements} exceeds "
                f"{self.grid_cols}x{self.grid_rows}={cells} grid cells")
        if self.width < 4 * self.grid_cols or self.height < 4 * self.grid_rows:
            raise GeneratorError("image too small for the requested grid")
        if not 0.0 <= self.jitter <= 1.0:
            raise GeneratorError("jitter must be in [0, 1]")
        for name in ("interactive_fraction", "icon_fraction", "empty_icon_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise GeneratorError(f"{name} must be in [0, 1]")
        if self.margin < 0:
            raise GeneratorError("margin must be >= 0")


def _box_in_cell(rng: random.Random, spec: GeneratorSpec, col: int, row: int) -> Rect:
    cw = spec.width / spec.grid_cols
    ch = spec.height / spec.grid_rows
    w = cw * rng.uniform(0.3, 0.75)
    h = ch * rng.uniform(0.2, 0.55)
    # jitter 0 centers the box in its cell; 1 lets it slide to the cell edge
    slack_x, slack_y = (cw - w) / 2.0, (ch - h) / 2.0
    x0 = col * cw + slack_x + rng.uniform(-1, 1) * slack_x * spec.jitter
    y0 = row * ch + slack_y + rng.uniform(-1, 1) * slack_y * spec.jitter
    return Rect(max(0.0, round(x0, 2)), max(0.0, round(y0, 2)),
                min(float(spec.width), round(x0 + w, 2)), min(float(spec.height), round(y0 + h, 2)))


def _phrase(rng: random.Random, banned: set[str], n: int) -> list[str]:
    pool = [w for w in WORDS if w not in banned]
    return rng.sample(pool, n)


def _neighbors(cell: tuple[int, int], free: set[tuple[int, int]]) -> list[tuple[int, int]]:
    c, r = cell
    around = [(c + dc, r + dr) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dc, dr) != (0, 0)]
    return [x for x in around if x in free]


def _make_scene(rng: random.Random, spec: GeneratorSpec, index: int, seed: int,
                mock: MockEmbeddingProvider) -> Sample:
    n = rng.randint(spec.min_elements, spec.max_elements)
    all_cells = [(c, r) for r in range(spec.grid_rows) for c in range(spec.grid_cols)]
    group = GROUPS[index % len(GROUPS)]
    domain = f"{group} application"

    target_is_icon = rng.random() < spec.icon_fraction
    target_words = _phrase(rng, set(), 1 if target_is_icon else 2)
    target_desc = " ".join(target_words + ([rng.choice(ICON_SUFFIX)] if target_is_icon else []))
    instruction = f"{rng.choice(VERBS)} {target_desc}"
    instr_words = set(instruction.split())

    target_cell = rng.choice(all_cells)
    free = set(all_cells) - {target_cell}
    cells = [target_cell]
    related = []
    if spec.profile == "easy" and n > 1:
        near = _neighbors(target_cell, free)
        related = rng.sample(near, min(spec.related_neighbors, len(near), n - 1))
        cells += related
        free -= set(related)
    cells += rng.sample(sorted(free), n - len(cells))

    descs = []
    kinds = []
    for k, cell in enumerate(cells):
        if k == 0:
            descs.append(target_desc)
            kinds.append("icon" if target_is_icon else "text")
            continue
        is_icon = rng.random() < spec.icon_fraction
        kinds.append("icon" if is_icon else "text")
        if is_icon and rng.random() < spec.empty_icon_fraction:
            descs.append("")
            continue
        words = _phrase(rng, instr_words, 1 if is_icon else rng.randint(1, 3))
        if cell in related or (spec.profile == "hard" and rng.random() < 0.6):
            # share one instruction word: semantically close distractor
            words[0] = rng.choice(target_words)
        descs.append(" ".join(words + ([rng.choice(ICON_SUFFIX)] if is_icon else [])))

    # shuffle element order so the target id is not always 0
    order = list(range(n))
    rng.shuffle(order)
    elements = []
    target_id = -1
    for new_id, k in enumerate(order):
        col, row = cells[k]
        box = _box_in_cell(rng, spec, col, row)
        interactive = True if k == 0 else rng.random() < spec.interactive_fraction
        elements.append(UiElement(new_id, box, descs[k], interactive))
        if k == 0:
            target_id = new_id
    scene = Scene(spec.width, spec.height, f"synthetic/{seed}/{index:05d}.png",
                  tuple(elements), domain)

    if spec.profile == "easy":
        scores = score_scene(scene, instruction, mock, spec.template).scores
        runner_up = max((s for i, s in enumerate(scores) if i != target_id), default=0.0)
        if scores[target_id] - runner_up < spec.margin:
            raise _Retry()
    return Sample(f"syn-{seed}-{index:05d}", scene, Instruction(instruction),
                  elements[target_id].box, kinds[0], group)


class _Retry(Exception):
    pass


def generate_synthetic(spec: GeneratorSpec, seed: int) -> list[Sample]:
    spec.validate()
    mock = MockEmbeddingProvider(spec.mock_dim)
    rng = random.Random(seed)
    samples = []
    for i in range(spec.n_scenes):
        for _ in range(100):
            try:
                samples.append(_make_scene(rng, spec, i, seed, mock))
                break
            except _Retry:
                continue
        else:
            raise GeneratorError(f"could not reach target margin {spec.margin} for scene {i}")
    return samples


def embedding_table(samples, template: str = DEFAULT_TEMPLATE, dim: int = 256) -> dict[str, list[float]]:
    """Every prefixed text the samples need, mapped to its mock vector."""
    mock = MockEmbeddingProvider(dim)
    texts = set()
    for s in samples:
        tag = s.scene.domain_tag
        texts.add(build_prefixed_text(tag, s.instruction.text, template))
        texts.update(build_prefixed_text(tag, e.description, template)
                     for e in s.scene.elements if e.description.strip())
    ordered = sorted(texts)
    return {t: v.tolist() for t, v in zip(ordered, mock.embed(ordered))}


def write_corpus(samples, out_dir: str | Path, spec: GeneratorSpec, seed: int) -> dict[str, Path]:
    """Write samples.json, embeddings.json and generator.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"samples": out / "samples.json", "embeddings": out / "embeddings.json",
             "generator": out / "generator.json"}
    dump_samples(samples, paths["samples"])
    table = embedding_table(samples, spec.template, spec.mock_dim)
    paths["embeddings"].write_text(json.dumps(table, sort_keys=True) + "\n", encoding="utf-8")
    paths["generator"].write_text(json.dumps({"seed": seed, **asdict(spec)}, indent=1,
                                             sort_keys=True) + "\n", encoding="utf-8")
    return paths

