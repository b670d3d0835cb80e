"""Sample files: one JSON array of scene+instruction+ground-truth records."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from ..geometry import GeometryError, Rect
from ..perceptor import Instruction, Scene, UiElement

DATA_TYPES = ("text", "icon")


class SampleError(ValueError):
    """A sample file could not be parsed or a record broke an invariant."""


@dataclass(frozen=True)
class Sample:
    sample_id: str
    scene: Scene
    instruction: Instruction
    gt_box: Rect
    data_type: str = "text"
    group: str = ""

    def __post_init__(self):
        if self.data_type not in DATA_TYPES:
            raise SampleError(f"sample {self.sample_id}: data_type must be text or icon, "
                              f"got {self.data_type!r}")
        if not self.gt_box.within(self.scene.bounds):
            raise SampleError(f"sample {self.sample_id}: gt_box {self.gt_box.as_list()} "
                              f"exceeds image bounds")


def _require(rec: dict, key: str, sid: str):
    if key not in rec:
        raise SampleError(f"sample {sid}: missing field {key!r}")
    return rec[key]


def scene_from_dict(rec: dict, sid: str = "scene") -> Scene:
    """The scene part of a record; instruction and ground truth are ignored."""
    elements = []
    for k, el in enumerate(_require(rec, "elements", sid)):
        elements.append(UiElement(
            id=int(el.get("id", k)),
            box=Rect.from_seq(_require(el, "box", sid)),
            description=str(el.get("description", "")),
            interactive=bool(el.get("interactive", False)),
        ))
    return Scene(
        image_width=float(_require(rec, "width", sid)),
        image_height=float(_require(rec, "height", sid)),
        image_ref=str(rec.get("image", "")),
        elements=tuple(elements),
        domain_tag=str(rec.get("domain_tag", "")),
    )


def sample_from_dict(rec: Any, index: int) -> Sample:
    if not isinstance(rec, dict):
        raise SampleError(f"record {index}: expected an object, got {type(rec).__name__}")
    sid = str(rec.get("id", f"sample-{index:04d}"))
    try:
        scene = scene_from_dict(rec, sid)
        return Sample(
            sample_id=sid,
            scene=scene,
            instruction=Instruction(str(_require(rec, "instruction", sid))),
            gt_box=Rect.from_seq(_require(rec, "gt_box", sid)),
            data_type=str(rec.get("data_type", "text")),
            group=str(rec.get("group", "")),
        )
    except SampleError:
        raise
    except (GeometryError, ValueError, TypeError, AttributeError) as exc:
        raise SampleError(f"sample {sid} (record {index}): {exc}") from None


def sample_to_dict(sample: Sample) -> dict:
    scene = sample.scene
    return {
        "id": sample.sample_id,
        "image": scene.image_ref,
        "width": scene.image_width,
        "height": scene.image_height,
        "domain_tag": scene.domain_tag,
        "instruction": sample.instruction.text,
        "gt_box": sample.gt_box.as_list(),
        "data_type": sample.data_type,
        "group": sample.group,
        "elements": [
            {"id": e.id, "box": e.box.as_list(), "description": e.description,
             "interactive": e.interactive}
            for e in scene.elements
        ],
    }


def parse_samples(data: Any) -> list[Sample]:
    if isinstance(data, dict):
        data = [data]  # a lone scene object counts as a one-sample file
    if not isinstance(data, list):
        raise SampleError("sample file must hold a JSON array of sample objects")
    return [sample_from_dict(rec, i) for i, rec in enumerate(data)]


def load_samples(path: str | Path) -> list[Sample]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SampleError(f"{path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SampleError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from None
    try:
        return parse_samples(data)
    except SampleError as exc:
        raise SampleError(f"{path}: {exc}") from None


def dump_samples(samples: Sequence[Sample], path: str | Path) -> None:
    payload = json.dumps([sample_to_dict(s) for s in samples], indent=1, sort_keys=True)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def from_screenspot(record: dict, elements: Sequence[dict], domain_tag: str | None = None,
                    index: int = 0) -> Sample:
    """Convert a ScreenSpot-Pro style annotation plus a parser's element list.

    Expects ``img_filename``, ``img_size`` [w, h], ``bbox`` [x0, y0, x1, y1],
    ``instruction`` and optionally ``ui_type``, ``group``, ``application``,
    ``platform``, ``id``. Raw benchmarks carry no element lists, so
    ``elements`` must come from an external UI parser.
    """
    w, h = record["img_size"]
    tag = domain_tag if domain_tag is not None else " ".join(
        str(record[k]) for k in ("application", "platform") if record.get(k))
    return sample_from_dict({
        "id": record.get("id", f"screenspot-{index:04d}"),
        "image": record["img_filename"],
        "width": w,
        "height": h,
        "domain_tag": tag,
        "instruction": record["instruction"],
        "gt_box": record["bbox"],
        "data_type": record.get("ui_type", "text"),
        "group": record.get("group", ""),
        "elements": [dict(el, id=k) for k, el in enumerate(elements)],
    }, index)
