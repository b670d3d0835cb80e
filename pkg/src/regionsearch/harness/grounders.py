"""Grounders: predict a region-local click point for an instruction."""
from __future__ import annotations

import json
import random
import time
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass
from typing import Protocol, Sequence

from ..geometry import Point, Rect, contains, to_local
from .samples import Sample


class GrounderError(RuntimeError):
    pass


class Grounder(Protocol):
    def predict(self, image_ref: str, region: Rect, instruction: str) -> Point: ...


@dataclass(frozen=True)
class ClutterModel:
    """Success probability = clamp(base - clutter * elements - resolution * megapixels, 0, 1)."""
    base_success: float = 0.95
    clutter_penalty: float = 0.01
    resolution_penalty: float = 0.05
    seed: int = 0

    def success_probability(self, element_count: int, region: Rect) -> float:
        mp = region.width * region.height / 1e6
        p = self.base_success - self.clutter_penalty * element_count - self.resolution_penalty * mp
        return min(1.0, max(0.0, p))

    def to_dict(self) -> dict:
        return asdict(self)


class ScriptedGrounder:
    """Deterministic stand-in for a grounding model.

    Knows the ground truth of every registered sample. One uniform draw per
    sample (keyed by seed and sample id) decides success, so different
    regions for the same sample face the same draw. On success it clicks the
    target center when that center is inside the region; otherwise, or on
    failure, it clicks a distractor.
    """

    def __init__(self, samples: Sequence[Sample], model: ClutterModel = ClutterModel()):
        self.model = model
        self._index = {(s.scene.image_ref, s.instruction.text): s for s in samples}

    def register(self, sample: Sample) -> None:
        self._index[(sample.scene.image_ref, sample.instruction.text)] = sample

    def _draw(self, sample: Sample) -> random.Random:
        return random.Random(f"{self.model.seed}|{sample.sample_id}")

    def predict(self, image_ref: str, region: Rect, instruction: str) -> Point:
        try:
            sample = self._index[(image_ref, instruction)]
        except KeyError:
            raise GrounderError(f"scripted grounder has no sample for {image_ref!r} / "
                                f"{instruction!r}") from None
        inside = [e for e in sample.scene.elements if contains(region, e.box.center)]
        rng = self._draw(sample)
        u = rng.random()
        gt_center = sample.gt_box.center
        if u < self.model.success_probability(len(inside), region) and contains(region, gt_center):
            return to_local(gt_center, region)
        return to_local(self._distractor(sample, region, inside, rng), region)

    @staticmethod
    def _distractor(sample: Sample, region: Rect, inside, rng: random.Random) -> Point:
        wrong = [e.box.center for e in inside if not contains(sample.gt_box, e.box.center)]
        if wrong:
            return wrong[rng.randrange(len(wrong))]
        # no distractor element: the region corner farthest from the target
        corners = [Point(region.x0, region.y0), Point(region.x1, region.y0),
                   Point(region.x0, region.y1), Point(region.x1, region.y1)]
        g = sample.gt_box.center
        return max(corners, key=lambda c: ((c.x - g.x) ** 2 + (c.y - g.y) ** 2))


class RemoteGrounder:
    """HTTP client: POST {"image", "region", "instruction"} -> {"point": [x, y]} (region-local)."""

    def __init__(self, url: str, timeout: float = 60.0, retries: int = 2, backoff: float = 0.5):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def predict(self, image_ref: str, region: Rect, instruction: str) -> Point:
        body = json.dumps({"image": image_ref, "region": region.as_list(),
                           "instruction": instruction}).encode()
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * attempt)
            req = urllib.request.Request(self.url, data=body,
                                         headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode())
            except (urllib.error.URLError, OSError, ValueError) as exc:
                last = exc
                continue
            try:
                x, y = payload["point"]
                return Point(float(x), float(y))
            except (KeyError, TypeError, ValueError) as exc:
                raise GrounderError(f"grounder {self.url} returned a malformed point: {payload!r}") from exc
        raise GrounderError(f"grounder {self.url} failed after {self.retries + 1} attempts: {last}")
