"""UI elements, scenes and instruction-conditioned relevance scoring."""
from __future__ import annotations

import hashlib
import json
import math
import re
import string
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import _kernels
from .geometry import GeometryError, Rect

DEFAULT_TEMPLATE = "Represent the {domain} UI element: {text}"


class ConfigError(ValueError):
    """Invalid configuration value (templates, weights, parameter ranges)."""


class ProviderError(RuntimeError):
    """An embedding provider could not produce a vector.

    ``index`` is the position of the offending text in the request batch,
    when known.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ScoringError(RuntimeError):
    def __init__(self, message: str, element_id: int | None = None):
        super().__init__(message)
        self.element_id = element_id


@dataclass(frozen=True)
class UiElement:
    id: int
    box: Rect
    description: str
    interactive: bool


@dataclass(frozen=True)
class Scene:
    image_width: float
    image_height: float
    image_ref: str
    elements: tuple[UiElement, ...]
    domain_tag: str = ""

    def __post_init__(self):
        if not (self.image_width > 0 and self.image_height > 0):
            raise GeometryError(
                f"image size must be positive, got {self.image_width}x{self.image_height}")
        object.__setattr__(self, "elements", tuple(self.elements))
        bounds = self.bounds
        for i, el in enumerate(self.elements):
            if el.id != i:
                raise GeometryError(f"element ids must be dense 0..n-1; position {i} has id {el.id}")
            if not el.box.within(bounds):
                raise GeometryError(f"element {el.id} box {el.box.as_list()} exceeds image bounds")

    @property
    def bounds(self) -> Rect:
        return Rect(0.0, 0.0, float(self.image_width), float(self.image_height))


@dataclass(frozen=True)
class Instruction:
    text: str
    prefixed_text: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("instruction text must be nonempty")


def build_prefixed_text(domain_tag: str, raw: str, template: str = DEFAULT_TEMPLATE) -> str:
    """Fill ``template``'s ``{domain}`` and ``{text}`` placeholders.

    Any other placeholder (or a malformed brace) is a :class:`ConfigError`.
    """
    try:
        fields = [f for _, f, _, _ in string.Formatter().parse(template) if f is not None]
    except ValueError as exc:
        raise ConfigError(f"malformed template {template!r}: {exc}") from None
    unknown = sorted(set(fields) - {"domain", "text"})
    if unknown:
        raise ConfigError(f"template {template!r} has unknown placeholder(s) {unknown}")
    return template.format(domain=domain_tag, text=raw)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    aa = float(np.dot(a, a))
    bb = float(np.dot(b, b))
    if aa == 0.0 or bb == 0.0:
        raise ValueError("cosine of a zero-norm vector")
    # sqrt(aa * bb) rather than |a| * |b|: exact 1.0 for identical vectors
    v = float(np.dot(a, b)) / math.sqrt(aa * bb)
    return min(1.0, max(-1.0, v))


# -- providers --------------------------------------------------------------

class RelevanceProvider(Protocol):
    """Anything that maps a batch of texts to equal-length vectors, deterministically."""

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def _check_vector(vec, index: int, dim: int | None) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ProviderError(f"embedding {index} is not a nonempty 1-d vector", index)
    if dim is not None and arr.shape[0] != dim:
        raise ProviderError(f"embedding {index} has dimension {arr.shape[0]}, expected {dim}", index)
    if not np.all(np.isfinite(arr)):
        raise ProviderError(f"embedding {index} has non-finite values", index)
    if not np.any(arr):
        raise ProviderError(f"embedding {index} is the zero vector", index)
    return arr


_TOKEN = re.compile(r"[a-z0-9]+")


class MockEmbeddingProvider:
    """Signed feature hashing of lowercase word tokens.

    Identical texts map to identical vectors, and texts sharing words get
    positive similarity. Stable across processes (blake2b, not ``hash``).
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ConfigError("mock provider dimension must be >= 1")
        self.dim = dim

    def _vector(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in _TOKEN.findall(text.lower()):
            h = hashlib.blake2b(tok.encode(), digest_size=8).digest()
            idx = int.from_bytes(h[:4], "little") % self.dim
            vec[idx] += 1.0 if h[4] & 1 else -1.0
        if not np.any(vec):
            # no tokens, or tokens cancelled out: fall back to a fixed text-keyed axis
            h = hashlib.blake2b(text.encode(), digest_size=4).digest()
            vec[int.from_bytes(h, "little") % self.dim] = 1.0
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._vector(t) for t in texts]


class FileEmbeddingProvider:
    """Exact-match lookup in a JSON ``{text: [floats]}`` map."""

    def __init__(self, table: dict[str, Sequence[float]]):
        self.dim: int | None = None
        self._table: dict[str, np.ndarray] = {}
        for i, (text, vec) in enumerate(table.items()):
            arr = _check_vector(vec, i, self.dim)
            self.dim = arr.shape[0]
            self._table[text] = arr

    @classmethod
    def from_file(cls, path) -> "FileEmbeddingProvider":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ProviderError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ProviderError(f"{path}: expected a JSON object mapping text to vector")
        try:
            return cls(data)
        except ProviderError as exc:
            raise ProviderError(f"{path}: {exc}") from None

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for i, t in enumerate(texts):
            try:
                out.append(self._table[t])
            except KeyError:
                raise ProviderError(f"no precomputed embedding for {t!r}", i) from None
        return out


class RemoteEmbeddingProvider:
    """Client for an embedding service: POST {"texts": [...]} -> {"embeddings": [[...]]}."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self.dim: int | None = None

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        body = json.dumps({"texts": list(texts)}).encode()
        req = urllib.request.Request(self.url, data=body,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode())
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise ProviderError(f"embedding service {self.url} failed: {exc}") from None
        vectors = payload.get("embeddings") if isinstance(payload, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(
                f"embedding service {self.url} returned a malformed response for {len(texts)} texts")
        out = []
        for i, v in enumerate(vectors):
            arr = _check_vector(v, i, self.dim)
            self.dim = arr.shape[0]
            out.append(arr)
        return out


# -- scored scenes ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScoredScene:
    """A scene plus one clamped relevance score per element.

    Element boxes, centers and flags are also kept as arrays for the
    numeric kernels. Treat instances as immutable.
    """
    scene: Scene
    instruction: Instruction
    scores: tuple[float, ...]
    boxes: np.ndarray = field(repr=False, default=None)
    centers: np.ndarray = field(repr=False, default=None)
    interactive: np.ndarray = field(repr=False, default=None)
    score_array: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n = len(self.scene.elements)
        if len(self.scores) != n:
            raise ValueError(f"{len(self.scores)} scores for {n} elements")
        if any(not (0.0 <= s <= 1.0) for s in self.scores):
            raise ValueError("scores must lie in [0, 1]")
        boxes = np.array([e.box.as_list() for e in self.scene.elements],
                         dtype=np.float64).reshape(n, 4)
        centers = np.column_stack(((boxes[:, 0] + boxes[:, 2]) / 2.0,
                                   (boxes[:, 1] + boxes[:, 3]) / 2.0))
        for name, arr in (("boxes", boxes), ("centers", centers),
                          ("interactive", np.array([e.interactive for e in self.scene.elements],
                                                   dtype=np.bool_)),
                          ("score_array", np.array(self.scores, dtype=np.float64))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def bounds(self) -> Rect:
        return self.scene.bounds

    def __len__(self) -> int:
        return len(self.scores)


def score_scene(scene: Scene, instruction: Instruction | str, provider: RelevanceProvider,
                template: str = DEFAULT_TEMPLATE) -> ScoredScene:
    """Embed the instruction and every description once, score by clamped cosine.

    Empty descriptions are not sent to the provider and score 0.
    """
    if isinstance(instruction, str):
        instruction = Instruction(instruction)
    prefixed_instr = build_prefixed_text(scene.domain_tag, instruction.text, template)
    instruction = Instruction(instruction.text, prefixed_instr)

    described = [e for e in scene.elements if e.description.strip()]
    texts = [prefixed_instr] + [build_prefixed_text(scene.domain_tag, e.description, template)
                                for e in described]
    try:
        vectors = provider.embed(texts)
    except ProviderError as exc:
        if exc.index is not None and exc.index >= 1:
            el = described[exc.index - 1]
            raise ScoringError(f"element {el.id}: {exc}", el.id) from exc
        raise ScoringError(f"instruction: {exc}") from exc
    if len(vectors) != len(texts):
        raise ScoringError(f"provider returned {len(vectors)} vectors for {len(texts)} texts")

    try:
        e_t = _check_vector(vectors[0], 0, None)
    except ProviderError as exc:
        raise ScoringError(f"instruction: {exc}") from exc
    scores = [0.0] * len(scene.elements)
    for k, el in enumerate(described, start=1):
        try:
            e_d = _check_vector(vectors[k], k, e_t.shape[0])
        except ProviderError as exc:
            raise ScoringError(f"element {el.id}: {exc}", el.id) from exc
        scores[el.id] = min(1.0, max(0.0, cosine(e_t, e_d)))
    return ScoredScene(scene, instruction, tuple(scores))


def rescored(scored: ScoredScene) -> ScoredScene:
    """Rebuild a ScoredScene from its own scores (re-clamp, re-index).

    Embeddings never change per text, so this is the whole of per-region
    rescoring in a pre-parsed setting.
    """
    scores = tuple(min(1.0, max(0.0, float(s))) for s in scored.scores)
    return ScoredScene(scored.scene, scored.instruction, scores)


def member_indices(scored: ScoredScene, region: Rect) -> np.ndarray:
    """Indices of elements whose box center lies in ``region``, best score first, id ties ascending."""
    mask = _kernels.centers_inside(scored.centers, region.x0, region.y0, region.x1, region.y1)
    idx = np.flatnonzero(mask)
    if idx.size > 1:
        idx = idx[np.lexsort((idx, -scored.score_array[idx]))]
    return idx


def outside_indices(scored: ScoredScene, region: Rect) -> np.ndarray:
    """Complement of :func:`member_indices`, in the same order convention."""
    mask = _kernels.centers_inside(scored.centers, region.x0, region.y0, region.x1, region.y1)
    idx = np.flatnonzero(~mask)
    if idx.size > 1:
        idx = idx[np.lexsort((idx, -scored.score_array[idx]))]
    return idx


def elements_in_region(scored: ScoredScene, region: Rect) -> list[tuple[UiElement, float]]:
    els = scored.scene.elements
    return [(els[i], scored.scores[i]) for i in member_indices(scored, region)]
