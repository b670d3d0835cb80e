"""Run configuration: defaults <- JSON file <- endpoint env vars <- CLI flags."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .actions import ActionKind, ActionParams
from .harness.grounders import ClutterModel, RemoteGrounder, ScriptedGrounder
from .perceptor import (DEFAULT_TEMPLATE, ConfigError, FileEmbeddingProvider,
                        MockEmbeddingProvider, RemoteEmbeddingProvider, build_prefixed_text)
from .planner import SearchConfig
from .reward import TERMS, RewardWeights

ENV_ENDPOINTS = {"EMBEDDER_URL": ("provider", "url"), "GROUNDER_URL": ("grounder", "url")}


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    embeddings: str | None = None
    url: str | None = None
    timeout: float = 30.0
    dim: int = 256
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        if self.kind not in ("mock", "file", "remote"):
            raise ConfigError(f"provider.kind must be mock, file or remote, got {self.kind!r}")
        if self.kind == "file" and not self.embeddings:
            raise ConfigError("provider.embeddings is required when provider.kind is file")
        if self.kind == "remote" and not self.url:
            raise ConfigError("provider.url (or EMBEDDER_URL) is required when provider.kind is remote")
        if self.timeout <= 0:
            raise ConfigError("provider.timeout must be > 0")
        if self.dim < 1:
            raise ConfigError("provider.dim must be >= 1")
        build_prefixed_text("", "", self.template)  # validates placeholders


@dataclass(frozen=True)
class GrounderConfig:
    kind: str = "scripted"
    base_success: float = 0.95
    clutter_penalty: float = 0.01
    resolution_penalty: float = 0.05
    seed: int = 0
    url: str | None = None
    timeout: float = 60.0
    retries: int = 2

    def __post_init__(self):
        if self.kind not in ("scripted", "remote"):
            raise ConfigError(f"grounder.kind must be scripted or remote, got {self.kind!r}")
        if self.kind == "remote" and not self.url:
            raise ConfigError("grounder.url (or GROUNDER_URL) is required when grounder.kind is remote")
        if not 0.0 <= self.base_success <= 1.0:
            raise ConfigError("grounder.base_success must be in [0, 1]")
        if self.clutter_penalty < 0 or self.resolution_penalty < 0:
            raise ConfigError("grounder penalties must be >= 0")
        if self.retries < 0:
            raise ConfigError("grounder.retries must be >= 0")


@dataclass(frozen=True)
class Config:
    search: SearchConfig = field(default_factory=SearchConfig)
    reward_terms: tuple[str, ...] = TERMS
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    grounder: GrounderConfig = field(default_factory=GrounderConfig)
    parallelism: int = 1

    def __post_init__(self):
        unknown = set(self.reward_terms) - set(TERMS)
        if unknown:
            raise ConfigError(f"reward_terms: unknown term(s) {sorted(unknown)}")
        if not self.reward_terms:
            raise ConfigError("reward_terms: at least one term must stay enabled")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        self.effective_search()  # surfaces weight errors at load

    def effective_search(self) -> SearchConfig:
        """Search config with disabled reward terms folded into the weights."""
        disabled = [t for t in TERMS if t not in self.reward_terms]
        if not disabled:
            return self.search
        return replace(self.search, reward_weights=self.search.reward_weights.without(disabled))

    def to_dict(self) -> dict:
        s = self.search.to_dict()
        return {
            "search": {k: s[k] for k in ("rollout_budget", "max_depth", "uct_c", "exhaustive",
                                         "actions", "seeded_tiebreak", "rescore_per_region")},
            "action_params": s["action_params"],
            "reward_weights": s["reward_weights"],
            "reward_terms": list(self.reward_terms),
            "provider": _plain(self.provider),
            "grounder": _plain(self.grounder),
            "parallelism": self.parallelism,
        }

    def make_provider(self):
        p = self.provider
        if p.kind == "file":
            return FileEmbeddingProvider.from_file(p.embeddings)
        if p.kind == "remote":
            return RemoteEmbeddingProvider(p.url, p.timeout)
        return MockEmbeddingProvider(p.dim)

    def make_grounder(self, samples):
        g = self.grounder
        if g.kind == "remote":
            return RemoteGrounder(g.url, g.timeout, g.retries)
        return ScriptedGrounder(samples, ClutterModel(g.base_success, g.clutter_penalty,
                                                      g.resolution_penalty, g.seed))


def _plain(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _build(cls, section: str, data: Any):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object")
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown field(s) {', '.join(f'{section}.{u}' for u in unknown)}")
    defaults = cls()
    kwargs = {key: _coerce(f"{section}.{key}", value, getattr(defaults, key))
              for key, value in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _coerce(path: str, value: Any, default: Any):
    if value is None:
        return None
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError("expected true/false")
            return value
        if isinstance(default, int) and not isinstance(default, bool):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError("expected an integer")
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if isinstance(default, str) or default is None:
            return value if isinstance(value, (str, int)) else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid value {value!r} ({exc})") from None
    return value


def from_dict(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"search", "action_params", "reward_weights", "reward_terms", "provider",
               "grounder", "parallelism"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown config section(s) {unknown}")
    params = _build(ActionParams, "action_params", data.get("action_params", {}))
    weights = _build(RewardWeights, "reward_weights", data.get("reward_weights", {}))
    search = dict(data.get("search", {}))
    if not isinstance(search, dict):
        raise ConfigError("search: expected an object")
    if "actions" in search:
        acts = search.pop("actions")
        if isinstance(acts, str):
            acts = [a for a in acts.split(",") if a.strip()]
        search["actions"] = tuple(ActionKind.parse(a) for a in acts)
    seeded = search.pop("seeded_tiebreak", None)
    actions = search.pop("actions", None)
    base = _build(SearchConfig, "search", search)
    extra = {"action_params": params, "reward_weights": weights}
    if seeded is not None:
        extra["seeded_tiebreak"] = _coerce("search.seeded_tiebreak", seeded, 0)
    if actions is not None:
        extra["actions"] = actions
    search_cfg = replace(base, **extra)
    terms = data.get("reward_terms", list(TERMS))
    if isinstance(terms, str):
        terms = [t for t in terms.split(",") if t.strip()]
    return Config(
        search=search_cfg,
        reward_terms=tuple(t.strip() for t in terms),
        provider=_build(ProviderConfig, "provider", data.get("provider", {})),
        grounder=_build(GrounderConfig, "grounder", data.get("grounder", {})),
        parallelism=_coerce("parallelism", data.get("parallelism", 1), 1),
    )


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def load_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    return data


def resolve(config_file: str | None = None, overrides: dict | None = None,
            environ: dict | None = None) -> Config:
    """Defaults, then the config file, then endpoint env vars, then ``overrides`` (CLI flags)."""
    layered = Config().to_dict()
    if config_file:
        layered = merge(layered, load_file(config_file))
    env = os.environ if environ is None else environ
    for var, (section, key) in ENV_ENDPOINTS.items():
        if env.get(var):
            layered = merge(layered, {section: {key: env[var]}})
    if overrides:
        layered = merge(layered, overrides)
    return from_dict(layered)
