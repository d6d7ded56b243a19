"""Run configuration: JSON file over built-in defaults, then flag overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .seq2seq import TransformerConfig
from .training.optim import OptimConfig
from .vision import ResNetConfig


@dataclass
class VisualConfig:
    depth: int = 50
    base_channels: int = 64
    swm: int = 32
    frame_depth: int = 100
    height: int = 224
    width: int = 224
    norm: str = "group"
    norm_groups: int = 1

    @property
    def clip_dims(self) -> tuple[int, int, int]:
        return (self.frame_depth, self.height, self.width)

    def resnet(self) -> ResNetConfig:
        return ResNetConfig(self.depth, self.base_channels, self.norm, self.norm_groups)


@dataclass
class DataConfig:
    train_manifest: str = ""
    dev_manifest: str = ""
    max_tokens: int = 50


@dataclass
class RunConfig:
    visual: VisualConfig = field(default_factory=VisualConfig)
    language: TransformerConfig = field(default_factory=TransformerConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    data: DataConfig = field(default_factory=DataConfig)
    seed: int = 7

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        feature = self.visual.resnet().feature_size
        if feature % self.visual.swm:
            raise ConfigError(f"feature size {feature} is not divisible by SWM={self.visual.swm}")
        if self.data.max_tokens < 1:
            raise ConfigError("data.max_tokens must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTIONS = {"visual": VisualConfig, "language": TransformerConfig, "optim": OptimConfig, "data": DataConfig}


def _section(cls, values: dict, name: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return cls(**values)


def config_from_dict(obj: dict) -> RunConfig:
    """Missing sections and keys take their defaults; unknown keys are errors."""
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        parts = {name: _section(cls, obj.get(name, {}) or {}, name) for name, cls in _SECTIONS.items()}
        return RunConfig(seed=int(obj.get("seed", 7)), **parts)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(obj)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``section.key=value`` (or ``seed=value``) strings; values parse as JSON when possible."""
    obj = cfg.to_dict()
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path = key.strip().split(".")
        if path == ["seed"]:
            obj["seed"] = _parse_value(value)
            continue
        if len(path) != 2 or path[0] not in _SECTIONS:
            raise ConfigError(f"override key {key!r} must be section.field")
        obj[path[0]][path[1]] = _parse_value(value)
    return config_from_dict(obj)
