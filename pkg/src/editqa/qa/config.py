"""Model configuration: one JSON document describing every branch.

The canonical hash of a config is embedded in checkpoints; loading a
checkpoint into a differently-configured model is refused.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..errors import UserInputError

TEXT_MODES = ("blip", "clip")
RELEVANCE_ENCODERS = ("none", "vswin", "mvd", "uniformer")
FUSION_MODES = ("none", "mca", "concat")
BRANCHES = ("alignment", "relevance", "aesthetic", "technical")


@dataclass(frozen=True)
class AdapterConfig:
    """Temporal adapter: self-attention over the frame axis with learned positions."""

    layers: int = 1
    heads: int = 4
    zero_init: bool = True


@dataclass(frozen=True)
class RelevanceConfig:
    """Source-target branch: spatiotemporal encoder pair and its input size."""

    encoder: str = "uniformer"
    input_size: int = 32
    heads: int = 4
    share_init: bool = True


@dataclass(frozen=True)
class AestheticConfig:
    input_size: int = 32


@dataclass(frozen=True)
class TechnicalConfig:
    fragment_grid: int = 7
    fragment_size: int = 32


@dataclass(frozen=True)
class ModelConfig:
    scale: str = "toy"
    seed: int = 0
    feature_width: int = 64
    max_frames: int = 32
    text_mode: str = "blip"
    text_vocab: int = 256
    text_max_len: int = 16
    fusion: str = "concat"
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    relevance: RelevanceConfig = field(default_factory=RelevanceConfig)
    aesthetic: AestheticConfig = field(default_factory=AestheticConfig)
    technical: TechnicalConfig = field(default_factory=TechnicalConfig)
    branch_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.text_mode not in TEXT_MODES:
            raise UserInputError(f"text_mode must be one of {TEXT_MODES}")
        if self.fusion not in FUSION_MODES:
            raise UserInputError(f"fusion must be one of {FUSION_MODES}")
        if self.relevance.encoder not in RELEVANCE_ENCODERS:
            raise UserInputError(
                f"relevance encoder must be one of {RELEVANCE_ENCODERS}")
        if self.feature_width % 8 != 0 or self.feature_width < 8:
            raise UserInputError("feature_width must be a positive multiple of 8")
        if self.adapter.layers < 1:
            raise UserInputError("adapter needs at least 1 layer")
        if len(self.branch_weights) != 4:
            raise UserInputError("branch_weights must have 4 entries")

    @property
    def relevance_enabled(self) -> bool:
        # Either axis set to "none" bypasses the source-target branch entirely
        # (it then contributes score 0 with weight 0).
        return self.relevance.encoder != "none" and self.fusion != "none"

    def effective_branch_weights(self) -> tuple[float, float, float, float]:
        w = list(self.branch_weights)
        if not self.relevance_enabled:
            w[1] = 0.0
        return tuple(w)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["branch_weights"] = list(self.branch_weights)
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def canonical_hash(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        try:
            for key, sub in (("adapter", AdapterConfig), ("relevance", RelevanceConfig),
                             ("aesthetic", AestheticConfig), ("technical", TechnicalConfig)):
                if key in data and isinstance(data[key], dict):
                    data[key] = sub(**data[key])
            if "branch_weights" in data:
                data["branch_weights"] = tuple(float(x) for x in data["branch_weights"])
            return cls(**data)
        except TypeError as exc:
            raise UserInputError(f"bad model config: {exc}")

    @classmethod
    def load(cls, path: str | Path) -> "ModelConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UserInputError(f"cannot read model config {path}: {exc}")
        return cls.from_dict(data)

    @classmethod
    def toy(cls, **overrides) -> "ModelConfig":
        """CPU-friendly configuration used by tests and demos."""
        base = cls(
            scale="toy",
            feature_width=32,
            text_vocab=128,
            adapter=AdapterConfig(layers=1, heads=2),
            relevance=RelevanceConfig(encoder="uniformer", input_size=16, heads=2),
            aesthetic=AestheticConfig(input_size=16),
            technical=TechnicalConfig(fragment_grid=2, fragment_size=8),
        )
        return replace(base, **{k: v for k, v in overrides.items()}) if overrides else base
