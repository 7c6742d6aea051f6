"""Experiment configuration: a flat, line-oriented `key = value` file.

Unknown keys are hard errors so a typo cannot silently fall back to a
default. Serialization is canonical (fixed key order, repr floats), which
makes the checkpoint's embedded config echo byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from nser.errors import ConfigError
from nser.model.network import FUSION_NORMS, MODES, VARIANTS

_CV_SCHEMES = ("kfold", "fixed-split")
_KNOWN_METRICS = ("uar", "f1_weighted", "f1_macro", "accuracy")


@dataclass
class ExperimentConfig:
    enc_layers: int
    dec_layers: int
    feature_dim: int
    mode: str = "encoder+decoder"
    variant: str = "adapter"
    hidden: int = 256
    adapter_out: int = 512
    depth: int = 2
    dropout: float = 0.5
    fusion_norm: str = "softmax"
    lr: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    cv: str = "kfold"
    k: int = 5
    dev_fraction: float = 0.1
    metrics: tuple = _KNOWN_METRICS
    classes: tuple = ()
    ln_eps: float = 1e-9

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.fusion_norm not in FUSION_NORMS:
            raise ConfigError(
                f"fusion_norm must be one of {FUSION_NORMS}, got {self.fusion_norm!r}"
            )
        if self.cv not in _CV_SCHEMES:
            raise ConfigError(f"cv must be one of {_CV_SCHEMES}, got {self.cv!r}")
        for name in ("enc_layers", "dec_layers"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("feature_dim", "hidden", "adapter_out", "depth",
                     "batch_size", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.adapter_out != 2 * self.hidden:
            raise ConfigError(
                f"adapter_out must equal 2*hidden (bidirectional concat); "
                f"got adapter_out={self.adapter_out}, hidden={self.hidden}"
            )
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.ln_eps <= 0:
            raise ConfigError(f"ln_eps must be positive, got {self.ln_eps}")
        if self.cv == "kfold" and self.k < 2:
            raise ConfigError(f"k must be >= 2 for k-fold, got {self.k}")
        if not (0.0 < self.dev_fraction <= 0.5):
            raise ConfigError(
                f"dev_fraction must be in (0, 0.5], got {self.dev_fraction}"
            )
        self.metrics = tuple(self.metrics)
        self.classes = tuple(self.classes)
        unknown = [m for m in self.metrics if m not in _KNOWN_METRICS]
        if unknown:
            raise ConfigError(
                f"unknown metric(s) {unknown}; known: {list(_KNOWN_METRICS)}"
            )
        if "uar" not in self.metrics:
            raise ConfigError("metric set must include uar (used for early stopping)")

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                rendered = ",".join(value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse(text: str) -> "ExperimentConfig":
        return ExperimentConfig.from_mapping(parse_kv(text))

    @staticmethod
    def from_file(path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return ExperimentConfig.parse(text)

    @staticmethod
    def from_mapping(mapping: dict) -> "ExperimentConfig":
        spec = {f.name: f.type for f in fields(ExperimentConfig)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in spec:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, spec[key])
        missing = [
            name for name in ("enc_layers", "dec_layers", "feature_dim")
            if name not in kwargs
        ]
        if missing:
            raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
        return ExperimentConfig(**kwargs)


def parse_kv(text: str) -> dict:
    """`key = value` lines; `#` comments; duplicate keys rejected."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, raw, annotation: str):
    # Field annotations are strings here (postponed evaluation), so dispatch
    # on the annotation text: "int", "float", "str", "tuple".
    if not isinstance(raw, str):
        return raw  # already typed (programmatic use)
    if annotation == "tuple":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    if annotation == "int":
        try:
            return int(raw, 10)
        except ValueError:
            raise ConfigError(
                f"config key {key!r}: expected an integer, got {raw!r}"
            ) from None
    if annotation == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(
                f"config key {key!r}: expected a number, got {raw!r}"
            ) from None
    return raw
