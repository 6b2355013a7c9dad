"""Run configuration and its flat ``key = value`` text form."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from ..props import PropertyKind
from .errors import ConfigError

MODES = ("semole", "semole_pretrained", "semole_supervised")


@dataclass(frozen=True)
class RunConfig:
    batch_size: int = 16
    lr: float = 0.001
    z_dim: int = 56
    hidden: int = 256
    depth: int = 4
    epochs: int = 30
    alpha_max: float = 1.0
    pretrain_epochs: int = 10
    ramp_epochs: int = 10
    label_fraction: float = 0.5
    seed: int = 0
    property: PropertyKind = PropertyKind.LogP
    mode: str = "semole_pretrained"
    # desk scale; the full protocol holds out 10000 test molecules
    test_size: int = 200
    val_fraction: float = 0.05
    candidate_cap: int = 40
    node_cap: int = 60
    mask_labels: bool = True

    def __post_init__(self):
        object.__setattr__(self, "property", PropertyKind.parse(self.property))
        for name in ("batch_size", "z_dim", "hidden", "depth", "epochs", "ramp_epochs", "test_size",
                     "candidate_cap", "node_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be non-negative")
        if not (self.lr > 0 and self.alpha_max >= 0):
            raise ValueError("lr must be positive and alpha_max non-negative")
        if not 0.0 < self.label_fraction <= 1.0:
            raise ValueError(f"label_fraction must lie in (0, 1], got {self.label_fraction}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["property"] = self.property.value
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


_KINDS = {"int": int, "float": float, "bool": bool, "str": str, "PropertyKind": PropertyKind}
_TYPES = {f.name: _KINDS[f.type] for f in fields(RunConfig)}


def _coerce(key, text, line):
    kind = _TYPES[key]
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is PropertyKind:
            return PropertyKind.parse(text)
        return text
    except ValueError:
        raise ConfigError(line, f"bad value for {key}: {text!r}") from None


def parse_config(text: str, base: RunConfig | None = None, extra: dict | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys that are not RunConfig fields go into ``extra`` when given, and are
    errors otherwise.
    """
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(n, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(n, "missing key")
        if key in values or (extra is not None and key in extra):
            raise ConfigError(n, f"duplicate key {key}")
        if key not in _TYPES:
            if extra is None:
                raise ConfigError(n, f"unknown key {key}")
            extra[key] = value
            continue
        values[key] = (_coerce(key, value, n), n)
    cfg = base or RunConfig()
    try:
        return cfg.replace(**{k: v for k, (v, _) in values.items()})
    except ValueError as exc:
        lines = [n for k, (_, n) in values.items() if k in str(exc)]
        raise ConfigError(lines[0] if lines else 0, str(exc)) from None


def read_config(path, base: RunConfig | None = None, extra: dict | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base, extra)


def format_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())
