from __future__ import annotations

from .config import RunConfig


def alpha_schedule(epoch: int, cfg: RunConfig) -> float:
    """Supervised weight for a 0-based epoch."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if cfg.mode != "semole_pretrained":
        return cfg.alpha_max
    if epoch < cfg.pretrain_epochs:
        return 0.0
    return cfg.alpha_max * min(1.0, (epoch - cfg.pretrain_epochs + 1) / cfg.ramp_epochs)
