"""Composite differentiable functions built from the primitives."""
from __future__ import annotations

import math

import numpy as np

from .core import (ShapeMismatch, Tensor, add, as_tensor, clamp, concat, exp, log_softmax, mul, scale, square,
                   sub, tsum)

LOGVAR_MIN, LOGVAR_MAX = -20.0, 20.0
LOG_2PI = math.log(2.0 * math.pi)


def gaussian_kl(mu, logvar) -> Tensor:
    """KL(N(mu, exp(logvar)) || N(0, I)) summed over all entries."""
    mu, logvar = as_tensor(mu), as_tensor(logvar)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"gaussian_kl: mu {mu.shape} vs logvar {logvar.shape}")
    lv = clamp(logvar, LOGVAR_MIN, LOGVAR_MAX)
    terms = sub(add(square(mu), exp(lv)), add(lv, 1.0))
    return scale(tsum(terms), 0.5)


def gaussian_kl_rows(mu, logvar) -> Tensor:
    """Per-row KL terms as a column."""
    mu, logvar = as_tensor(mu), as_tensor(logvar)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"gaussian_kl: mu {mu.shape} vs logvar {logvar.shape}")
    lv = clamp(logvar, LOGVAR_MIN, LOGVAR_MAX)
    terms = sub(add(square(mu), exp(lv)), add(lv, 1.0))
    return scale(tsum(terms, axis=1), 0.5)


def reparameterize(mu, logvar, rng: np.random.Generator) -> Tensor:
    """mu + exp(logvar / 2) * eps with eps ~ N(0, I) drawn from ``rng``."""
    mu, logvar = as_tensor(mu), as_tensor(logvar)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"reparameterize: mu {mu.shape} vs logvar {logvar.shape}")
    eps = rng.standard_normal(mu.shape)
    std = exp(scale(clamp(logvar, LOGVAR_MIN, LOGVAR_MAX), 0.5))
    return add(mu, mul(std, Tensor(eps)))


def std_normal_nll2(y) -> Tensor:
    """-2 log N(y; 0, 1) per entry: y^2 + ln(2 pi)."""
    return add(square(as_tensor(y)), LOG_2PI)


def gaussian_entropy(logvar) -> Tensor:
    """Differential entropy 0.5 (1 + ln 2pi + logvar) per entry."""
    lv = clamp(as_tensor(logvar), LOGVAR_MIN, LOGVAR_MAX)
    return scale(add(lv, 1.0 + LOG_2PI), 0.5)


def binary_cross_entropy_logits(logits, targets) -> Tensor:
    """Summed BCE of sigmoid(logits) against 0/1 targets, computed stably."""
    x = as_tensor(logits)
    if x.shape[1] != 1:
        raise ShapeMismatch("binary_cross_entropy_logits expects a column of logits")
    t = np.asarray(targets, dtype=float).reshape(x.shape)
    # two-class log-softmax over (0, x) gives log p(0) and log p(1)
    lp = log_softmax(concat([Tensor(np.zeros(x.shape)), x], axis=1))
    w = np.concatenate([1.0 - t, t], axis=1)
    return scale(tsum(mul(lp, Tensor(w))), -1.0)
