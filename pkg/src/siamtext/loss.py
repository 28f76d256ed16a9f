"""Cosine similarity and the margin contrastive loss over projected vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class LossConfig:
    margin: float = 0.5
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.margin <= 1.0:
            raise ValueError(f"margin must lie in [0, 1], got {self.margin}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _check_y(y) -> None:
    if y not in (-1, 1):
        raise ValueError(f"pair label must be -1 or +1, got {y}")


def cosine(u, v, epsilon: float = 1e-8) -> float:
    """``u.v / (max(|u|, eps) * max(|v|, eps))`` clamped to ``[-1, 1]``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = max(float(np.linalg.norm(u)), epsilon)
    nv = max(float(np.linalg.norm(v)), epsilon)
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def contrastive_loss(s1, s2, y: int, cfg: LossConfig = LossConfig()) -> float:
    _check_y(y)
    cos = cosine(s1, s2, cfg.epsilon)
    if y == 1:
        return 1.0 - cos
    return max(0.0, cos - cfg.margin)


def contrastive_loss_grad(s1, s2, y: int, cfg: LossConfig = LossConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`contrastive_loss` with respect to ``s1`` and ``s2``.

    The hinge is treated as flat at ``cos == margin``.
    """
    _check_y(y)
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    if s1.shape != s2.shape:
        raise ValueError(f"dimension mismatch: {s1.shape} vs {s2.shape}")
    _, g1, g2 = pair_losses_and_grads(s1[None], s2[None], np.array([y]), cfg)
    return g1[0], g2[0]


def pair_losses_and_grads(
    S1: np.ndarray, S2: np.ndarray, y: np.ndarray, cfg: LossConfig = LossConfig()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise losses and their gradients for stacked pairs ``[B, d]``.

    The computation runs in the dtype of ``S1``.
    """
    eps = cfg.epsilon
    n1 = np.linalg.norm(S1, axis=1)
    n2 = np.linalg.norm(S2, axis=1)
    a1 = np.maximum(n1, eps)
    a2 = np.maximum(n2, eps)
    dot = np.einsum("ij,ij->i", S1, S2)
    raw = dot / (a1 * a2)
    cos = np.clip(raw, -1.0, 1.0)
    # d cos / d s1 = s2 / (a1 a2) - cos * s1 / a1^2 when |s1| > eps, else s2 / (a1 a2)
    inv = 1.0 / (a1 * a2)
    dc1 = S2 * inv[:, None] - np.where(n1 > eps, raw / (a1 * a1), 0)[:, None] * S1
    dc2 = S1 * inv[:, None] - np.where(n2 > eps, raw / (a2 * a2), 0)[:, None] * S2
    pos = y == 1
    losses = np.where(pos, 1.0 - cos, np.maximum(0.0, cos - cfg.margin)).astype(S1.dtype)
    coef = np.where(pos, -1.0, np.where(cos > cfg.margin, 1.0, 0.0)).astype(S1.dtype)
    return losses, coef[:, None] * dc1, coef[:, None] * dc2


def batch_loss(pairs: Iterable[tuple[np.ndarray, np.ndarray, int]], cfg: LossConfig = LossConfig()) -> float:
    """Summed contrastive loss over ``(s1, s2, y)`` triples."""
    total = 0.0
    n = 0
    for s1, s2, y in pairs:
        total += contrastive_loss(s1, s2, y, cfg)
        n += 1
    if n == 0:
        raise ValueError("empty batch")
    return total


def batch_loss_with_mean(pairs, cfg: LossConfig = LossConfig()) -> tuple[float, float]:
    pairs = list(pairs)
    total = batch_loss(pairs, cfg)
    return total, total / len(pairs)
