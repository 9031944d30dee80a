"""Weighted contrastive margin loss, in plain numpy.

The per-pair term is w * (y * d^2 + (1 - y) * max(0, m - d)^2), averaged over
the batch. The torch training criterion mirrors this module and is tested
against it; the analytic embedding gradients here back the finite-difference
check.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyBatch


def pair_distance(e1: Sequence[float], e2: Sequence[float]) -> float:
    """Euclidean distance between two embeddings."""
    a = np.asarray(e1, dtype=float)
    b = np.asarray(e2, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def weighted_margin_loss(
    distances: Sequence[float],
    labels: Sequence[int],
    weights: Sequence[float],
    margin: float = 1.0,
) -> float:
    d = np.asarray(distances, dtype=float)
    y = np.asarray(labels, dtype=float)
    w = np.asarray(weights, dtype=float)
    if d.size == 0:
        raise EmptyBatch("loss over an empty batch")
    if not (d.shape == y.shape == w.shape):
        raise DimensionMismatch("distances, labels, weights must align")
    if margin <= 0:
        raise ValueError("margin must be positive")
    if np.any((w < 0) | (w > 1)):
        raise ValueError("weights must lie in [0, 1]")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be 0 or 1")
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    hinge = np.maximum(0.0, margin - d)
    terms = w * (y * d * d + (1.0 - y) * hinge * hinge)
    return float(np.mean(terms))


def loss_from_embeddings(
    e1: np.ndarray,
    e2: np.ndarray,
    labels: Sequence[int],
    weights: Sequence[float],
    margin: float = 1.0,
) -> float:
    d = np.linalg.norm(np.asarray(e1, float) - np.asarray(e2, float), axis=1)
    return weighted_margin_loss(d, labels, weights, margin)


def loss_gradients(
    e1: np.ndarray,
    e2: np.ndarray,
    labels: Sequence[int],
    weights: Sequence[float],
    margin: float = 1.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and its analytic gradients with respect to both embedding sets.

    d(y d^2)/de1 = 2 y (e1 - e2); for negatives within the margin the term
    max(0, m - d)^2 differentiates to -2 (m - d) (e1 - e2) / d.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    y = np.asarray(labels, dtype=float)[:, None]
    w = np.asarray(weights, dtype=float)[:, None]
    n = e1.shape[0]
    if n == 0:
        raise EmptyBatch("loss over an empty batch")
    diff = e1 - e2
    d = np.linalg.norm(diff, axis=1, keepdims=True)
    hinge = np.maximum(0.0, margin - d)
    loss = float(np.mean(w * (y * d**2 + (1 - y) * hinge**2)))
    safe_d = np.where(d > 0, d, 1.0)  # hinge grad is 0 at d=0 only if m=0; d>0 in practice
    grad = w * (2.0 * y * diff - 2.0 * (1 - y) * hinge * diff / safe_d) / n
    return loss, grad, -grad
