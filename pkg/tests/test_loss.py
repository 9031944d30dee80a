"""Weighted margin loss: exact values, properties, and gradient checks."""

from fractions import Fraction

import numpy as np
import pytest

from cultdiff.errors import DimensionMismatch, EmptyBatch
from cultdiff.loss import (
    loss_from_embeddings,
    loss_gradients,
    pair_distance,
    weighted_margin_loss,
)


def test_pair_distance_cases():
    assert pair_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert pair_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2.0))
    assert pair_distance([1.0, 0.0], [0.0, 0.0]) == 1.0
    with pytest.raises(DimensionMismatch):
        pair_distance([1.0], [1.0, 2.0])


def test_loss_exact_values_rational_arithmetic():
    # single positive at distance 0
    assert weighted_margin_loss([0.0], [1], [1.0]) == 0.0
    # single negative at or beyond the margin
    assert weighted_margin_loss([1.0], [0], [1.0], margin=1.0) == 0.0
    assert weighted_margin_loss([1.7], [0], [1.0], margin=1.0) == 0.0
    # w * d^2 for a positive: 0.5 * 0.8^2 = 0.32
    expected = Fraction(1, 2) * Fraction(8, 10) ** 2
    assert weighted_margin_loss([0.8], [1], [0.5]) == pytest.approx(float(expected), abs=1e-15)
    assert float(expected) == 0.32
    # batch {(0.8, 1, 0.5), (0.4, 0, 1.0)}: (0.32 + 0.36) / 2 = 0.34
    expected = (Fraction(1, 2) * Fraction(8, 10) ** 2 + (1 - Fraction(4, 10)) ** 2) / 2
    assert weighted_margin_loss([0.8, 0.4], [1, 0], [0.5, 1.0]) == pytest.approx(
        float(expected), abs=1e-15
    )
    assert float(expected) == pytest.approx(0.34)


def test_loss_validation():
    with pytest.raises(EmptyBatch):
        weighted_margin_loss([], [], [])
    with pytest.raises(ValueError):
        weighted_margin_loss([0.5], [1], [1.5])  # weight outside [0, 1]
    with pytest.raises(ValueError):
        weighted_margin_loss([0.5], [2], [0.5])  # non-binary label
    with pytest.raises(ValueError):
        weighted_margin_loss([0.5], [1], [0.5], margin=0.0)


def test_loss_linear_in_each_weight():
    rng = np.random.default_rng(0)
    d = rng.uniform(0, 2, size=8)
    y = rng.integers(0, 2, size=8)
    w = rng.uniform(0.1, 1.0, size=8)
    base = weighted_margin_loss(d, y, w)
    for i in range(8):
        w2 = w.copy()
        w2[i] = w[i] / 2
        contribution_i = base - weighted_margin_loss(d, y, w2)
        w3 = w.copy()
        w3[i] = 0.0
        full_contribution = base - weighted_margin_loss(d, y, w3)
        assert contribution_i == pytest.approx(full_contribution / 2, abs=1e-12)


def test_loss_monotonicity_in_distance():
    # non-decreasing in d for positives
    ds = np.linspace(0, 2, 30)
    pos = [weighted_margin_loss([d], [1], [1.0]) for d in ds]
    assert all(b >= a for a, b in zip(pos, pos[1:]))
    # non-increasing in d on [0, m] for negatives
    neg = [weighted_margin_loss([d], [0], [1.0], margin=1.0) for d in np.linspace(0, 1, 30)]
    assert all(b <= a for a, b in zip(neg, neg[1:]))


def test_loss_zero_iff_satisfied():
    d = [0.0, 1.2, 1.0]
    y = [1, 0, 0]
    w = [1.0, 0.7, 0.3]
    assert weighted_margin_loss(d, y, w, margin=1.0) == 0.0
    assert weighted_margin_loss([0.1, 1.2], [1, 0], [1.0, 1.0]) > 0.0


def test_gradient_check_against_central_differences():
    """Analytic embedding gradients vs finite differences, 50 seeded batches."""
    rng = np.random.default_rng(123)
    eps = 1e-6
    for _ in range(50):
        n, dim = int(rng.integers(2, 6)), int(rng.integers(2, 5))
        e1 = rng.standard_normal((n, dim))
        e2 = rng.standard_normal((n, dim))
        y = rng.integers(0, 2, size=n)
        w = rng.uniform(0.05, 1.0, size=n)
        m = float(rng.uniform(0.5, 2.0))
        # keep away from the d=0 non-differentiable point
        d = np.linalg.norm(e1 - e2, axis=1)
        if np.any(d < 1e-2):
            continue
        loss, g1, g2 = loss_gradients(e1, e2, y, w, m)
        for grad, emb, which in ((g1, e1, 0), (g2, e2, 1)):
            num = np.zeros_like(emb)
            for i in range(n):
                for j in range(dim):
                    bump = np.zeros_like(emb)
                    bump[i, j] = eps
                    args_p = (emb + bump, e2, y, w, m) if which == 0 else (e1, emb + bump, y, w, m)
                    args_m = (emb - bump, e2, y, w, m) if which == 0 else (e1, emb - bump, y, w, m)
                    num[i, j] = (
                        loss_from_embeddings(*args_p) - loss_from_embeddings(*args_m)
                    ) / (2 * eps)
            scale = max(np.max(np.abs(num)), np.max(np.abs(grad)), 1e-8)
            assert np.max(np.abs(num - grad)) / scale <= 1e-4


def test_torch_criterion_matches_numpy_loss():
    import torch

    from cultdiff.training import margin_loss_torch

    rng = np.random.default_rng(9)
    d = rng.uniform(0, 2, size=16)
    y = rng.integers(0, 2, size=16)
    w = rng.uniform(0, 1, size=16)
    expected = weighted_margin_loss(d, y, w, margin=1.3)
    got = margin_loss_torch(
        torch.tensor(d), torch.tensor(y, dtype=torch.float64), torch.tensor(w), 1.3
    )
    assert float(got) == pytest.approx(expected, abs=1e-12)
