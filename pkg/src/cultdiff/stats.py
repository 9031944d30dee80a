"""Rank correlation and agreement statistics.

All statistics are implemented directly from their defining formulas so they
can be checked against brute-force oracles; none of them delegate to scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateAgreement,
    LengthMismatch,
    UnequalRaterCounts,
    ZeroVariance,
)


def _as_float_array(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _check_paired(x, y):
    x = _as_float_array(x, "x")
    y = _as_float_array(y, "y")
    if len(x) != len(y):
        raise LengthMismatch(f"length {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least 2 paired observations")
    return x, y


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties replaced by the mean of their rank range."""
    arr = _as_float_array(values, "values")
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        # positions i..j share the value; mean of ranks i+1..j+1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _check_paired(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("Pearson r undefined for a constant input")
    return float(np.sum(dx * dy) / (sx * sy))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of the midrank-transformed inputs."""
    x, y = _check_paired(x, y)
    return pearson_r(midranks(x), midranks(y))


def _concordance_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    c = d = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            s = (x[i] - x[j]) * (y[i] - y[j])
            if s > 0:
                c += 1
            elif s < 0:
                d += 1
    return c, d


def _tie_term(values: np.ndarray) -> float:
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts * (counts - 1)) / 2.0)


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected Kendall correlation."""
    x, y = _check_paired(x, y)
    c, d = _concordance_counts(x, y)
    n = len(x)
    n0 = n * (n - 1) / 2.0
    n1 = _tie_term(x)
    n2 = _tie_term(y)
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0.0:
        raise ZeroVariance("tau_b undefined for a constant input")
    return (c - d) / denom


def kendall_tau_c(x: Sequence[float], y: Sequence[float]) -> float:
    """Stuart's rectangular-table Kendall correlation.

    The table size m is min(#distinct x, #distinct y), each capped at n;
    Likert-vs-continuous data gets its convention from the distinct-value
    counts of the two arrays.
    """
    x, y = _check_paired(x, y)
    c, d = _concordance_counts(x, y)
    n = len(x)
    m = min(len(np.unique(x)), len(np.unique(y)), n)
    if m < 2:
        raise ZeroVariance("tau_c undefined for a constant input")
    return 2.0 * m * (c - d) / (n * n * (m - 1))


def sem(values: Sequence[float]) -> float | None:
    """Standard error of the mean: sample standard deviation / sqrt(n).

    Returns None for a single observation, where the sample sd is undefined.
    """
    arr = _as_float_array(values, "values")
    n = len(arr)
    if n < 2:
        return None
    sd = float(np.std(arr, ddof=1))
    return sd / math.sqrt(n)


@dataclass(frozen=True)
class FleissKappaResult:
    kappa: float
    p_bar: float
    p_e: float
    n_items: int
    n_raters: int
    n_categories: int


def fleiss_kappa(counts: Sequence[Sequence[int]]) -> FleissKappaResult:
    """Fleiss' kappa over an items x categories count matrix.

    Every row must sum to the same rater count n >= 2. Raises
    DegenerateAgreement when chance agreement is 1 (all mass in one
    category), where kappa is undefined.
    """
    matrix = np.asarray(counts, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("need a 2-D count matrix with at least 2 items")
    if np.any(matrix < 0):
        raise ValueError("counts must be non-negative")
    row_sums = matrix.sum(axis=1)
    n = row_sums[0]
    if not np.all(row_sums == n):
        raise UnequalRaterCounts("rows sum to different rater counts")
    if n < 2:
        raise UnequalRaterCounts("need at least 2 raters")

    n_items, n_cats = matrix.shape
    # per-item agreement: fraction of concordant rater pairs
    p_i = (np.sum(matrix * matrix, axis=1) - n) / (n * (n - 1))
    p_bar = float(np.mean(p_i))
    p_j = matrix.sum(axis=0) / (n_items * n)
    p_e = float(np.sum(p_j * p_j))
    if p_e == 1.0:
        raise DegenerateAgreement("all ratings in a single category")
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return FleissKappaResult(
        kappa=kappa,
        p_bar=p_bar,
        p_e=p_e,
        n_items=n_items,
        n_raters=int(n),
        n_categories=n_cats,
    )
