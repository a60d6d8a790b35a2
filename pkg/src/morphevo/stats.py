"""Kruskal-Wallis H test, Dunn's post hoc comparisons and group medians."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, ndtr
from scipy.stats import rankdata

ADJUSTMENTS = ("none", "bonferroni", "holm")


@dataclass(frozen=True)
class KruskalResult:
    H: float
    df: int
    p: float


@dataclass(frozen=True)
class DunnPair:
    a: str
    b: str
    z: float
    p_raw: float
    p_adjusted: float
    significant: bool


def _check_groups(groups) -> tuple[list[str], list[np.ndarray]]:
    if isinstance(groups, dict):
        labels, samples = list(map(str, groups)), list(groups.values())
    else:
        labels, samples = [str(i) for i in range(len(groups))], list(groups)
    samples = [np.asarray(s, dtype=np.float64).ravel() for s in samples]
    if len(samples) < 2:
        raise ValueError("need at least two groups")
    for lab, s in zip(labels, samples):
        if s.size < 2:
            raise ValueError(f"group {lab!r} needs at least two samples")
        if not np.all(np.isfinite(s)):
            raise ValueError(f"group {lab!r} contains non-finite values")
    return labels, samples


def _pooled_ranks(samples):
    pooled = np.concatenate(samples)
    ranks = rankdata(pooled)  # midranks
    _, counts = np.unique(pooled, return_counts=True)
    ties = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    bounds = np.cumsum([0] + [s.size for s in samples])
    mean_ranks = [ranks[bounds[i]:bounds[i + 1]].mean() for i in range(len(samples))]
    return pooled.size, np.array(mean_ranks), ties


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution, Q(df/2, x/2)."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def kruskal_wallis(groups) -> KruskalResult:
    """H statistic on midranks with tie correction; p from the chi-square tail."""
    _, samples = _check_groups(groups)
    n, mean_ranks, ties = _pooled_ranks(samples)
    sizes = np.array([s.size for s in samples], dtype=np.float64)
    h = 12.0 / (n * (n + 1)) * np.sum(sizes * (mean_ranks - (n + 1) / 2.0) ** 2)
    correction = 1.0 - ties / (n ** 3 - n)
    df = len(samples) - 1
    if correction <= 0:  # every value identical
        return KruskalResult(0.0, df, 1.0)
    h /= correction
    return KruskalResult(float(h), df, chi2_sf(h, df))


def adjust(p, method: str = "none") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if method == "none":
        return p.copy()
    if method == "bonferroni":
        return np.minimum(1.0, p * p.size)
    if method == "holm":
        m = p.size
        order = np.argsort(p, kind="stable")
        stepped = np.maximum.accumulate((m - np.arange(m)) * p[order])
        out = np.empty(m)
        out[order] = np.minimum(1.0, stepped)
        return out
    raise ValueError(f"unknown adjustment {method!r}, expected one of {ADJUSTMENTS}")


def dunn_posthoc(groups, alpha: float = 0.05, method: str = "none") -> list[DunnPair]:
    labels, samples = _check_groups(groups)
    n, mean_ranks, ties = _pooled_ranks(samples)
    var = n * (n + 1) / 12.0 - ties / (12.0 * (n - 1))
    pairs = list(itertools.combinations(range(len(samples)), 2))
    zs, ps = [], []
    for i, j in pairs:
        se = math.sqrt(var * (1.0 / samples[i].size + 1.0 / samples[j].size))
        z = 0.0 if se == 0 else (mean_ranks[i] - mean_ranks[j]) / se
        zs.append(z)
        ps.append(min(1.0, 2.0 * float(ndtr(-abs(z)))))
    padj = adjust(ps, method)
    return [DunnPair(labels[i], labels[j], float(z), p, float(q), bool(q < alpha))
            for (i, j), z, p, q in zip(pairs, zs, ps, padj)]


def group_medians(groups) -> dict[str, float]:
    if isinstance(groups, dict):
        items = groups.items()
    else:
        items = ((str(i), g) for i, g in enumerate(groups))
    out = {}
    for label, g in items:
        g = np.asarray(g, dtype=np.float64)
        if g.size == 0:
            raise ValueError(f"group {label!r} is empty")
        out[str(label)] = float(np.median(g))
    return out
