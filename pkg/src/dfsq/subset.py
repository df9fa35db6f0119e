"""Subset quantization: pick 2**b points from a universal set, then round to them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .clustering import KMeansConfig, kmeans_best_of_trials
from .universal_set import UniversalSet

DEFAULT_BUDGET = 10**7
# Exhaustive losses closer than this (relative) count as a tie.
_LOSS_TIE_RTOL = 1e-9


class BudgetExceeded(ValueError):
    def __init__(self, n: int, k: int, count: int, budget: int):
        self.n, self.k, self.count, self.budget = n, k, count, budget
        super().__init__(
            f"exhaustive search over C({n}, {k}) = {count} (~{count:.4g}) "
            f"combinations exceeds the budget of {budget}"
        )


@dataclass(frozen=True, eq=False)
class QuantPointSet:
    points: np.ndarray
    bits: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).ravel()
        if pts.size != 1 << self.bits:
            raise ValueError(f"{self.bits}-bit point set needs {1 << self.bits} points, got {pts.size}")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("quantization points must be strictly ascending")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantPointSet):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.points, other.points)


def combination_count(n: int, bits: int) -> int:
    return math.comb(n, 1 << bits)


def sq_quantize(values, points) -> np.ndarray:
    """Round every value to its nearest point; exact midpoints go to the smaller point."""
    p = np.asarray(getattr(points, "points", points), dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("cannot quantize to an empty point set")
    p = np.sort(p)
    x = np.asarray(values, dtype=np.float64)
    hi_idx = np.clip(np.searchsorted(p, x, side="left"), 0, p.size - 1)
    lo_idx = np.clip(hi_idx - 1, 0, p.size - 1)
    lo, hi = p[lo_idx], p[hi_idx]
    take_hi = (hi - x) < (x - lo)
    return np.where(take_hi, hi, lo)


def quantization_sse(values, points) -> float:
    x = np.asarray(values, dtype=np.float64)
    return float(np.sum((x - sq_quantize(x, points)) ** 2))


def _check_size(universal: UniversalSet, bits: int) -> int:
    k = 1 << bits
    if len(universal) < k:
        raise ValueError(f"universal set has {len(universal)} points, {bits}-bit quantization needs {k}")
    return k


def snap_centroids(centroids, universal: UniversalSet) -> np.ndarray:
    """Each centroid, in ascending order, takes its nearest still-unused point."""
    u = universal.points
    used = np.zeros(u.size, dtype=bool)
    chosen = []
    for c in np.sort(np.asarray(centroids, dtype=np.float64)):
        d = np.abs(u - c)
        d[used] = np.inf
        i = int(np.argmin(d))  # first minimum is the smaller point
        used[i] = True
        chosen.append(u[i])
    return np.sort(np.array(chosen))


def select_points_fast(
    normalized,
    universal: UniversalSet,
    bits: int,
    kcfg: KMeansConfig | None = None,
    return_kmeans: bool = False,
):
    """K-means with K = 2**b, then snap the centroids into the universal set."""
    k = _check_size(universal, bits)
    if kcfg is None:
        kcfg = KMeansConfig(k=k)
    elif kcfg.k != k:
        kcfg = KMeansConfig(k=k, max_iters=kcfg.max_iters, trials=kcfg.trials, seed=kcfg.seed, tol=kcfg.tol)
    km = kmeans_best_of_trials(normalized, kcfg)
    pts = QuantPointSet(snap_centroids(km.centroids, universal), bits)
    return (pts, km) if return_kmeans else pts


def _subset_losses(xs: np.ndarray, s1: np.ndarray, s2: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """SSE of quantizing sorted data ``xs`` to each row of ``subsets`` (rows ascending)."""
    mids = (subsets[:, :-1] + subsets[:, 1:]) / 2
    # data <= midpoint belongs to the lower point
    cuts = np.searchsorted(xs, mids, side="right")
    n_sub = subsets.shape[0]
    edges = np.concatenate(
        [np.zeros((n_sub, 1), dtype=np.intp), cuts, np.full((n_sub, 1), xs.size, dtype=np.intp)], axis=1
    )
    a, b = edges[:, :-1], edges[:, 1:]
    cnt = b - a
    sx = s1[b] - s1[a]
    sxx = s2[b] - s2[a]
    return np.sum(sxx - 2 * subsets * sx + subsets * subsets * cnt, axis=1)


def select_points_exhaustive(
    normalized,
    universal: UniversalSet,
    bits: int,
    budget: int = DEFAULT_BUDGET,
    chunk: int = 1 << 16,
    return_loss: bool = False,
):
    """Try every 2**b-subset of the universal set and keep the lowest-SSE one.

    Candidates are enumerated in lexicographic order, so the first subset
    within the tie tolerance of the minimum is the lexicographically smallest.
    """
    k = _check_size(universal, bits)
    n = len(universal)
    count = math.comb(n, k)
    if count > budget:
        raise BudgetExceeded(n, k, count, budget)
    xs = np.sort(np.asarray(normalized, dtype=np.float64).ravel())
    s1 = np.concatenate([[0.0], np.cumsum(xs)])
    s2 = np.concatenate([[0.0], np.cumsum(xs * xs)])
    u = universal.points

    losses = np.empty(count)
    combos = itertools.combinations(range(n), k)
    done = 0
    while done < count:
        m = min(chunk, count - done)
        idx = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, m)), dtype=np.intp, count=m * k)
        losses[done:done + m] = _subset_losses(xs, s1, s2, u[idx.reshape(m, k)])
        done += m
    losses = np.maximum(losses, 0.0)
    best = losses.min()
    slack = _LOSS_TIE_RTOL * best + 1e-13 * s2[-1]  # prefix-sum cancellation
    winner = int(np.argmax(losses <= best + slack))
    subset = next(itertools.islice(itertools.combinations(range(n), k), winner, None))
    pts = QuantPointSet(u[list(subset)], bits)
    if return_loss:
        return pts, quantization_sse(xs, pts)
    return pts


__all__ = [
    "BudgetExceeded",
    "DEFAULT_BUDGET",
    "QuantPointSet",
    "combination_count",
    "quantization_sse",
    "select_points_exhaustive",
    "select_points_fast",
    "snap_centroids",
    "sq_quantize",
]
