"""One-dimensional K-means with best-of-N trial selection.

Randomness comes from numpy's PCG64 bit generator seeded with the trial seed,
so a given (data, config) reproduces on every platform numpy supports.
Trial ``t`` uses seed ``config.seed + t`` (mod 2**64).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

_U64 = 1 << 64


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 50
    trials: int = 3
    seed: int = 0
    tol: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}")
        object.__setattr__(self, "seed", int(self.seed) % _U64)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    iterations: int
    seed: int
    sse_history: list[float] = field(default_factory=list)
    trial_sses: list[float] = field(default_factory=list)


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("k-means needs at least one datum")
    if not np.all(np.isfinite(x)):
        raise ValueError("k-means data must be finite")
    return x


def _assign(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    # Nearest centroid; a datum exactly between two goes to the smaller one.
    order = np.argsort(c, kind="stable")
    cs = c[order]
    mids = (cs[:-1] + cs[1:]) / 2
    return order[np.searchsorted(mids, x, side="left")]


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    c = np.empty(k)
    c[0] = x[rng.integers(x.size)]
    d2 = (x - c[0]) ** 2
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(x.size, p=d2 / total)
        else:
            idx = rng.integers(x.size)
        c[j] = x[idx]
        d2 = np.minimum(d2, (x - c[j]) ** 2)
    return c


def kmeans_1d(data, config: KMeansConfig) -> KMeansResult:
    """Single Lloyd run with k-means++ seeding (``config.trials`` is ignored)."""
    x = _as_data(data)
    k = config.k
    rng = np.random.Generator(np.random.PCG64(config.seed))
    c = _kmeanspp(x, k, rng)

    history: list[float] = []
    labels = None
    it = 0
    for it in range(1, config.max_iters + 1):
        new_labels = _assign(x, c)
        sums = np.bincount(new_labels, weights=x, minlength=k)
        counts = np.bincount(new_labels, minlength=k)
        nonempty = counts > 0
        c[nonempty] = sums[nonempty] / counts[nonempty]
        resid = (x - c[new_labels]) ** 2
        sse = float(resid.sum())
        history.append(sse)

        # Empty clusters jump to the datum farthest from its centroid.
        moved = False
        if it < config.max_iters:
            for j in np.flatnonzero(~nonempty):
                idx = int(np.argmax(resid))
                if c[j] != x[idx]:
                    moved = True
                c[j] = x[idx]
                resid[idx] = 0.0

        unchanged = labels is not None and np.array_equal(labels, new_labels)
        labels = new_labels
        if moved:
            continue
        if unchanged or sse == 0.0:
            break
        if len(history) > 1 and history[-2] - sse <= config.tol * history[-2]:
            break

    order = np.argsort(c, kind="stable")
    rank = np.empty(k, dtype=np.intp)
    rank[order] = np.arange(k)
    return KMeansResult(
        centroids=c[order],
        assignments=rank[labels],
        sse=history[-1],
        iterations=it,
        seed=config.seed,
        sse_history=history,
    )


def kmeans_best_of_trials(data, config: KMeansConfig, workers: int | None = None) -> KMeansResult:
    """Run ``config.trials`` seeded runs and keep the lowest SSE (first wins ties)."""
    x = _as_data(data)
    configs = [
        KMeansConfig(k=config.k, max_iters=config.max_iters, trials=1,
                     seed=(config.seed + t) % _U64, tol=config.tol)
        for t in range(config.trials)
    ]
    if workers and workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda cfg: kmeans_1d(x, cfg), configs))
    else:
        runs = [kmeans_1d(x, cfg) for cfg in configs]
    sses = [r.sse for r in runs]
    best = runs[int(np.argmin(sses))]
    best.trial_sses = sses
    return best


def optimal_1d_sse(data, k: int) -> float:
    """Globally optimal SSE of partitioning ``data`` into at most ``k`` groups.

    Exact dynamic program over contiguous runs of the sorted data,
    O(n**2 * k) time.
    """
    x = np.sort(_as_data(data))
    n = x.size
    if k >= n:
        return 0.0
    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])

    def cost(i, j):
        # SSE of x[i:j] around its mean, i < j (vectorised over i)
        m = j - i
        seg = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - seg * seg / m, 0.0)

    best = np.full(n + 1, np.inf)
    best[1:] = cost(np.zeros(n, dtype=int), np.arange(1, n + 1))
    best[0] = 0.0
    for _ in range(2, k + 1):
        nxt = best.copy()
        for j in range(2, n + 1):
            i = np.arange(1, j)
            nxt[j] = min(best[j], float(np.min(best[i] + cost(i, j))))
        best = nxt
    return float(best[n])
