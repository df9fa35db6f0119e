"""Synthetic activations, the selection-cost benchmark and the word-set ablation."""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .clustering import KMeansConfig
from .pipeline import QuantMode, normalize_channel, quantize_activation_tensor
from .subset import (
    DEFAULT_BUDGET,
    quantization_sse,
    select_points_exhaustive,
    select_points_fast,
)
from .universal_set import (
    DEFAULT_SETTING,
    SETTINGS,
    UniversalSet,
    builtin_setting,
    generate_universal_set,
)

BENCH_FIELDS = ("method", "n", "b", "N", "wall_time_ms", "combinations", "loss")
ABLATION_FIELDS = ("setting", "universal_size", "b", "mse", "status")
INFEASIBLE = "infeasible"


def synthetic_activations(shape=(2, 8, 32, 32), seed: int = 0, outlier_rate: float = 0.01) -> np.ndarray:
    """Activations whose distribution changes from channel to channel and sample to sample.

    Each (sample, channel) map is a 1-3 component Gaussian mixture with its
    own offsets and widths, multiplied by a per-sample gain, plus a sparse
    sprinkling of signed lognormal outliers.
    """
    B, C, H, W = shape
    rng = np.random.default_rng(seed)
    n = H * W
    out = np.empty(shape, dtype=np.float32)
    gains = rng.lognormal(0.0, 0.8, size=B)
    for i in range(B):
        for c in range(C):
            m = int(rng.integers(1, 4))
            comp = rng.integers(m, size=n)
            means = rng.normal(0.0, 2.0, size=m)
            widths = rng.uniform(0.1, 1.5, size=m)
            x = rng.normal(means[comp], widths[comp])
            hit = rng.random(n) < outlier_rate
            x[hit] += rng.choice([-1.0, 1.0], size=hit.sum()) * rng.lognormal(1.5, 0.5, size=hit.sum())
            out[i, c] = (gains[i] * x).reshape(H, W)
    return out


def heavy_tailed_tensor(shape=(2, 8, 32, 32), seed: int = 3) -> np.ndarray:
    """Lognormal activations shifted by their median, with per-channel shape and gain."""
    B, C, H, W = shape
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.4, 1.2, size=(B, C, 1, 1))
    gain = rng.lognormal(0.0, 1.0, size=(B, C, 1, 1))
    shift = rng.normal(0.0, 1.0, size=(B, C, 1, 1))
    z = rng.lognormal(0.0, sigma, size=shape)
    x = gain * (z - 1.0) + shift  # median of lognormal(0, s) is 1
    return x.astype(np.float32)


def normalized_channel(n: int, seed: int) -> np.ndarray:
    """One synthetic channel of ``n`` values, normalized to [-1, 1]."""
    side = int(math.ceil(math.sqrt(n)))
    x = synthetic_activations((1, 1, side, side), seed=seed).ravel()[:n]
    return normalize_channel(x)[0]


@dataclass
class BenchRecord:
    method: str
    n: int
    b: int
    N: int
    wall_time_ms: float | None
    combinations: int
    loss: float | None

    @property
    def feasible(self) -> bool:
        return self.wall_time_ms is not None


def _median_ms(fn, repeats: int, warmup: int):
    for _ in range(warmup):
        fn()
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times), result


def run_bench(
    sizes=(8, 12, 16, 20, 107),
    bits=(2, 3),
    N: int = 4096,
    seed: int = 0,
    repeats: int = 5,
    warmup: int = 1,
    exhaustive_repeats: int = 1,
    budget: int = DEFAULT_BUDGET,
    universal: UniversalSet | None = None,
    exhaustive: bool = True,
) -> list[BenchRecord]:
    """Time fast and exhaustive selection on one channel per (n, b) cell.

    Universal sets of size n are evenly ranked subsamples of ``universal``
    (default: the full setting3 set).  Exhaustive cells whose combination
    count exceeds ``budget`` are recorded with no time and no loss.
    """
    base = universal or generate_universal_set(builtin_setting(DEFAULT_SETTING))
    data = normalized_channel(N, seed)
    records = []
    for b in bits:
        k = 1 << b
        for n in sizes:
            u = base.subsample(n)
            count = math.comb(n, k)
            if n < k:
                records.append(BenchRecord("fast", n, b, N, None, count, None))
                records.append(BenchRecord("exhaustive", n, b, N, None, count, None))
                continue
            kcfg = KMeansConfig(k=k, seed=seed)
            ms, pts = _median_ms(lambda: select_points_fast(data, u, b, kcfg), repeats, warmup)
            records.append(BenchRecord("fast", n, b, N, ms, count, quantization_sse(data, pts)))
            if exhaustive and count <= budget:
                ms, pts = _median_ms(lambda: select_points_exhaustive(data, u, b, budget=budget),
                                     exhaustive_repeats, 0)
                records.append(BenchRecord("exhaustive", n, b, N, ms, count, quantization_sse(data, pts)))
            else:
                records.append(BenchRecord("exhaustive", n, b, N, None, count, None))
    return records


def write_bench_csv(records, path_or_file) -> None:
    _write_csv(path_or_file, BENCH_FIELDS, [
        {**asdict(r),
         "wall_time_ms": INFEASIBLE if r.wall_time_ms is None else f"{r.wall_time_ms:.6f}",
         "loss": INFEASIBLE if r.loss is None else repr(r.loss)}
        for r in records
    ])


def loss_ratios(records) -> dict[tuple[int, int], float]:
    """fast/exhaustive loss per (n, b) cell where both ran."""
    fast = {(r.n, r.b): r.loss for r in records if r.method == "fast" and r.feasible}
    exh = {(r.n, r.b): r.loss for r in records if r.method == "exhaustive" and r.feasible}
    out = {}
    for key in fast.keys() & exh.keys():
        f, e = fast[key], exh[key]
        out[key] = 1.0 if f == e else (math.inf if e == 0 else f / e)
    return out


def linear_r2(x, y) -> tuple[float, float, float]:
    """(slope, intercept, R^2) of a least-squares line."""
    fit = stats.linregress(np.asarray(x, float), np.asarray(y, float))
    return fit.slope, fit.intercept, fit.rvalue**2


@dataclass
class AblationRow:
    setting: str
    universal_size: int
    b: int
    mse: float | None
    status: str


def run_ablation(
    settings=SETTINGS,
    bits=(3, 4, 6, 8),
    shape=(2, 8, 32, 32),
    seed: int = 0,
    data: np.ndarray | None = None,
    workers: int | None = None,
) -> list[AblationRow]:
    """Quantization MSE of every (setting, bit-width) pair on the same activations.

    Pairs whose universal set has fewer than 2**b points are reported as
    infeasible rather than skipped.
    """
    x = heavy_tailed_tensor(shape, seed=seed) if data is None else data
    rows = []
    for name in settings:
        u = generate_universal_set(builtin_setting(name))
        for b in bits:
            if len(u) < 1 << b:
                rows.append(AblationRow(name, len(u), b, None, INFEASIBLE))
                continue
            _, rep = quantize_activation_tensor(x, u, b, QuantMode(), KMeansConfig(k=1 << b, seed=seed),
                                                workers=workers)
            rows.append(AblationRow(name, len(u), b, rep.total_mse, "ok"))
    return rows


def write_ablation_csv(rows, path_or_file) -> None:
    _write_csv(path_or_file, ABLATION_FIELDS, [
        {**asdict(r), "mse": "" if r.mse is None else repr(r.mse)} for r in rows
    ])


def _write_csv(path_or_file, fields, rows) -> None:
    if hasattr(path_or_file, "write"):
        w = csv.DictWriter(path_or_file, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as f:
        _write_csv(f, fields, rows)
