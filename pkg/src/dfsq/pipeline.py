"""Activation quantization pipeline: normalize, select points, quantize, de-normalize.

Work is split into groups.  In channel-wise mode a group is one channel of
one sample; in layer-wise mode it is a whole sample.  Every group gets its
own K-means seed derived from ``(seed, sample, channel)``, so results do not
depend on how groups are scheduled across workers.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .clustering import KMeansConfig
from .subset import (
    DEFAULT_BUDGET,
    QuantPointSet,
    select_points_exhaustive,
    select_points_fast,
    sq_quantize,
)
from .universal_set import UniversalSet

SELECTIONS = ("fast", "exhaustive", "static")
_DEGENERATE_SCALE = 1e-12


@dataclass(frozen=True)
class QuantMode:
    channel_wise: bool = True
    normalized: bool = True
    selection: str = "fast"
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}, got {self.selection!r}")


@dataclass
class ChannelQuantParams:
    mean: float
    scale: float
    points: QuantPointSet | None


def _check_finite(x: np.ndarray) -> None:
    bad = ~np.isfinite(x)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite value {x[idx]} at index {idx}")


def normalize_channel(x) -> tuple[np.ndarray, float, float]:
    """Shift to zero mean and divide by the largest absolute deviation.

    The result lies in [-1, 1] with at least one element at +-1.  A channel
    whose deviation is below 1e-12 normalizes to zeros with scale 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot normalize an empty channel")
    _check_finite(x)
    mean = float(x.mean())
    dev = x - mean
    scale = float(np.abs(dev).max())
    if scale < _DEGENERATE_SCALE:
        return np.zeros_like(x), mean, 0.0
    return dev / scale, mean, scale


def denormalize_channel(xq, mean: float, scale: float) -> np.ndarray:
    xq = np.asarray(xq, dtype=np.float64)
    _check_finite(xq)
    if not (np.isfinite(mean) and np.isfinite(scale)):
        raise ValueError("mean and scale must be finite")
    return xq * scale + mean


def channel_seed(base: int, sample: int, channel: int) -> int:
    # -1 marks "all samples" or "all channels"
    ss = np.random.SeedSequence([int(base) % (1 << 64), sample + 1, channel + 1])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ChannelRecord:
    sample: int
    channel: int
    mean: float
    scale: float
    points: list[float]
    mse: float
    sse: float
    kmeans_iterations: int


@dataclass
class QuantReport:
    channels: list[ChannelRecord] = field(default_factory=list)
    total_mse: float = 0.0
    max_channel_mse: float = 0.0
    wall_time_ms: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "channels": [asdict(c) for c in self.channels],
            "total_mse": self.total_mse,
            "max_channel_mse": self.max_channel_mse,
        }
        if include_timing:
            d["wall_time_ms"] = self.wall_time_ms
        return d

    def to_json(self, path=None, include_timing: bool = True) -> str:
        text = json.dumps(self.to_dict(include_timing), indent=2)
        if path is not None:
            with open(path, "w") as f:
                f.write(text + "\n")
        return text


def _check_tensor(t) -> np.ndarray:
    x = np.asarray(t)
    if x.ndim != 4:
        raise ValueError(f"expected a (B, C, H, W) tensor, got shape {x.shape}")
    if x.size == 0:
        raise ValueError("tensor is empty")
    return x


def _select(data, universal, bits, mode, kcfg, seed):
    """Return (points, kmeans iterations) for one group."""
    if mode.selection == "exhaustive":
        return select_points_exhaustive(data, universal, bits, budget=mode.budget), 0
    cfg = KMeansConfig(k=1 << bits, max_iters=kcfg.max_iters, trials=kcfg.trials, seed=seed, tol=kcfg.tol)
    pts, km = select_points_fast(data, universal, bits, cfg, return_kmeans=True)
    return pts, km.iterations


def calibrate_points(
    calib,
    universal: UniversalSet,
    bits: int,
    mode: QuantMode = QuantMode(selection="static"),
    kcfg: KMeansConfig | None = None,
) -> dict[int, QuantPointSet]:
    """Fit point sets once on calibration activations.

    Returns one set per channel index in channel-wise mode, else a single set
    under key -1.  Each calibration sample is normalized on its own before
    pooling.
    """
    x = _check_tensor(calib).astype(np.float64)
    kcfg = kcfg or KMeansConfig(k=1 << bits)
    pick = QuantMode(channel_wise=mode.channel_wise, normalized=mode.normalized,
                     selection="exhaustive" if mode.selection == "exhaustive" else "fast",
                     budget=mode.budget)

    def prep(a):
        return normalize_channel(a)[0] if mode.normalized else a

    out = {}
    if mode.channel_wise:
        for c in range(x.shape[1]):
            pooled = np.concatenate([prep(x[i, c]).ravel() for i in range(x.shape[0])])
            out[c] = _select(pooled, universal, bits, pick, kcfg, channel_seed(kcfg.seed, -1, c))[0]
    else:
        pooled = np.concatenate([prep(x[i]).ravel() for i in range(x.shape[0])])
        out[-1] = _select(pooled, universal, bits, pick, kcfg, channel_seed(kcfg.seed, -1, -1))[0]
    return out


def quantize_activation_tensor(
    t,
    universal: UniversalSet,
    bits: int,
    mode: QuantMode = QuantMode(),
    kcfg: KMeansConfig | None = None,
    calibrated: dict[int, QuantPointSet] | None = None,
    workers: int | None = None,
) -> tuple[np.ndarray, QuantReport]:
    """Fake-quantize a (B, C, H, W) activation tensor.

    ``calibrated`` (from :func:`calibrate_points`) is required when
    ``mode.selection == "static"``.  Output has the input's float dtype
    (float32 for int inputs).
    """
    x = _check_tensor(t)
    out_dtype = x.dtype if np.issubdtype(x.dtype, np.floating) else np.float32
    xd = x.astype(np.float64)
    _check_finite(xd)
    kcfg = kcfg or KMeansConfig(k=1 << bits)
    if mode.selection == "static" and calibrated is None:
        raise ValueError("static selection needs calibrated point sets")
    if 1 << bits > len(universal):
        raise ValueError(f"universal set has {len(universal)} points, {bits}-bit quantization needs {1 << bits}")

    B, C = x.shape[:2]
    groups = [(i, c) for i in range(B) for c in range(C)] if mode.channel_wise else [(i, -1) for i in range(B)]

    def run(group):
        i, c = group
        data = xd[i, c] if c >= 0 else xd[i]
        if mode.normalized:
            xn, mean, scale = normalize_channel(data)
            if scale == 0.0:
                return np.full(data.shape, mean), ChannelQuantParams(mean, 0.0, None), 0
        else:
            xn, mean, scale = data, 0.0, 1.0
        if mode.selection == "static":
            pts, iters = calibrated[c if mode.channel_wise else -1], 0
        else:
            pts, iters = _select(xn.ravel(), universal, bits, mode, kcfg, channel_seed(kcfg.seed, i, c))
        q = sq_quantize(xn, pts)
        y = denormalize_channel(q, mean, scale) if mode.normalized else q
        return y, ChannelQuantParams(mean, scale, pts), iters

    t0 = time.perf_counter()
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, groups))
    else:
        results = [run(g) for g in groups]

    out = np.empty(x.shape, dtype=out_dtype)
    params = {}
    for (i, c), (y, p, iters) in zip(groups, results):
        if c >= 0:
            out[i, c] = y
        else:
            out[i] = y
        params[i, c] = (p, iters)
    wall = (time.perf_counter() - t0) * 1e3

    err = (out.astype(np.float64) - xd) ** 2
    report = QuantReport(wall_time_ms=wall)
    for i in range(B):
        for c in range(C):
            p, iters = params[i, c] if mode.channel_wise else params[i, -1]
            sse = float(err[i, c].sum())
            report.channels.append(ChannelRecord(
                sample=i, channel=c, mean=p.mean, scale=p.scale,
                points=[] if p.points is None else p.points.points.tolist(),
                mse=sse / err[i, c].size, sse=sse, kmeans_iterations=int(iters),
            ))
    report.total_mse = float(err.mean())
    report.max_channel_mse = max(r.mse for r in report.channels)
    return out, report
