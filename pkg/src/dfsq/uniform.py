"""Min-max linear uniform quantizers (weights per kernel, activations per tensor)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def round_half_away(x) -> np.ndarray:
    """Round to nearest integer, halves away from zero (np.round rounds half to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class WeightQuantParams:
    step: float
    zero_point: int
    bits: int
    low: float
    high: float
    degenerate: bool = False

    @property
    def qmax(self) -> int:
        return (1 << self.bits) - 1


def quantize_weight_kernel(w, bits: int) -> tuple[np.ndarray, WeightQuantParams]:
    """Asymmetric min-max quantization of one kernel to integers in [0, 2**b - 1].

    A constant kernel has no usable step; it maps to all-zero integers with
    step 1, zero point 0 and ``degenerate=True``.
    """
    if bits < 2:
        raise ValueError(f"weight bit-width must be >= 2, got {bits}")
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise ValueError("weight kernel must be non-empty and finite")
    lo, hi = float(w.min()), float(w.max())
    qmax = (1 << bits) - 1
    if not hi > lo:
        params = WeightQuantParams(step=1.0, zero_point=0, bits=bits, low=lo, high=hi, degenerate=True)
        return np.zeros(w.shape, dtype=np.int64), params
    s = (hi - lo) / qmax
    z = int(round_half_away(-lo / s))
    q = np.clip(round_half_away(w / s) + z, 0, qmax).astype(np.int64)
    return q, WeightQuantParams(step=s, zero_point=z, bits=bits, low=lo, high=hi)


def dequantize_weight_kernel(wq, params: WeightQuantParams) -> np.ndarray:
    q = np.asarray(wq)
    if q.size and (q.min() < 0 or q.max() > params.qmax):
        raise ValueError(f"quantized weights must lie in [0, {params.qmax}]")
    return params.step * (q.astype(np.float64) - params.zero_point)


def fake_quantize_weights(w, bits: int, axis: int = 0) -> np.ndarray:
    """Kernel-wise fake quantization: one kernel per index along ``axis``."""
    w = np.asarray(w, dtype=np.float64)
    out = np.empty_like(w)
    for k in range(w.shape[axis]):
        sl = [slice(None)] * w.ndim
        sl[axis] = k
        q, p = quantize_weight_kernel(w[tuple(sl)], bits)
        out[tuple(sl)] = w[tuple(sl)] if p.degenerate else dequantize_weight_kernel(q, p)
    return out


@dataclass
class MinMaxReport:
    low: float
    high: float
    step: float
    degenerate: bool


def minmax_uniform_activation(t, bits: int, return_report: bool = False):
    """Per-tensor fake quantization on 2**b levels spanning [min, max].

    The grid is anchored at the tensor minimum, so both extremes are
    reproduced exactly.  Rounding is half-away-from-zero and codes are
    clamped to [0, 2**b - 1] as for weights.  A constant tensor is returned
    unchanged and flagged.
    """
    x = np.asarray(t)
    xd = x.astype(np.float64)
    lo, hi = float(xd.min()), float(xd.max())
    if not hi > lo:
        out, rep = x.copy(), MinMaxReport(lo, hi, 0.0, True)
    else:
        qmax = (1 << bits) - 1
        s = (hi - lo) / qmax
        q = np.clip(round_half_away((xd - lo) / s), 0, qmax)
        out = np.where(q == qmax, hi, lo + s * q).astype(x.dtype)
        rep = MinMaxReport(lo, hi, s, False)
    return (out, rep) if return_report else out
