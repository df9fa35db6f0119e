"""Command-line interface: ``dfsq genset|quantize|bench|ablate|psnr``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, tensor_io
from .clustering import KMeansConfig
from .metrics import compare_images
from .pipeline import SELECTIONS, QuantMode, calibrate_points, quantize_activation_tensor
from .subset import DEFAULT_BUDGET
from .universal_set import (
    DEFAULT_SETTING,
    SETTINGS,
    UniversalSet,
    UniversalSetConfig,
    builtin_setting,
    generate_universal_set,
    load_config,
    verify_hardware_friendly,
)

CALIB_SAMPLES = 32


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_universal(path: str | None, setting: str | None) -> UniversalSet:
    """A set file is either a JSON array of points or a word-set config object."""
    if path is None:
        return generate_universal_set(builtin_setting(setting or DEFAULT_SETTING))
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        return generate_universal_set(UniversalSetConfig.from_dict(doc))
    return UniversalSet(np.asarray(sorted(set(float(v) for v in doc))))


def cmd_genset(args) -> int:
    cfg = load_config(args.config) if args.config else builtin_setting(args.setting)
    uset = generate_universal_set(cfg)
    hw = verify_hardware_friendly(uset, cfg)
    if args.out:
        uset.to_json(args.out)
    if args.csv:
        uset.to_csv(args.csv)
    print(f"{len(uset)} points")
    if hw.passed:
        print(f"hardware-friendly: pass ({hw.checked} points decomposed into {cfg.divisor} words)")
    else:
        print(f"hardware-friendly: FAIL at {hw.violations}")
    return 0 if hw.passed else 1


def cmd_quantize(args) -> int:
    x = tensor_io.read_tensor(args.inp)
    universal = _load_universal(args.set, args.setting)
    mode = QuantMode(channel_wise=not args.layer_wise, normalized=not args.no_norm,
                     selection=args.mode, budget=args.budget)
    kcfg = KMeansConfig(k=1 << args.bits, max_iters=args.max_iters, trials=args.trials, seed=args.seed)
    calibrated = None
    if args.mode == "static":
        if not args.calib:
            raise UsageError("--mode static needs --calib")
        calib = tensor_io.read_tensor(args.calib)[: args.calib_samples]
        calibrated = calibrate_points(calib, universal, args.bits, mode, kcfg)
    out, report = quantize_activation_tensor(x, universal, args.bits, mode, kcfg,
                                             calibrated=calibrated, workers=args.workers)
    tensor_io.write_tensor(out, args.out)
    report_path = args.report or f"{args.out}.json"
    report.to_json(report_path, include_timing=not args.no_timing)
    print(f"total_mse {report.total_mse:.6g}  max_channel_mse {report.max_channel_mse:.6g}  "
          f"report {report_path}")
    return 0


def cmd_bench(args) -> int:
    universal = _load_universal(args.set, args.setting) if (args.set or args.setting) else None
    records = bench.run_bench(sizes=args.sizes, bits=args.bits, N=args.N, seed=args.seed,
                              repeats=args.repeats, warmup=args.warmup, budget=args.budget,
                              universal=universal)
    if args.out:
        bench.write_bench_csv(records, args.out)
    else:
        bench.write_bench_csv(records, sys.stdout)
    for b in args.bits:
        pts = [(r.n, r.wall_time_ms) for r in records if r.method == "fast" and r.b == b and r.feasible]
        if len(pts) >= 3:
            slope, icpt, r2 = bench.linear_r2(*zip(*pts))
            print(f"# b={b}: fast time ~ {icpt:.3f} + {slope:.5f}*n ms, R^2 {r2:.3f}", file=sys.stderr)
    ratios = bench.loss_ratios(records)
    if ratios:
        ok = sum(v <= 1.25 for v in ratios.values())
        print(f"# loss ratio fast/exhaustive <= 1.25 on {ok}/{len(ratios)} feasible cells", file=sys.stderr)
    return 0


def cmd_ablate(args) -> int:
    data = tensor_io.read_tensor(args.inp) if args.inp else None
    rows = bench.run_ablation(bits=args.bits, shape=tuple(args.shape), seed=args.seed, data=data,
                              workers=args.workers)
    if args.out:
        bench.write_ablation_csv(rows, args.out)
    print(f"{'setting':<10} {'|U|':>5} {'b':>2} {'mse':>12}")
    for r in rows:
        mse = "infeasible" if r.mse is None else f"{r.mse:.6g}"
        print(f"{r.setting:<10} {r.universal_size:>5} {r.b:>2} {mse:>12}")
    return 0


def cmd_psnr(args) -> int:
    a = tensor_io.read_image(args.ref)
    b = tensor_io.read_image(args.test)
    if args.shave < 0 or 2 * args.shave >= min(a.height, a.width):
        raise UsageError(f"--shave {args.shave} must be below half of each image dimension")
    print(json.dumps(compare_images(a, b, args.shave).to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dfsq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("genset", help="generate a universal set and check it decomposes into word shifts")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--setting", choices=SETTINGS, default=DEFAULT_SETTING, help="built-in word sets")
    src.add_argument("--config", help="JSON word-set config {\"word_sets\": [...], \"include_negatives\": true}")
    g.add_argument("--out", help="write the points as a JSON array")
    g.add_argument("--csv", help="write the points as CSV, one per line")
    g.set_defaults(func=cmd_genset)

    q = sub.add_parser("quantize", help="fake-quantize a tensor file")
    q.add_argument("--in", dest="inp", required=True, help="input tensor (DFSQTNSR)")
    q.add_argument("--out", required=True, help="output tensor path")
    q.add_argument("--bits", type=int, default=4, help="bit-width b (2**b points)")
    q.add_argument("--set", help="universal set JSON (point array or word-set config)")
    q.add_argument("--setting", choices=SETTINGS, help=f"built-in setting when --set is absent (default {DEFAULT_SETTING})")
    q.add_argument("--mode", choices=SELECTIONS, default="fast", help="point selection strategy")
    q.add_argument("--seed", type=int, default=0, help="base K-means seed")
    q.add_argument("--trials", type=int, default=3, help="K-means runs per channel")
    q.add_argument("--max-iters", type=int, default=50, help="Lloyd iteration cap")
    q.add_argument("--layer-wise", action="store_true", help="pool all channels of a sample")
    q.add_argument("--no-norm", action="store_true", help="skip mean/scale normalization")
    q.add_argument("--calib", help="calibration tensor for --mode static")
    q.add_argument("--calib-samples", type=int, default=CALIB_SAMPLES, help="calibration samples to use")
    q.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max combinations for exhaustive mode")
    q.add_argument("--workers", type=int, default=1, help="threads for channel-parallel quantization")
    q.add_argument("--report", help="JSON report path (default: <out>.json)")
    q.add_argument("--no-timing", action="store_true", help="omit wall_time_ms from the report")
    q.set_defaults(func=cmd_quantize)

    b = sub.add_parser("bench", help="time fast vs exhaustive point selection, CSV output")
    b.add_argument("--sizes", type=_int_list, default=[8, 12, 16, 20, 107], help="universal set sizes n")
    b.add_argument("--bits", type=_int_list, default=[2, 3], help="bit-widths")
    b.add_argument("--N", type=int, default=4096, help="values per channel")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeats", type=int, default=5, help="timed runs per cell (median reported)")
    b.add_argument("--warmup", type=int, default=1)
    b.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max exhaustive combinations")
    b.add_argument("--set", help="universal set to subsample (default: full setting3)")
    b.add_argument("--setting", choices=SETTINGS)
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("ablate", help="quantization MSE for each built-in word-set setting")
    a.add_argument("--bits", type=_int_list, default=[3, 4, 6, 8])
    a.add_argument("--shape", type=_int_list, default=[2, 8, 32, 32], help="synthetic tensor shape B,C,H,W")
    a.add_argument("--in", dest="inp", help="use this tensor instead of synthetic data")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--out", help="CSV path")
    a.set_defaults(func=cmd_ablate)

    m = sub.add_parser("psnr", help="PSNR/SSIM on the luma channel of two P5/P6 images")
    m.add_argument("--ref", required=True)
    m.add_argument("--test", required=True)
    m.add_argument("--shave", type=int, default=0, help="border pixels excluded on every side")
    m.set_defaults(func=cmd_psnr)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))  # exits 2
    except (OSError, ValueError) as e:
        print(f"dfsq {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
