# Channel-wise activation quantization and a small ablation
#
# Each channel is centred and scaled into [-1, 1], quantized onto points
# chosen from the universal set, then mapped back.

import numpy as np

from dfsq import QuantMode, builtin_setting, generate_universal_set, minmax_uniform_activation, quantize_activation_tensor
from dfsq.bench import heavy_tailed_tensor, run_ablation

x = heavy_tailed_tensor((2, 8, 32, 32), seed=3)
print("input", x.shape, "range", float(x.min()), float(x.max()))

universe = generate_universal_set(builtin_setting("setting3"))

# Four ways to quantize the same tensor at 4 bits.
modes = {
    "channel-wise": QuantMode(),
    "layer-wise": QuantMode(channel_wise=False),
    "no normalization": QuantMode(normalized=False),
}
for label, mode in modes.items():
    _, report = quantize_activation_tensor(x, universe, 4, mode)
    print(f"{label:18s} MSE {report.total_mse:.4g}")

mm = minmax_uniform_activation(x, 4)
print(f"{'uniform min-max':18s} MSE {np.mean((mm - x) ** 2):.4g}")

# One channel's report, for a closer look.
_, report = quantize_activation_tensor(x, universe, 4, QuantMode())
rec = report.channels[0]
print(f"sample {rec.sample} channel {rec.channel}: mean {rec.mean:.3f} scale {rec.scale:.3f}")
print("  chosen points", rec.points)

# Larger universal sets help, as long as they hold 2^b points at all.
for row in run_ablation(bits=(3, 4, 6), shape=(2, 8, 32, 32), seed=3):
    mse = "n/a (set too small)" if row.mse is None else f"{row.mse:.4g}"
    print(f"{row.setting} b={row.b}: {mse}")
