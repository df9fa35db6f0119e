# Tensor files, images and quality metrics

import tempfile
from pathlib import Path

import numpy as np

from dfsq import tensor_io
from dfsq.metrics import compare_images, quant_error_stats
from dfsq.tensor_io import Image

tmp = Path(tempfile.mkdtemp())

# Tensors round-trip exactly through the binary format.
t = np.random.default_rng(0).standard_normal((1, 3, 4, 4)).astype(np.float32)
tensor_io.write_tensor(t, tmp / "t.tnsr")
back = tensor_io.read_tensor(tmp / "t.tnsr")
print("round trip exact:", np.array_equal(t, back), "file bytes:", (tmp / "t.tnsr").stat().st_size)

# Quantization error summary per channel.
stats = quant_error_stats(t, np.round(t * 4) / 4)
print("MSE", stats.mse, "per channel", np.round(stats.channel_mse, 5))

# A synthetic RGB gradient and a noisy copy, compared on the luma channel.
h, w = 64, 64
yy, xx = np.mgrid[0:h, 0:w]
ref = np.stack([xx * 4, yy * 4, (xx + yy) * 2], axis=-1).clip(0, 255).astype(np.uint8)
noise = np.random.default_rng(1).integers(-6, 7, size=ref.shape)
test = (ref.astype(int) + noise).clip(0, 255).astype(np.uint8)

tensor_io.write_image(Image(ref), tmp / "ref.ppm")
tensor_io.write_image(Image(test), tmp / "test.ppm")
r = compare_images(tensor_io.read_image(tmp / "ref.ppm"), tensor_io.read_image(tmp / "test.ppm"), shave=4)
print(r.to_dict())

# Identical images give infinite PSNR and SSIM of one.
print(compare_images(Image(ref), Image(ref)).to_dict())
