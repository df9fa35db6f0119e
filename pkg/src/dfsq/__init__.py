"""Distribution-flexible subset quantization (DFSQ) for activations.

Per-channel normalization, subset quantization onto points chosen from an
additive power-of-two universal set by K-means, min-max baselines, and
image/tensor quality metrics.
"""

from .clustering import KMeansConfig, KMeansResult, kmeans_1d, kmeans_best_of_trials, optimal_1d_sse
from .metrics import MetricReport, compare_images, psnr_y, quant_error_stats, rgb_to_y, ssim_y
from .pipeline import (
    ChannelQuantParams,
    QuantMode,
    QuantReport,
    calibrate_points,
    denormalize_channel,
    normalize_channel,
    quantize_activation_tensor,
)
from .subset import (
    BudgetExceeded,
    QuantPointSet,
    combination_count,
    quantization_sse,
    select_points_exhaustive,
    select_points_fast,
    sq_quantize,
)
from .tensor_io import Image, read_image, read_tensor, write_image, write_tensor
from .uniform import (
    WeightQuantParams,
    dequantize_weight_kernel,
    minmax_uniform_activation,
    quantize_weight_kernel,
)
from .universal_set import (
    UniversalSet,
    UniversalSetConfig,
    builtin_setting,
    generate_universal_set,
    verify_hardware_friendly,
)

__version__ = "0.1.0"
