# Picking 2^b points: K-means snapping versus brute force
#
# The exhaustive search tries every subset of the universal set and is only
# usable for small sets. The fast path clusters the data and snaps each
# centroid to its nearest unused point.

import math
import time

import numpy as np

from dfsq import (
    BudgetExceeded,
    KMeansConfig,
    builtin_setting,
    generate_universal_set,
    quantization_sse,
    select_points_exhaustive,
    select_points_fast,
)
from dfsq.bench import normalized_channel

universe = generate_universal_set(builtin_setting("setting3")).subsample(12)
print("12-point universe:", np.round(universe.points, 4))

x = normalized_channel(4096, seed=1)

t0 = time.perf_counter()
fast = select_points_fast(x, universe, 2, KMeansConfig(k=4, seed=0))
t_fast = time.perf_counter() - t0

t0 = time.perf_counter()
best, best_loss = select_points_exhaustive(x, universe, 2, return_loss=True)
t_exh = time.perf_counter() - t0

print(f"fast       {fast.points}  SSE {quantization_sse(x, fast):.3f}  {t_fast * 1e3:.1f} ms")
print(f"exhaustive {best.points}  SSE {best_loss:.3f}  {t_exh * 1e3:.1f} ms")

# How many subsets would brute force need on bigger sets?
for n, b in [(12, 2), (20, 3), (107, 4)]:
    print(f"C({n}, {1 << b}) = {math.comb(n, 1 << b):.4g}")

# The exhaustive search refuses work beyond its budget instead of hanging.
big = generate_universal_set(builtin_setting("setting3")).subsample(107)
try:
    select_points_exhaustive(x, big, 4)
except BudgetExceeded as err:
    print("refused:", err)

# The fast path is happy with the full set.
print("fast on 107 points, b=4:", select_points_fast(x, big, 4).points)
