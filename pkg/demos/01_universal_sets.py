# Building universal sets from power-of-two word sets
#
# Every candidate quantization point is the average of one element per word
# set, so a product with any such point costs a handful of shifts and adds.

import numpy as np

from dfsq import UniversalSetConfig, builtin_setting, generate_universal_set, verify_hardware_friendly

# A tiny hand-made configuration first: two word sets, {1, 0} and {1, 0.5, 0}.
cfg = UniversalSetConfig(word_sets=((1.0, 0.0), (1.0, 0.5, 0.0)))
tiny = generate_universal_set(cfg)
print("tiny set:", tiny.points)

# Each point remembers which word elements produced it (negatives are mirrored).
for p, idx in zip(tiny.points, tiny.decompositions):
    if p >= 0:
        words = [ws[i] for ws, i in zip(cfg.word_sets, idx)]
        print(f"{p:+.3f} = mean of {words}")

# The built-in settings grow quickly with the number of word sets.
for name in ("setting1", "setting2", "setting3", "setting4"):
    u = generate_universal_set(builtin_setting(name))
    print(f"{name}: {len(u):5d} points, smallest positive step {u.points[u.points > 0].min():.3e}")

# Points cluster near zero, which suits bell-shaped activations.
u3 = generate_universal_set(builtin_setting("setting3"))
hist, edges = np.histogram(u3.points, bins=8, range=(-1, 1))
for lo, hi, h in zip(edges, edges[1:], hist):
    print(f"[{lo:+.2f}, {hi:+.2f}) {'#' * (h // 4)}")

# Double-check the shift-and-add property against the word sets.
report = verify_hardware_friendly(u3, builtin_setting("setting3"))
print("hardware check:", "pass" if report.passed else report.violations[:3])
