"""Universal sets of candidate quantization points.

A universal set is built from a handful of *word sets*.  Every element of a
word set is either 0 or a power of two ``2**k`` with ``k <= 0``.  Each
candidate is the average of one element drawn from every word set, so a
multiply by a candidate costs one shift per word set plus an adder tree
(the division by the number of word sets can be folded into the words).

Values are kept exact: sums are integers in units of ``2**-MAX_SHIFT`` and
deduplication happens on those integers, never with a tolerance.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_SHIFT = 32

SETTINGS = ("setting1", "setting2", "setting3", "setting4")
DEFAULT_SETTING = "setting3"


class WordSetError(ValueError):
    """A word-set element is not 0 or a power of two in [2**-32, 1]."""


def _element_units(value: float, set_index: int) -> int:
    """Return ``value`` as an integer multiple of ``2**-MAX_SHIFT``."""
    v = float(value)
    if v == 0.0:
        return 0
    if not math.isfinite(v) or v < 0:
        raise WordSetError(f"word set {set_index}: element {value!r} is not 0 or a power of two")
    mantissa, exponent = math.frexp(v)  # v = mantissa * 2**exponent, mantissa in [0.5, 1)
    k = exponent - 1
    if mantissa != 0.5 or not (-MAX_SHIFT <= k <= 0):
        raise WordSetError(
            f"word set {set_index}: element {value!r} is not 2**k with {-MAX_SHIFT} <= k <= 0"
        )
    return 1 << (MAX_SHIFT + k)


@dataclass(frozen=True)
class UniversalSetConfig:
    word_sets: tuple[tuple[float, ...], ...]
    include_negatives: bool = True

    def __post_init__(self):
        ws = tuple(tuple(float(e) for e in s) for s in self.word_sets)
        object.__setattr__(self, "word_sets", ws)
        self.validate()

    @property
    def divisor(self) -> int:
        return len(self.word_sets)

    def validate(self) -> None:
        if not self.word_sets:
            raise WordSetError("at least one word set is required")
        for i, s in enumerate(self.word_sets):
            if not s:
                raise WordSetError(f"word set {i} is empty")
            units = [_element_units(e, i) for e in s]
            if len(set(units)) != len(units):
                raise WordSetError(f"word set {i} has duplicate elements: {list(s)}")

    def word_units(self) -> list[list[int]]:
        return [[_element_units(e, i) for e in s] for i, s in enumerate(self.word_sets)]

    @classmethod
    def from_dict(cls, d: dict) -> "UniversalSetConfig":
        return cls(word_sets=d["word_sets"], include_negatives=bool(d.get("include_negatives", True)))

    def to_dict(self) -> dict:
        return {"word_sets": [list(s) for s in self.word_sets], "include_negatives": self.include_negatives}


def load_config(path) -> UniversalSetConfig:
    with open(path) as f:
        return UniversalSetConfig.from_dict(json.load(f))


@dataclass(frozen=True, eq=False)
class UniversalSet:
    """Sorted candidate points.

    ``numerators[i]`` is the signed word sum behind ``points[i]`` in units of
    ``2**-MAX_SHIFT`` and ``decompositions[i]`` holds the index of the chosen
    element in each word set.  Both are ``None`` for sets not produced by
    :func:`generate_universal_set`.
    """

    points: np.ndarray
    divisor: int = 1
    numerators: tuple[int, ...] | None = None
    decompositions: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).ravel()
        if pts.size and np.any(np.diff(pts) <= 0):
            raise ValueError("universal set points must be strictly ascending")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def __iter__(self):
        return iter(self.points.tolist())

    def __contains__(self, value) -> bool:
        i = np.searchsorted(self.points, value)
        return bool(i < self.points.size and self.points[i] == value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UniversalSet):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def subsample(self, n: int) -> "UniversalSet":
        """``n`` points at evenly spaced ranks, endpoints included."""
        if not 1 <= n <= len(self):
            raise ValueError(f"cannot take {n} points from a set of {len(self)}")
        idx = np.unique(np.round(np.linspace(0, len(self) - 1, n)).astype(int))
        return UniversalSet(self.points[idx])

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.points.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            for p in self.points.tolist():
                w.writerow([repr(p)])

    @classmethod
    def from_json(cls, path) -> "UniversalSet":
        data = json.loads(Path(path).read_text())
        return cls(np.asarray(sorted(set(float(x) for x in data))))


def _sum_table(config: UniversalSetConfig) -> dict[int, tuple[int, ...]]:
    """Map each achievable word sum to the lexicographically first index choice."""
    units = config.word_units()
    table: dict[int, tuple[int, ...]] = {}
    for choice in itertools.product(*(range(len(u)) for u in units)):
        s = sum(u[j] for u, j in zip(units, choice))
        table.setdefault(s, choice)
    return table


def _to_value(numerator: int, divisor: int) -> float:
    # true division on ints is correctly rounded
    return numerator / (divisor << MAX_SHIFT)


def generate_universal_set(config: UniversalSetConfig) -> UniversalSet:
    table = _sum_table(config)
    m = config.divisor
    nums = set(table)
    if config.include_negatives:
        nums |= {-s for s in table}
    ordered = sorted(nums)
    decomps = tuple(table[abs(s)] for s in ordered)
    return UniversalSet(
        points=np.array([_to_value(s, m) for s in ordered], dtype=np.float64),
        divisor=m,
        numerators=tuple(ordered),
        decompositions=decomps,
    )


# (word sets, exponent gap): word set j is {1, 2**-(j+1), 2**-(j+1+gap), 0}
_SETTING_SHAPES = {
    "setting1": (2, 2),
    "setting2": (3, 2),
    "setting3": (4, 4),
    "setting4": (5, 5),
}


def builtin_setting(name: str) -> UniversalSetConfig:
    key = name.lower()
    if key not in _SETTING_SHAPES:
        raise ValueError(f"unknown setting {name!r}; valid names: {', '.join(SETTINGS)}")
    count, gap = _SETTING_SHAPES[key]
    word_sets = [(1.0, 2.0 ** -(j + 1), 2.0 ** -(j + 1 + gap), 0.0) for j in range(count)]
    return UniversalSetConfig(word_sets=tuple(word_sets), include_negatives=True)


@dataclass
class HardwareReport:
    passed: bool
    checked: int
    decompositions: dict[float, tuple[float, ...]]
    violations: list[float]


def verify_hardware_friendly(uset: UniversalSet, config: UniversalSetConfig) -> HardwareReport:
    """Check every point is (±) a word sum divided by the number of word sets.

    Each point is looked up in the table of achievable sums (built once), and
    the returned decomposition is re-checked with exact integer arithmetic.
    """
    table = _sum_table(config)
    m = config.divisor
    by_value = {_to_value(s, m): s for s in table}
    units = config.word_units()
    decomps: dict[float, tuple[float, ...]] = {}
    bad: list[float] = []
    for p in uset.points.tolist():
        s = by_value.get(abs(p))
        if s is None or (p < 0 and not config.include_negatives):
            bad.append(p)
            continue
        choice = table[s]
        assert sum(u[j] for u, j in zip(units, choice)) == s
        decomps[p] = tuple(config.word_sets[i][j] for i, j in enumerate(choice))
    return HardwareReport(passed=not bad, checked=len(uset), decompositions=decomps, violations=bad)
