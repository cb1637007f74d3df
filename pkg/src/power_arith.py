"""
Power-level arithmetic: the floor convention, band sizes P̄^λ, power-level
partitions of integer signals, trims, and vector slicing/concatenation.

Every partition function takes the PowerContext plus levels (never a
precomputed band size), so the same instance description can be re-evaluated
at each P of a sweep.
"""

import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Union

import mpmath as mp
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

Level = Union[Fraction, int, float, str]
IntVector = List[int]

# relative tolerance for snapping P^(λ/2) onto a nearby integer
SNAP_TOLERANCE = 1e-9


def as_level(value: Level) -> Fraction:
    """Parse a level given as Fraction, int, float or a string such as "13/9"."""
    if isinstance(value, Fraction):
        level = value
    elif isinstance(value, bool):
        raise ValueError("boolean is not a level")
    elif isinstance(value, int):
        level = Fraction(value)
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"level must be finite, got {value}")
        # str() keeps 0.1 as 1/10 instead of its binary expansion
        level = Fraction(str(value))
    elif isinstance(value, str):
        level = Fraction(value.strip())
    else:
        raise ValueError(f"cannot interpret {value!r} as a level")
    return level


def positive_part(x: Level) -> Fraction:
    """(x)⁺ = max(x, 0)."""
    x = as_level(x)
    return x if x > 0 else Fraction(0)


def pfloor(x: Union[int, float, Fraction]) -> int:
    """Floor toward zero: ⌊x⌋ for x ≥ 0, the smallest integer ≥ x for x < 0."""
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"pfloor needs a finite input, got {x}")
    return math.trunc(x)


def pfloor_array(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("pfloor needs finite inputs")
    return np.trunc(arr).astype(np.int64)


@lru_cache(maxsize=4096)
def _band(P: float, level: Fraction) -> int:
    if level == 0:
        return 1
    with mp.workdps(60):
        value = mp.power(mp.mpf(P), mp.mpf(level.numerator) / (2 * level.denominator))
        nearest = int(mp.nint(value))
        if nearest >= 1 and abs(value - nearest) < SNAP_TOLERANCE * nearest:
            return nearest
        return int(mp.floor(value))


class PowerContext(BaseModel):
    """Holds the power P; band sizes ⌊P^{λ/2}⌋ are derived and cached."""

    model_config = ConfigDict(frozen=True)

    P: float = Field(gt=0)

    @field_validator("P")
    @classmethod
    def validate_power(cls, v):
        if not math.isfinite(v):
            raise ValueError("P must be finite")
        return v

    @classmethod
    def from_pbar(cls, pbar: int) -> "PowerContext":
        if pbar < 1:
            raise ValueError("P̄ must be at least 1")
        return cls(P=float(pbar) ** 2)

    @property
    def pbar(self) -> int:
        return self.cached_band(1)

    @property
    def log2_pbar(self) -> float:
        return math.log2(self.pbar) if self.pbar > 1 else 0.0

    def cached_band(self, level: Level) -> int:
        return band_size(self, level)


class LevelVector(BaseModel):
    """Ordered band widths λ₁…λ_M in power-level units."""

    model_config = ConfigDict(frozen=True)

    levels: List[Fraction]

    @field_validator("levels", mode="before")
    @classmethod
    def parse_levels(cls, v):
        levels = [as_level(x) for x in v]
        if any(level < 0 for level in levels):
            raise ValueError("power levels must be non-negative")
        return levels

    def __len__(self) -> int:
        return len(self.levels)

    def prefix_sums(self) -> List[Fraction]:
        """[0, λ₁, λ₁+λ₂, …, Σλ]; band i (1-based) spans prefix[i-1]..prefix[i]."""
        sums = [Fraction(0)]
        for level in self.levels:
            sums.append(sums[-1] + level)
        return sums

    @property
    def total(self) -> Fraction:
        return sum(self.levels, Fraction(0))


def band_size(ctx: PowerContext, level: Level) -> int:
    """⌊P^{λ/2}⌋; the alphabet 𝒳_λ is {0, …, band_size − 1}."""
    level = as_level(level)
    if level < 0:
        raise ValueError(f"level must be non-negative, got {level}")
    if ctx.P < 1:
        raise ValueError(f"band sizes need P >= 1, got {ctx.P}")
    return _band(float(ctx.P), level)


def _check_signal(X) -> None:
    if isinstance(X, np.ndarray):
        if X.size and X.min() < 0:
            raise ValueError("signals must be non-negative")
    elif X < 0:
        raise ValueError(f"signals must be non-negative, got {X}")


def part_low(X, ctx: PowerContext, low: Level):
    """(X)_{λ₁}: the bottom λ₁ levels, X − P̄^{λ₁}⌊X/P̄^{λ₁}⌋. Works on ints and integer arrays."""
    _check_signal(X)
    return X % band_size(ctx, low)


def part_window(X, ctx: PowerContext, low: Level, high: Level):
    """(X)^{λ₂}_{λ₁}: the part of X strictly between levels λ₁ and λ₂."""
    low, high = as_level(low), as_level(high)
    if low > high:
        raise ValueError(f"window needs low <= high, got {low} > {high}")
    _check_signal(X)
    if low == high:
        return X * 0
    return (X % band_size(ctx, high)) // band_size(ctx, low)


def trim(x, ctx: PowerContext, gamma: Level, delta: Level):
    """(x)^γ_δ, which is the zero signal when γ ≤ δ."""
    gamma, delta = as_level(gamma), as_level(delta)
    if gamma <= delta:
        return x * 0
    return part_window(x, ctx, delta, gamma)


def composed_capacity(ctx: PowerContext, levels: LevelVector) -> int:
    return math.prod(band_size(ctx, level) for level in levels.levels)


def decompose(X: int, ctx: PowerContext, levels: LevelVector) -> List[int]:
    """
    Split X into M band values under the compositional layout
    X = x₁ + x₂·P̄^{λ₁} + x₃·P̄^{λ₁}P̄^{λ₂} + …, each xᵢ ∈ 𝒳_{λᵢ}.
    """
    _check_signal(X)
    capacity = composed_capacity(ctx, levels)
    if X >= capacity:
        raise ValueError(f"X={X} outside the composed capacity {capacity}")
    bands = []
    for level in levels.levels:
        size = band_size(ctx, level)
        bands.append(X % size)
        X //= size
    return bands


def compose(bands: Sequence[int], ctx: PowerContext, levels: LevelVector) -> int:
    if len(bands) != len(levels):
        raise ValueError("one band value per level is required")
    X, scale = 0, 1
    for value, level in zip(bands, levels.levels):
        size = band_size(ctx, level)
        if not 0 <= value < size:
            raise ValueError(f"band value {value} outside 𝒳_{level}")
        X += value * scale
        scale *= size
    return X


def concat(V: Sequence[int], W: Sequence[int]) -> IntVector:
    """V▽W."""
    return list(V) + list(W)


def rotate(V: Sequence[int], m: int, n: int) -> IntVector:
    """V_{m,n}: n consecutive entries starting after position m, wrapping around."""
    k = len(V)
    if not (0 <= m < k and 0 <= n < k):
        raise ValueError(f"rotate needs 0 <= m, n < {k}, got m={m}, n={n}")
    V = list(V)
    if m + n <= k:
        return V[m:m + n]
    return V[m:] + V[:m + n - k]
