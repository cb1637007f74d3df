"""
Channel coefficients and floor-linear combinations.

CoefficientSampler draws bounded-density coefficients from a seeded numpy
stream, lincomb evaluates L / Lᵇ / L^{γδ} on integer signals, and the MIMO
helpers build the deterministic two-user interference channel: the band
split of each transmitter, the trim exponents derived from (α, β), and
rejection sampling of non-degenerate channel matrices.
"""

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import stats

from src.data_models import CoefficientFamily, CoefficientKind, CombinationSpec, MimoIcConfig, SamplerConfig, TermSpec
from src.exceptions import NonDegeneracyError
from src.power_arith import PowerContext, as_level, band_size, part_window, pfloor, positive_part, trim
from src.utils.logger import app_logger

NONDEGENERACY_BUDGET = 1000


class CoefficientSampler:
    """Seeded source of bounded-density coefficients. One owner per instance; use spawn() for workers."""

    def __init__(self, config: Optional[SamplerConfig] = None, stream: Optional[Tuple[int, ...]] = None):
        self.config = config or SamplerConfig()
        self.stream = tuple(stream or ())
        self.rng = np.random.default_rng(np.random.SeedSequence(self.config.seed, spawn_key=self.stream))

    @property
    def delta1(self) -> float:
        return self.config.delta1

    @property
    def delta2(self) -> float:
        return self.config.delta2

    @property
    def f_max(self) -> float:
        return self.config.f_max

    def spawn(self, *key: int) -> "CoefficientSampler":
        return CoefficientSampler(self.config, self.stream + tuple(key))

    def draw(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError(f"count must be non-negative, got {count}")
        magnitude = self.rng.uniform(self.delta1, self.delta2, size=count)
        if self.config.family == CoefficientFamily.UNIFORM_SIGNED:
            return magnitude * self.rng.choice(np.array([-1.0, 1.0]), size=count)
        return magnitude


def draw_coefficients(sampler: CoefficientSampler, count: int) -> List[float]:
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    return sampler.draw(count).tolist()


def support_check(sampler: CoefficientSampler, draws: int = 100_000) -> Dict[str, float]:
    """Mass outside [Δ₁, Δ₂] in magnitude plus a Kolmogorov–Smirnov test against the family's magnitude law."""
    magnitude = np.abs(sampler.draw(draws))
    outside = int(np.count_nonzero((magnitude < sampler.delta1) | (magnitude > sampler.delta2)))
    ks = stats.kstest(magnitude, "uniform", args=(sampler.delta1, sampler.delta2 - sampler.delta1))
    return {"draws": draws, "outside": outside, "ks_statistic": float(ks.statistic), "p_value": float(ks.pvalue)}


class FixedCoefficients(BaseModel):
    delta2: float = SamplerConfig.model_fields["delta2"].default
    values: List[float]

    @field_validator("values")
    @classmethod
    def validate_values(cls, v, info):
        bound = info.data.get("delta2", SamplerConfig.model_fields["delta2"].default)
        if any(abs(h) > bound for h in v):
            raise ValueError(f"fixed coefficients must satisfy |h| <= {bound}")
        return v


def term_level(term: TermSpec, source_levels: Sequence) -> Fraction:
    """η of a term: the width of its band selector, or the level of the whole source signal."""
    if term.band is not None:
        return term.band[1] - term.band[0]
    return as_level(source_levels[term.source])


def trim_width(term: TermSpec, eta: Fraction) -> Fraction:
    if term.trim is None:
        return eta
    gamma, delta = term.trim
    return positive_part(gamma - delta)


def term_value(term: TermSpec, x, ctx: PowerContext):
    """Band selection then trim; works for ints and integer arrays."""
    if term.band is not None:
        x = part_window(x, ctx, term.band[0], term.band[1])
    if term.trim is not None:
        x = trim(x, ctx, term.trim[0], term.trim[1])
    return x


def lincomb(spec: CombinationSpec, signals: Sequence[int], coeffs: Sequence[float], ctx: PowerContext) -> int:
    """Σᵢ pfloor(cᵢ·(xᵢ)^{γᵢ}_{δᵢ}) with one realized coefficient per term."""
    if len(coeffs) != len(spec.terms):
        raise ValueError(f"{len(spec.terms)} terms but {len(coeffs)} coefficients")
    total = 0
    for term, c in zip(spec.terms, coeffs):
        if term.source >= len(signals):
            raise ValueError(f"term references source {term.source} but only {len(signals)} signals given")
        total += pfloor(c * term_value(term, signals[term.source], ctx))
    return total


def realize_coefficients(spec: CombinationSpec, sampler: CoefficientSampler) -> List[float]:
    """Fixed terms keep their value, bounded-density terms get a fresh draw."""
    fresh = iter(sampler.draw(sum(t.kind == CoefficientKind.BOUNDED for t in spec.terms)).tolist())
    return [next(fresh) if t.kind == CoefficientKind.BOUNDED else t.value for t in spec.terms]


def t_length(spec: CombinationSpec, eta: Sequence) -> Fraction:
    """𝒯 = max over terms of min(η_j, (γ_j − δ_j)⁺); 0 for an empty combination."""
    lengths = []
    for term in spec.terms:
        level = term_level(term, eta)
        lengths.append(min(level, trim_width(term, level)))
    return max(lengths, default=Fraction(0))


def range_bound(spec: CombinationSpec, eta: Sequence, ctx: PowerContext, sampler: Optional[SamplerConfig] = None) -> int:
    """k·Δ₂·P̄^𝒯 with Δ₂ taken from the sampler configuration."""
    delta2 = (sampler or SamplerConfig()).delta2
    k = len(spec.terms)
    if k == 0:
        return 0
    return int(k * delta2 * band_size(ctx, t_length(spec, eta)))


# Deterministic MIMO interference channel

class MimoBlock(BaseModel):
    """A contiguous run of one transmitter's antennas as seen by one receiver, trimmed to (x)^{top}_{low}."""

    model_config = ConfigDict(frozen=True)

    transmitter: int
    name: str
    antennas: Tuple[int, ...]     # 0-based antenna indices within the transmitter
    low: Fraction
    top: Fraction


def mimo_band_split(config: MimoIcConfig) -> Dict[str, Tuple[int, Tuple[int, ...]]]:
    """X_{sa} is the first N_{r'} antennas of transmitter s (r' the other receiver), X_{sc} the rest."""
    return {
        "1a": (1, tuple(range(config.N2))),
        "1c": (1, tuple(range(config.N2, config.M1))),
        "2a": (2, tuple(range(config.N1))),
        "2c": (2, tuple(range(config.N1, config.M2))),
    }


def mimo_receiver_layout(config: MimoIcConfig, receiver: int, level_scale=1) -> List[MimoBlock]:
    """
    Receiver r sees its own "c" block untrimmed, then the cross transmitter's
    "a" block trimmed at 1 − α_{rs} and "c" block trimmed at 1 − α_{rs} + β_{rs}.
    Every level is multiplied by level_scale.
    """
    scale = as_level(level_scale)
    split = mimo_band_split(config)
    own, cross = (1, 2) if receiver == 1 else (2, 1)
    key = f"{receiver}{cross}"
    alpha, beta = config.alpha[key], config.beta[key]
    cuts = [
        (f"{own}c", Fraction(0)),
        (f"{cross}a", positive_part(1 - alpha)),
        (f"{cross}c", positive_part(1 - alpha + beta)),
    ]
    blocks = []
    for name, low in cuts:
        transmitter, antennas = split[name]
        blocks.append(MimoBlock(transmitter=transmitter, name=name, antennas=antennas, low=low * scale, top=scale))
    return blocks


def mimo_columns(layout: List[MimoBlock]) -> List[Tuple[int, int, Fraction, Fraction]]:
    """Flattened (transmitter, antenna, low, top) per column of the receiver's coefficient matrix."""
    return [(b.transmitter, a, b.low, b.top) for b in layout for a in b.antennas]


class MimoChannel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    G1: np.ndarray
    G2: np.ndarray
    resamples: int = 0


def _min_abs_minor(block: np.ndarray) -> float:
    rows, cols = block.shape
    if cols < rows:
        return float("inf")
    return min(abs(np.linalg.det(block[:, list(c)])) for c in itertools.combinations(range(cols), rows))


def is_nondegenerate(G: np.ndarray, transmitters: Sequence[int], det_min: float) -> bool:
    """Every N_r×N_r minor inside each per-transmitter column block has |det| ≥ det_min."""
    transmitters = np.asarray(transmitters)
    for s in (1, 2):
        block = G[:, transmitters == s]
        if block.size and _min_abs_minor(block) < det_min:
            return False
    return True


def draw_mimo_channel(config: MimoIcConfig, sampler: CoefficientSampler, budget: int = NONDEGENERACY_BUDGET,
                      nondegenerate: bool = True) -> MimoChannel:
    shapes = []
    for receiver, rows in ((1, config.N1), (2, config.N2)):
        columns = mimo_columns(mimo_receiver_layout(config, receiver))
        shapes.append((rows, [c[0] for c in columns]))

    for attempt in range(budget + 1):
        matrices = [sampler.draw(rows * len(tx)).reshape(rows, len(tx)) for rows, tx in shapes]
        if not nondegenerate or all(is_nondegenerate(G, tx, config.det_min) for G, (_, tx) in zip(matrices, shapes)):
            if attempt:
                app_logger.debug(f"Accepted MIMO channel after {attempt} resamples")
            return MimoChannel(G1=matrices[0], G2=matrices[1], resamples=attempt)
    raise NonDegeneracyError(budget)


def _receiver_output(G: np.ndarray, layout: List[MimoBlock], X: Dict[int, Sequence[int]], ctx: PowerContext) -> List[int]:
    values = [part_window(int(X[tx][a]), ctx, low, top) for tx, a, low, top in mimo_columns(layout)]
    return [sum(pfloor(float(G[row, col]) * v) for col, v in enumerate(values)) for row in range(G.shape[0])]


def mimo_ic_outputs(config: MimoIcConfig, ctx: PowerContext, channel: MimoChannel, X1: Sequence[int],
                    X2: Sequence[int], level_scale=1) -> Tuple[List[int], List[int]]:
    """(Ȳ₁, Ȳ₂) of the deterministic model for one channel use."""
    if len(X1) != config.M1 or len(X2) != config.M2:
        raise ValueError(f"expected input lengths ({config.M1}, {config.M2}), got ({len(X1)}, {len(X2)})")
    size = band_size(ctx, as_level(level_scale))
    if any(not 0 <= x <= size for x in list(X1) + list(X2)):
        raise ValueError(f"inputs must lie in {{0, …, {size}}}")
    X = {1: X1, 2: X2}
    Y1 = _receiver_output(channel.G1, mimo_receiver_layout(config, 1, level_scale), X, ctx)
    Y2 = _receiver_output(channel.G2, mimo_receiver_layout(config, 2, level_scale), X, ctx)
    return Y1, Y2
