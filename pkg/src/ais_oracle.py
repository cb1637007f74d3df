"""
Brute-force aligned image sets.

Z′ is the tuple (Z_{1,1}, …, Z_{1,l}) with frozen coefficients. Every distinct
Z′ value gets one canonical preimage, the lexicographically smallest input
tuple producing it. For a coefficient draw g, the aligned image set of ν is the
set of Z′ values whose canonical preimages give the same Z as ν's does.
"""

import math
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.channel_model import CoefficientSampler
from src.data_models import AlignmentReport, CoefficientFamily, SamplerConfig, TheoremInstance
from src.entropy_engine import aggregate, entropy_bits
from src.exceptions import SupportCapExceeded
from src.output_maps import frozen_coefficients, instance_outputs
from src.power_arith import PowerContext, band_size, pfloor_array
from src.sumset_verify import level_deficit, theorem1_instance
from src.trend_analyzer import TrendAnalyzer
from src.utils.logger import app_logger

ORACLE_CAP = 2 ** 16
DRAW_CHUNK = 256
PAIR_CHUNK = 2 ** 22
GROWTH_RESIDUAL_LIMIT = 0.2
GROWTH_RATIO_LIMIT = 3.0


class CanonicalImages:
    """Distinct Z′ values of an enumerable instance with their canonical preimages and masses under uniform inputs."""

    def __init__(self, instance: TheoremInstance, ctx: PowerContext, cap: int = ORACLE_CAP, w: Optional[int] = None):
        if instance.K != 1 or instance.n != 1:
            raise ValueError("aligned image sets are enumerated for K = 1, n = 1 instances")
        self.instance = instance
        self.ctx = ctx
        size = band_size(ctx, instance.source_level)
        total = size ** instance.N
        if total > cap:
            raise SupportCapExceeded(total, cap, "input enumeration")

        # rows in lexicographic order, so the first hit of each Z′ is its canonical preimage
        X = np.stack(np.meshgrid(*[np.arange(size)] * instance.N, indexing="ij"), axis=-1).reshape(-1, instance.N)
        self.h = frozen_coefficients(instance)
        maps = instance_outputs(instance, ctx, np.ones((1, instance.N)), self.h)
        if w is not None:
            if maps["w"] is None:
                raise ValueError("w given but the instance has no conditioning")
            X = X[maps["w"].evaluate(X)[:, 0] == w]
            if not len(X):
                raise ValueError(f"no input produces W = {w}")
        self.rhs = maps["rhs"]
        zprime = self.rhs.evaluate(X)
        _, first, inverse, counts = np.unique(zprime, axis=0, return_index=True, return_inverse=True, return_counts=True)
        self.inputs = X
        self.zprime_of_input = inverse.ravel()
        self.preimages = X[first]
        self.images = zprime[first]
        self.mass = counts / counts.sum()
        self.size = size

    def __len__(self) -> int:
        return len(self.preimages)

    def index_of(self, X: Sequence[int]) -> int:
        """Index of the Z′ value produced by input X."""
        target = self.rhs.evaluate(np.asarray([X]))[0]
        matches = np.nonzero((self.images == target).all(axis=1))[0]
        if not len(matches):
            raise ValueError(f"{tuple(X)} is outside the enumerated inputs")
        return int(matches[0])

    def central_index(self) -> int:
        return self.index_of([self.size // 2] * self.instance.N)


def z_values(preimages: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Z = Σ_j pfloor(g_j·X_j) for every draw (rows of G) and every preimage."""
    return pfloor_array(G[:, None, :] * preimages[None, :, :]).sum(axis=-1)


def _class_sizes(z_row: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, inverse, counts = np.unique(z_row, return_inverse=True, return_counts=True)
    return inverse.ravel(), counts


def alignment_classes(images: CanonicalImages, g: Sequence[float]) -> List[List[Tuple[int, ...]]]:
    """Partition of the distinct Z′ values by the Z of their canonical preimage."""
    z = z_values(images.preimages, np.asarray(g, dtype=np.float64).reshape(1, -1))[0]
    inverse, _ = _class_sizes(z)
    classes: Dict[int, List[Tuple[int, ...]]] = {}
    for index, label in enumerate(inverse):
        classes.setdefault(int(label), []).append(tuple(int(v) for v in images.images[index]))
    return [classes[label] for label in sorted(classes)]


def _draw_matrix(sampler: CoefficientSampler, draws: int, N: int) -> np.ndarray:
    return np.vstack([sampler.spawn(d).draw(N) for d in range(draws)])


def expected_cardinality(instance: TheoremInstance, ctx: PowerContext, draws: int, sampler: Optional[CoefficientSampler] = None,
                         designated: Optional[Sequence[int]] = None, cap: int = ORACLE_CAP,
                         include_histogram: bool = False, w: Optional[int] = None) -> AlignmentReport:
    sampler = sampler or CoefficientSampler(instance.sampler)
    images = CanonicalImages(instance, ctx, cap, w)
    nu = images.index_of(designated) if designated is not None else images.central_index()
    G = _draw_matrix(sampler, draws, instance.N)

    own, largest, histogram = [], [], []
    for start in range(0, draws, DRAW_CHUNK):
        for z_row in z_values(images.preimages, G[start:start + DRAW_CHUNK]):
            inverse, counts = _class_sizes(z_row)
            own.append(int(counts[inverse[nu]]))
            largest.append(int(counts.max()))
            if include_histogram:
                histogram.append(sorted(counts.tolist(), reverse=True))

    exponent = float(level_deficit(instance))
    report = AlignmentReport(
        pbar=ctx.pbar, draws=draws, distinct_images=len(images),
        class_sizes=histogram,
        expected_cardinality=math.fsum(own) / draws,
        expected_max_cardinality=math.fsum(largest) / draws,
        analytic_exponent=exponent,
        analytic_bound=ctx.pbar ** exponent * max(1.0, ctx.log2_pbar),
        designated=tuple(int(v) for v in images.preimages[nu]),
    )
    app_logger.debug(f"P̄={ctx.pbar}: E|S_ν|={report.expected_cardinality:.3f}, "
                     f"E max|S|={report.expected_max_cardinality:.3f} over {len(images)} images")
    return report


def alignment_cap(mu: Sequence[int], nu: Sequence[int], f_max: float) -> float:
    """P_a ≤ min(1, 4·f_max / max_i |μ_i − ν_i|) with μ, ν the reconstructed source values."""
    separation = max(abs(int(a) - int(b)) for a, b in zip(mu, nu))
    if separation == 0:
        return 1.0
    return min(1.0, 4.0 * f_max / separation)


def pairwise_alignment_probability(instance: TheoremInstance, ctx: PowerContext, mu: Sequence[int], nu: Sequence[int],
                                   draws: int, sampler: Optional[CoefficientSampler] = None) -> Dict[str, float]:
    sampler = sampler or CoefficientSampler(instance.sampler)
    rhs = instance_outputs(instance, ctx, np.ones((1, instance.N)), frozen_coefficients(instance))["rhs"]
    pair = np.asarray([mu, nu], dtype=np.int64)
    images = rhs.evaluate(pair)
    if np.array_equal(images[0], images[1]):
        raise ValueError(f"{tuple(mu)} and {tuple(nu)} produce the same Z′")
    G = sampler.draw(draws * instance.N).reshape(draws, instance.N)
    z = z_values(pair, G)
    empirical = float(np.mean(z[:, 0] == z[:, 1]))
    cap = alignment_cap(mu, nu, sampler.f_max)
    sigma = math.sqrt(cap * (1 - cap) / draws)
    return {"empirical": empirical, "cap": cap, "sigma": sigma, "ok": empirical <= cap + 3 * sigma}


def all_pairs_check(instance: TheoremInstance, ctx: PowerContext, draws: int,
                    sampler: Optional[CoefficientSampler] = None, cap: int = ORACLE_CAP) -> List[Dict]:
    """Collision frequency against the P_a cap for every pair of canonical preimages."""
    sampler = sampler or CoefficientSampler(instance.sampler)
    images = CanonicalImages(instance, ctx, cap)
    left, right = np.triu_indices(len(images), k=1)
    G = sampler.draw(draws * instance.N).reshape(draws, instance.N)
    hits = np.zeros(len(left), dtype=np.int64)
    chunk = max(1, min(DRAW_CHUNK, PAIR_CHUNK // max(1, len(left))))
    for start in range(0, draws, chunk):
        z = z_values(images.preimages, G[start:start + chunk])
        hits += (z[:, left] == z[:, right]).sum(axis=0)

    separation = np.abs(images.preimages[left] - images.preimages[right]).max(axis=1)
    caps = np.minimum(1.0, 4.0 * sampler.f_max / separation)
    sigma = np.sqrt(caps * (1 - caps) / draws)
    empirical = hits / draws
    rows = []
    for p in range(len(left)):
        rows.append({"mu": images.preimages[left[p]].tolist(), "nu": images.preimages[right[p]].tolist(),
                     "empirical": float(empirical[p]), "cap": float(caps[p]),
                     "ok": bool(empirical[p] <= caps[p] + 3 * sigma[p])})
    violations = sum(not r["ok"] for r in rows)
    app_logger.info(f"Checked {len(rows)} pairs over {draws} draws: {violations} above cap + 3σ")
    return rows


def quadrature_cardinality(instance: TheoremInstance, ctx: PowerContext, resolution: float = 1 / 64,
                           designated: Optional[Sequence[int]] = None, cap: int = ORACLE_CAP) -> float:
    """E|S_ν| by the midpoint rule over the coefficient box; needs a coefficient dimension of at most 2."""
    config = instance.sampler
    dimension = instance.K * instance.N
    if dimension > 2:
        raise ValueError(f"quadrature needs at most 2 coefficients, instance has {dimension}")
    images = CanonicalImages(instance, ctx, cap)
    nu = images.index_of(designated) if designated is not None else images.central_index()

    width = config.delta2 - config.delta1
    cells = max(1, math.ceil(width / resolution))
    step = width / cells
    axis = config.delta1 + step * (np.arange(cells) + 0.5)
    signs = [-1.0, 1.0] if config.family == CoefficientFamily.UNIFORM_SIGNED else [1.0]
    weight = (config.peak_density * step) ** dimension

    grids = np.meshgrid(*[axis] * dimension, indexing="ij")
    points = np.stack([grid.ravel() for grid in grids], axis=1)
    total = []
    for sign in product(signs, repeat=dimension):
        G = points * np.asarray(sign)
        for start in range(0, len(G), DRAW_CHUNK):
            for z_row in z_values(images.preimages, G[start:start + DRAW_CHUNK]):
                inverse, counts = _class_sizes(z_row)
                total.append(counts[inverse[nu]] * weight)
    return math.fsum(total)


def entropy_chain_check(instance: TheoremInstance, ctx: PowerContext, draws: int,
                        sampler: Optional[CoefficientSampler] = None, cap: int = ORACLE_CAP) -> List[Dict[str, float]]:
    """Per draw: H(Z′) − H(Z_c ∣ g) ≤ log₂ max|S| with Z_c the Z of the canonical preimage, uniform inputs."""
    sampler = sampler or CoefficientSampler(instance.sampler)
    images = CanonicalImages(instance, ctx, cap)
    h_zprime = entropy_bits(images.mass)
    rows = []
    for d in range(draws):
        z = z_values(images.preimages, sampler.spawn(d).draw(instance.N)[None, :])[0]
        _, z_mass = aggregate(z, images.mass)
        _, counts = _class_sizes(z)
        bound = math.log2(counts.max())
        difference = h_zprime - entropy_bits(z_mass)
        rows.append({"draw": d, "difference": difference, "log_max_class": bound, "ok": difference <= bound + 1e-9})
    return rows


def growth_check(lambda1, lambda2, pbars: Sequence[int], draws: int, sampler: Optional[SamplerConfig] = None,
                 cap: int = ORACLE_CAP, tolerance: float = 0.2) -> Dict:
    """
    Fit E|S| ≈ (a + b·log₂P̄)·P̄^{(λ₂−λ₁)⁺} along a P̄ sweep. Passes when the leading
    exponent stays within tolerance of the reference, the relative residual is
    below GROWTH_RESIDUAL_LIMIT and every consecutive ratio is below GROWTH_RATIO_LIMIT.
    """
    if len(pbars) < 4:
        raise ValueError(f"growth check needs at least 4 sweep points, got {len(pbars)}")
    instance = theorem1_instance(lambda1, lambda2, sampler=sampler)
    exponent = float(level_deficit(instance))
    reports = [expected_cardinality(instance, PowerContext.from_pbar(p), draws, cap=cap) for p in pbars]
    analyzer = TrendAnalyzer()
    fit = analyzer.fit_growth([r.pbar for r in reports], [r.expected_cardinality for r in reports], exponent)
    fit["exponent_ok"] = bool(fit["leading_exponent"] <= exponent + tolerance)
    fit["residual_ok"] = bool(fit["relative_residual"] < GROWTH_RESIDUAL_LIMIT)
    fit["ratios_ok"] = bool(max(fit["ratios"]) < GROWTH_RATIO_LIMIT)
    fit["passed"] = fit["exponent_ok"] and fit["residual_ok"] and fit["ratios_ok"]
    fit["reports"] = [r.model_dump() for r in reports]
    app_logger.info(f"Growth fit for λ=({lambda1},{lambda2}): exponent {fit['leading_exponent']:.3f} "
                    f"(reference {exponent}), relative residual {fit['relative_residual']:.3f}")
    return fit
