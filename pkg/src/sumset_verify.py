"""
Sum-set inequality instances: built-in constructions, the level condition,
pointwise realization of Z and Z_{k,l}, and the numerical P sweep.
"""

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.channel_model import CoefficientSampler, lincomb, t_length
from src.data_models import GapReport, InputKind, InputModel, SamplerConfig, TheoremInstance
from src.data_validator import InstanceValidator
from src.entropy_engine import cond_entropy_given_coeffs
from src.exceptions import InstanceValidationError, SupportCapExceeded
from src.output_maps import lhs_specs, rhs_keys, rhs_specs
from src.power_arith import PowerContext, as_level, band_size, positive_part
from src.utils.config import DEFAULT_SUPPORT_CAP
from src.utils.logger import app_logger


def theorem1_instance(lambda1, lambda2, fixed_coefficients: Optional[Dict[str, float]] = None,
                      dependent: bool = False, sampler: Optional[SamplerConfig] = None) -> TheoremInstance:
    """M = N = 2, K = 1, I₁ = {2} (top band), I₂ = {1, 2}; band 1 is the bottom λ₁ levels."""
    lambda1, lambda2 = as_level(lambda1), as_level(lambda2)
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("levels must be non-negative")
    return TheoremInstance(
        name=f"theorem1({lambda1},{lambda2})",
        N=2, K=1,
        level_grid=[[lambda1, lambda2]],
        index_sets=[[[2], [1, 2]]],
        fixed_coefficients=fixed_coefficients or {},
        input_model=InputModel(kind=InputKind.IDENTICAL if dependent else InputKind.UNIFORM),
        sampler=sampler or SamplerConfig(),
    )


def top_band_specialization(lambda1, lambda2) -> TheoremInstance:
    """Zero coefficients leave Z_{1,1} = (X₁)^{λ₁+λ₂}_{λ₁} and Z_{1,2} = (X₂)^{λ₁+λ₂}_{λ₁}."""
    coefficients = {"1,1,2,1": 1.0, "1,1,2,2": 0.0,
                    "1,2,1,1": 0.0, "1,2,1,2": 0.0, "1,2,2,1": 0.0, "1,2,2,2": 1.0}
    instance = theorem1_instance(lambda1, lambda2, fixed_coefficients=coefficients)
    instance.name = f"top-bands({instance.level_grid[0][0]},{instance.level_grid[0][1]})"
    return instance


def figure3_instance(levels: Sequence = ("1/2", "1/4", "1/4", "1/4")) -> TheoremInstance:
    """Single combination (K = 1), M = 4: I₁ = {4}, I₂ = {2, 3, 4}, I₃ = {1, 2, 3, 4}."""
    return TheoremInstance(
        name="figure3", N=2, K=1,
        level_grid=[list(levels)],
        index_sets=[[[4], [2, 3, 4], [1, 2, 3, 4]]],
    )


def figure5_instance(levels: Sequence = ("1/4", "1/8", "1/8", "1/8")) -> TheoremInstance:
    """N = 3, K = 2, M = 4 with the multi-antenna index sets; the same level row for both k."""
    return TheoremInstance(
        name="figure5", N=3, K=2,
        level_grid=[list(levels), list(levels)],
        index_sets=[[[4], [2, 4], [1, 2, 3, 4]],
                    [[4], [3, 4], [1, 2, 3, 4]]],
    )


def appendix_b_instance() -> TheoremInstance:
    """Three half-band sources, K = 2, λ_{kr} = 1/2, I₁₁ = I₂₁ = {2}, I₁₂ = I₂₂ = {1}."""
    half = Fraction(1, 2)
    return TheoremInstance(
        name="appendix-b", N=3, K=2,
        level_grid=[[half, half], [half, half]],
        index_sets=[[[2], [1]], [[2], [1]]],
    )


def appendix_b_applications(sampler: Optional[SamplerConfig] = None) -> List[TheoremInstance]:
    """
    The three multi-combination sum-set instances closing the submodularity chain: for each
    dropped source d, Z_{k,1} keeps the top-band combination of all three sources
    and Z_{1,2}, Z_{2,2} pin the bottom bands of the two kept sources.
    """
    instances = []
    for dropped in range(1, 4):
        kept = [j for j in range(1, 4) if j != dropped]
        pinned = {f"{k},2,1,{j}": (1.0 if j == kept[k - 1] else 0.0) for k in (1, 2) for j in range(1, 4)}
        instance = appendix_b_instance()
        instance.name = f"appendix-b-drop{dropped}"
        instance.fixed_coefficients = pinned
        if sampler is not None:
            instance.sampler = sampler
        instances.append(instance)
    return instances


BUILTINS = {
    "theorem1": theorem1_instance,
    "figure3": figure3_instance,
    "figure5": figure5_instance,
    "appendix-b": appendix_b_instance,
}


def builtin_instance(name: str, **params) -> TheoremInstance:
    if name not in BUILTINS:
        raise ValueError(f"unknown built-in instance {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[name](**params)


def z_kl_t_lengths(instance: TheoremInstance) -> List[List[Fraction]]:
    """𝒯(Z_{k,l}) for every k, l."""
    _, specs = rhs_specs(instance)
    eta = [instance.source_level] * instance.N
    lengths, it = [], iter(specs)
    for k in range(instance.K):
        lengths.append([t_length(next(it), eta) for _ in instance.index_sets[k]])
    return lengths


def _trimmed_form(instance: TheoremInstance, k: int, r: int) -> Fraction:
    """max over j and i ∈ I_{k,r} of min(λ_{k,i}, (γ − δ)⁺)."""
    return max(min(instance.level_grid[k - 1][i - 1], positive_part(gamma - delta))
               for i in instance.index_sets[k - 1][r - 1]
               for j in range(1, instance.N + 1)
               for gamma, delta in [instance.trim_for(k, r, i, j)])


def check_level_condition(instance: TheoremInstance) -> List[Dict]:
    """For each k and s < l_k: 𝒯(Z_{k,s+1}) + … + 𝒯(Z_{k,l_k}) ≤ λ_{k,1} + … + λ_{k,m(k,s)−1}."""
    results = []
    lengths = z_kl_t_lengths(instance)
    for k in range(1, instance.K + 1):
        l_k = len(instance.index_sets[k - 1])
        row = instance.level_grid[k - 1]
        for s in range(1, l_k):
            lhs = sum(lengths[k - 1][s:], Fraction(0))
            trimmed = sum((_trimmed_form(instance, k, r) for r in range(s + 1, l_k + 1)), Fraction(0))
            rhs = sum(row[:instance.m(k, s) - 1], Fraction(0))
            results.append({"k": k, "s": s, "lhs": lhs, "trimmed_lhs": trimmed, "rhs": rhs,
                            "ok": lhs <= rhs and trimmed <= rhs})
    return results


def level_deficit(instance: TheoremInstance) -> Fraction:
    """Σ_k max_s (excess of the level condition)⁺; the generalized target is gap ≥ −deficit·log P̄."""
    worst: Dict[int, Fraction] = {}
    for row in check_level_condition(instance):
        worst[row["k"]] = max(worst.get(row["k"], Fraction(0)), positive_part(row["lhs"] - row["rhs"]))
    return sum(worst.values(), Fraction(0))


def realize_outputs(instance: TheoremInstance, X: Sequence[int], g, h: Dict[str, float],
                    ctx: PowerContext) -> Tuple[List[int], List[int]]:
    """Scalar evaluation of (Z₁…Z_K) and (Z_{1,1}…Z_{K,l_K}) for one channel use."""
    size = band_size(ctx, instance.source_level)
    if len(X) != instance.N or any(not 0 <= int(x) < size for x in X):
        raise ValueError(f"X must hold {instance.N} values in {{0, …, {size - 1}}}")
    g = np.asarray(g, dtype=np.float64).reshape(instance.K, instance.N)
    _, lhs = lhs_specs(instance)
    _, rhs = rhs_specs(instance)
    Z = [lincomb(spec, X, g[k].tolist(), ctx) for k, spec in enumerate(lhs)]

    keys = [keys for rows in rhs_keys(instance) for keys in rows]
    Z_kl = [lincomb(spec, X, [h[key] for key in row_keys], ctx) for spec, row_keys in zip(rhs, keys)]
    return Z, Z_kl


def power_contexts(pbar: Optional[Sequence[int]] = None, P: Optional[Sequence[float]] = None) -> List[PowerContext]:
    if P:
        return [PowerContext(P=p) for p in P]
    return [PowerContext.from_pbar(p) for p in (pbar or [])]


def verify_sweep(instance: TheoremInstance, contexts: Sequence[PowerContext], trials: int,
                 cap: int = DEFAULT_SUPPORT_CAP, threads: int = 1, method: str = "exact",
                 samples: int = 10_000) -> List[GapReport]:
    validator = InstanceValidator()
    is_valid, errors, _ = validator.validate_theorem_instance(instance)
    if not is_valid:
        raise InstanceValidationError(errors, validator.last_violation)

    conditions = check_level_condition(instance)
    condition_ok = all(c["ok"] for c in conditions)
    deficit = level_deficit(instance)
    note = ""
    if not condition_ok:
        note = f"level condition fails; generalized target gap >= -{deficit}*log2(pbar)"
        app_logger.warning(f"{instance.name}: {note}")

    sampler = CoefficientSampler(instance.sampler)
    app_logger.info(f"Verifying {instance.name} over {len(contexts)} powers with {trials} draws")
    reports = []
    for ctx in contexts:
        try:
            lhs = cond_entropy_given_coeffs(instance, "lhs", sampler, trials, ctx, cap, threads, method, samples)
            rhs_trials = trials if instance.rhs_coefficients == "bounded" or method != "exact" else 1
            rhs = cond_entropy_given_coeffs(instance, "rhs", sampler, rhs_trials, ctx, cap, threads, method, samples)
        except SupportCapExceeded as e:
            app_logger.warning(f"{instance.name} at P̄={ctx.pbar}: {e}")
            reports.append(GapReport(P=ctx.P, pbar=ctx.pbar, condition_ok=condition_ok, target=-float(deficit),
                                     status="cap-exceeded", note=str(e)))
            continue
        report = GapReport(P=ctx.P, pbar=ctx.pbar, lhs=lhs, rhs=rhs, condition_ok=condition_ok,
                           target=-float(deficit), note=note)
        app_logger.debug(f"{instance.name} P̄={ctx.pbar}: lhs={lhs.value:.4f} rhs={rhs.value:.4f} "
                         f"normalized gap={report.normalized_gap:.4f}")
        reports.append(report)
    app_logger.info(f"Finished {instance.name}: {sum(r.status == 'ok' for r in reports)}/{len(reports)} powers evaluated")
    return reports
