"""
Vectorized output maps. Every output is a sum over sources of per-source
contributions, which is what lets the entropy engine convolve per-source
distributions instead of enumerating the joint input space.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.channel_model import CoefficientSampler, term_value
from src.data_models import CoefficientKind, CombinationSpec, TermSpec, TheoremInstance
from src.power_arith import PowerContext, pfloor_array

# spawn key reserved for the coefficients frozen once per instance
FROZEN_STREAM = 2 ** 31 - 1


class RealizedOutputs:
    """A list of combinations with one realized coefficient per term."""

    def __init__(self, names: Sequence[str], specs: Sequence[CombinationSpec], coeffs: Sequence[Sequence[float]],
                 ctx: PowerContext):
        if not (len(names) == len(specs) == len(coeffs)):
            raise ValueError("names, specs and coefficients must align")
        for spec, c in zip(specs, coeffs):
            if len(spec.terms) != len(c):
                raise ValueError(f"{len(spec.terms)} terms but {len(c)} coefficients")
        self.names = list(names)
        self.specs = list(specs)
        self.coeffs = [list(c) for c in coeffs]
        self.ctx = ctx

    @property
    def width(self) -> int:
        return len(self.specs)

    @property
    def sources(self) -> List[int]:
        return sorted({t.source for spec in self.specs for t in spec.terms})

    def contributions(self, source: int, x: np.ndarray) -> np.ndarray:
        """(len(x), width) integer matrix of source j's share of every output."""
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros((len(x), self.width), dtype=np.int64)
        for o, (spec, coeffs) in enumerate(zip(self.specs, self.coeffs)):
            for term, c in zip(spec.terms, coeffs):
                if term.source == source and c != 0:
                    out[:, o] += pfloor_array(c * term_value(term, x, self.ctx))
        return out

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Outputs for each row of an (S, N) realization matrix."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        out = np.zeros((X.shape[0], self.width), dtype=np.int64)
        for j in self.sources:
            out += self.contributions(j, X[:, j])
        return out

    def stack(self, other: Optional["RealizedOutputs"]) -> "RealizedOutputs":
        if other is None:
            return self
        return RealizedOutputs(self.names + other.names, self.specs + other.specs, self.coeffs + other.coeffs, self.ctx)


def lhs_specs(instance: TheoremInstance) -> Tuple[List[str], List[CombinationSpec]]:
    """Z_k = Σ_j pfloor(g_kj·X_j) over the untrimmed signals."""
    names = [f"Z{k}" for k in range(1, instance.K + 1)]
    specs = [CombinationSpec(terms=[TermSpec(source=j, kind=CoefficientKind.BOUNDED) for j in range(instance.N)])
             for _ in names]
    return names, specs


def rhs_keys(instance: TheoremInstance) -> List[List[List[str]]]:
    """Per (k, l): the "k,l,i,j" keys of the terms of Z_{k,l}, in evaluation order."""
    return [[[f"{k},{l},{i},{j}" for i in sorted(I) for j in range(1, instance.N + 1)]
             for l, I in enumerate(instance.index_sets[k - 1], start=1)]
            for k in range(1, instance.K + 1)]


def rhs_specs(instance: TheoremInstance) -> Tuple[List[str], List[CombinationSpec]]:
    """Z_{k,l} = Σ_{i∈I_{k,l}} Σ_j pfloor(h·(band_i(X_j))^γ_δ)."""
    names, specs = [], []
    for k, rows in enumerate(rhs_keys(instance), start=1):
        for l, keys in enumerate(rows, start=1):
            terms = []
            for key in keys:
                _, _, i, j = (int(part) for part in key.split(","))
                if not 1 <= i <= instance.M:
                    raise ValueError(f"band selector {i} outside [1, {instance.M}]")
                trim = instance.trims.get(key)
                terms.append(TermSpec(source=j - 1, band=instance.band_edges(k, i), trim=trim,
                                      kind=CoefficientKind.FIXED, value=0.0))
            names.append(f"Z{k},{l}")
            specs.append(CombinationSpec(terms=terms))
    return names, specs


def frozen_coefficients(instance: TheoremInstance) -> Dict[str, float]:
    """Fixed coefficients for every Z_{k,l} term: explicit values win, the rest are drawn once and kept."""
    keys = [key for rows in rhs_keys(instance) for keys in rows for key in keys]
    draws = CoefficientSampler(instance.sampler, stream=(FROZEN_STREAM,)).draw(len(keys)).tolist()
    return {key: instance.fixed_coefficients.get(key, draw) for key, draw in zip(keys, draws)}


def instance_outputs(instance: TheoremInstance, ctx: PowerContext, g: np.ndarray,
                     h: Dict[str, float]) -> Dict[str, Optional[RealizedOutputs]]:
    """Realized maps for the left side (Z), the right side (Z_{k,l}) and the optional conditioning W."""
    g = np.asarray(g, dtype=np.float64).reshape(instance.K, instance.N)
    lhs_names, lhs = lhs_specs(instance)
    rhs_names, rhs = rhs_specs(instance)
    h_rows = [[h[key] for key in keys] for rows in rhs_keys(instance) for keys in rows]

    w = None
    if instance.conditioning is not None and instance.conditioning.terms:
        spec = instance.conditioning
        if any(t.kind == CoefficientKind.BOUNDED for t in spec.terms):
            raise ValueError("the conditioning W must use fixed coefficients")
        w = RealizedOutputs(["W"], [spec], [[t.value for t in spec.terms]], ctx)

    return {
        "lhs": RealizedOutputs(lhs_names, lhs, g.tolist(), ctx),
        "rhs": RealizedOutputs(rhs_names, rhs, h_rows, ctx),
        "w": w,
    }


def draw_instance_coefficients(instance: TheoremInstance, sampler: CoefficientSampler,
                               frozen: Dict[str, float]) -> Tuple[np.ndarray, Dict[str, float]]:
    """One realization of 𝒢 for Z, plus the Z_{k,l} coefficients (fresh per draw when rhs_coefficients is bounded)."""
    g = sampler.draw(instance.K * instance.N).reshape(instance.K, instance.N)
    if instance.rhs_coefficients == "bounded":
        keys = list(frozen)
        fresh = sampler.draw(len(keys)).tolist()
        h = {key: instance.fixed_coefficients.get(key, value) for key, value in zip(keys, fresh)}
        return g, h
    return g, frozen
