"""
Exact and empirical entropies over small discrete supports.

Distributions of output vectors are obtained by pushing the input law through
RealizedOutputs. Independent sources are combined by convolving per-source
contribution laws, through a dense FFT when the bounding box is the smaller
object and by sparse key aggregation otherwise. Dependent inputs are pushed
through their joint support point by point. Every path is bounded by the
support cap.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
from scipy.signal import fftconvolve

from src.data_models import EntropyEstimate, InputKind, InputModel, JointTable
from src.exceptions import SupportCapExceeded
from src.output_maps import RealizedOutputs, draw_instance_coefficients, frozen_coefficients, instance_outputs
from src.power_arith import band_size
from src.utils.config import DEFAULT_SUPPORT_CAP
from src.utils.logger import app_logger

# FFT round-off floor; true masses on capped supports are far above it
FFT_MASS_FLOOR = 1e-14
Names = Union[str, Sequence[str]]


def entropy_bits(mass: np.ndarray) -> float:
    p = np.asarray(mass, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def aggregate(rows: np.ndarray, mass: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Merge identical rows, summing their masses. Rows come back in lexicographic order."""
    rows = np.asarray(rows, dtype=np.int64)
    mass = np.asarray(mass, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.shape[1] == 0 or rows.shape[0] == 0:
        return np.zeros((1, rows.shape[1]), dtype=np.int64), np.array([mass.sum()])
    low = rows.min(axis=0)
    spans = rows.max(axis=0) - low + 1
    if math.prod(int(s) for s in spans) < 2 ** 62:
        strides = np.cumprod(np.concatenate(([1], spans[::-1][:-1])))[::-1]
        keys = (rows - low) @ strides
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        unique_rows = (unique_keys[:, None] // strides) % spans + low
    else:
        unique_rows, inverse = np.unique(rows, axis=0, return_inverse=True)
    return unique_rows.astype(np.int64), np.bincount(inverse.ravel(), weights=mass)


def _dense_convolve(a_rows, a_mass, b_rows, b_mass):
    a_low, b_low = a_rows.min(axis=0), b_rows.min(axis=0)
    a_span = tuple(a_rows.max(axis=0) - a_low + 1)
    b_span = tuple(b_rows.max(axis=0) - b_low + 1)
    A = np.zeros(a_span)
    B = np.zeros(b_span)
    A[tuple((a_rows - a_low).T)] = a_mass
    B[tuple((b_rows - b_low).T)] = b_mass
    C = fftconvolve(A, B)
    C[C < FFT_MASS_FLOOR] = 0.0
    C /= C.sum()
    idx = np.nonzero(C)
    rows = np.stack(idx, axis=1).astype(np.int64) + a_low + b_low
    return rows, C[idx]


def convolve(parts: List[Tuple[np.ndarray, np.ndarray]], cap: int = DEFAULT_SUPPORT_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """Law of the sum of independent integer vectors, each given as (rows, masses)."""
    rows, mass = parts[0]
    for b_rows, b_mass in parts[1:]:
        if rows.shape[1] == 0:
            continue
        pairs = len(rows) * len(b_rows)
        spans = (rows.max(axis=0) + b_rows.max(axis=0)) - (rows.min(axis=0) + b_rows.min(axis=0)) + 1
        box = math.prod(int(s) for s in spans)
        required = min(pairs, box)
        if required > cap:
            raise SupportCapExceeded(required, cap, "output law")
        if box < pairs:
            rows, mass = _dense_convolve(rows, mass, b_rows, b_mass)
        else:
            summed = (rows[:, None, :] + b_rows[None, :, :]).reshape(-1, rows.shape[1])
            rows, mass = aggregate(summed, np.outer(mass, b_mass).ravel())
    return rows, mass


def pushforward(outputs: RealizedOutputs, input_model: InputModel, sizes: Sequence[int],
                cap: int = DEFAULT_SUPPORT_CAP) -> JointTable:
    """Exact law of the outputs when source j ranges over {0, …, sizes[j]−1} under input_model."""
    N = len(sizes)
    if input_model.kind == InputKind.UNIFORM:
        parts = []
        for j in range(N):
            x = np.arange(sizes[j], dtype=np.int64)
            parts.append(aggregate(outputs.contributions(j, x), np.full(len(x), 1.0 / len(x))))
        rows, mass = convolve(parts, cap)
    elif input_model.kind == InputKind.IDENTICAL:
        size = min(sizes)
        if size > cap:
            raise SupportCapExceeded(size, cap, "input support")
        x = np.arange(size, dtype=np.int64)
        rows, mass = aggregate(outputs.evaluate(np.repeat(x[:, None], N, axis=1)), np.full(size, 1.0 / size))
    else:
        support = np.asarray(input_model.support, dtype=np.int64)
        if len(support) > cap:
            raise SupportCapExceeded(len(support), cap, "input support")
        if support.shape[1] != N or np.any(support < 0) or np.any(support >= np.asarray(sizes)):
            raise ValueError("joint input support lies outside the source alphabets")
        rows, mass = aggregate(outputs.evaluate(support), np.asarray(input_model.mass))
    mass = mass / mass.sum()
    return JointTable(names=outputs.names, support=rows, mass=mass)


def _columns(table: JointTable, subset: Names) -> List[int]:
    subset = [subset] if isinstance(subset, str) else list(subset)
    unknown = [name for name in subset if name not in table.names]
    if unknown:
        raise ValueError(f"undeclared variables {unknown}; table has {table.names}")
    return [table.names.index(name) for name in dict.fromkeys(subset)]


def marginal(table: JointTable, subset: Names) -> JointTable:
    cols = _columns(table, subset)
    rows, mass = aggregate(table.support[:, cols], table.mass)
    return JointTable(names=[table.names[c] for c in cols], support=rows, mass=mass / mass.sum())


def exact_entropy(table: JointTable, subset: Names, normalizer: float = 1.0) -> EntropyEstimate:
    cols = _columns(table, subset)
    if not cols:
        return EntropyEstimate(value=0.0, normalizer=normalizer, support_size=1)
    rows, mass = aggregate(table.support[:, cols], table.mass)
    return EntropyEstimate(value=max(entropy_bits(mass), 0.0), normalizer=normalizer, support_size=len(rows))


def joint_entropy(table: JointTable, *groups: Names) -> float:
    names = [n for g in groups for n in ([g] if isinstance(g, str) else g)]
    return exact_entropy(table, names).value


def conditional_entropy(table: JointTable, target: Names, given: Names) -> float:
    """H(target ∣ given) = H(target, given) − H(given)."""
    return joint_entropy(table, target, given) - joint_entropy(table, given)


def han_check(table: JointTable, a: Names, b: Names, c: Names, given: Names = ()) -> Tuple[bool, float]:
    """2H(A,B,C∣G) ≤ H(A,B∣G) + H(A,C∣G) + H(B,C∣G); returns (holds, slack)."""
    h = lambda *groups: conditional_entropy(table, [n for g in groups for n in ([g] if isinstance(g, str) else g)], given)
    slack = h(a, b) + h(a, c) + h(b, c) - 2 * h(a, b, c)
    return slack >= -1e-10, slack


def plugin_entropy(samples, normalizer: float = 1.0) -> EntropyEstimate:
    """Entropy of the empirical frequency table; biased low by about (support−1)/(2·trials·ln 2)."""
    rows = np.asarray(samples, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.shape[0] < 1:
        raise ValueError("plug-in entropy needs at least one sample")
    trials = rows.shape[0]
    distinct, counts = aggregate(rows, np.ones(trials))
    value = entropy_bits(counts / trials)
    bias = (len(distinct) - 1) / (2 * trials * math.log(2))
    # undersampled once distinct values are a sizeable share of the draws
    flagged = len(distinct) > 0.1 * trials and len(distinct) > 1
    if flagged:
        app_logger.warning(f"Plug-in entropy from {trials} samples over {len(distinct)} distinct values: "
                           f"expect a downward bias of about {bias:.3f} bits or more")
    return EntropyEstimate(value=value, method="plugin-sample", trials=trials, normalizer=normalizer,
                           support_size=len(distinct), bias_flag=flagged)


def sample_inputs(input_model: InputModel, sizes: Sequence[int], count: int, rng: np.random.Generator) -> np.ndarray:
    N = len(sizes)
    if input_model.kind == InputKind.UNIFORM:
        return np.stack([rng.integers(0, s, size=count) for s in sizes], axis=1)
    if input_model.kind == InputKind.IDENTICAL:
        x = rng.integers(0, min(sizes), size=count)
        return np.repeat(x[:, None], N, axis=1)
    support = np.asarray(input_model.support, dtype=np.int64)
    return support[rng.choice(len(support), size=count, p=np.asarray(input_model.mass))]


def monte_carlo_average(draw_entropy: Callable[[int], float], trials: int, threads: int = 1) -> Tuple[float, List[float]]:
    """Average of per-draw values. Draw i is independent of scheduling; the sum runs in draw order with fsum."""
    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(draw_entropy, range(trials)))
    else:
        values = [draw_entropy(i) for i in range(trials)]
    return math.fsum(values) / trials, values


def cond_entropy_given_coeffs(instance, which: str, sampler, trials: int, ctx, cap: int = DEFAULT_SUPPORT_CAP,
                              threads: int = 1, method: str = "exact", samples: int = 10_000) -> EntropyEstimate:
    """
    E_G[H(selected outputs ∣ W, 𝒢 = g)] over `trials` coefficient draws. With n
    letters the inputs and coefficients are i.i.d. across time, so each letter
    gets its own draw and the exact value is the sum of per-letter entropies.
    """
    if which not in ("lhs", "rhs"):
        raise ValueError(f"which must be 'lhs' or 'rhs', got {which!r}")
    sizes = [band_size(ctx, instance.source_level)] * instance.N
    frozen = frozen_coefficients(instance)
    normalizer = ctx.log2_pbar * instance.n

    def letter_maps(draw: int, letter: int):
        g, h = draw_instance_coefficients(instance, sampler.spawn(draw, letter), frozen)
        maps = instance_outputs(instance, ctx, g, h)
        return maps[which], maps["w"]

    def exact_draw(draw: int) -> float:
        total = 0.0
        for letter in range(instance.n):
            selected, w = letter_maps(draw, letter)
            table = pushforward(selected.stack(w), instance.input_model, sizes, cap)
            value = exact_entropy(table, table.names).value
            if w is not None:
                value -= exact_entropy(table, w.names).value
            total += value
        app_logger.debug(f"{instance.name} {which} draw {draw}: {total:.4f} bits at P̄={ctx.pbar}")
        return total

    if method == "exact":
        mean, _ = monte_carlo_average(exact_draw, trials, threads)
        return EntropyEstimate(value=mean, method="exact", trials=trials, normalizer=normalizer)

    estimates = []
    for draw in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(instance.sampler.seed, spawn_key=(draw, 2 ** 30)))
        columns, w_columns = [], []
        for letter in range(instance.n):
            selected, w = letter_maps(draw, letter)
            X = sample_inputs(instance.input_model, sizes, samples, rng)
            columns.append(selected.evaluate(X))
            if w is not None:
                w_columns.append(w.evaluate(X))
        joint = plugin_entropy(np.hstack(columns + w_columns))
        if w_columns:
            joint.value -= plugin_entropy(np.hstack(w_columns)).value
        estimates.append(joint)
    return EntropyEstimate(value=math.fsum(e.value for e in estimates) / trials, method="plugin-sample",
                           trials=trials, normalizer=normalizer, bias_flag=any(e.bias_flag for e in estimates))
