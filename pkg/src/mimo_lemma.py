"""
Desk-scale numerical check of the key lemma of the MIMO interference channel
converse, 2H(X2c^) ≤ 2H(Y1∣X1,G) + H(Lo∣T,X1,G) + o(log P̄), and of the
sub-steps of its submodularity proof.

Notation: receiver 1 output Y1 is split at level 2/3 (scaled) into T = Y1 ÷ b
and Lo = Y1 mod b; X2c^ is the top half of the X2c antennas, the part
receiver 1 actually sees. All levels are multiplied by level_scale so the
alphabets stay small.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.channel_model import CoefficientSampler, MimoChannel, draw_mimo_channel, mimo_columns, mimo_receiver_layout
from src.data_models import (CoefficientKind, CombinationSpec, EntropyEstimate, GapReport, InputKind, InputModel,
                             JointTable, MimoIcConfig, SamplerConfig, TermSpec, lemma1_sampler)
from src.entropy_engine import aggregate, conditional_entropy, entropy_bits, han_check, joint_entropy, pushforward
from src.exceptions import SupportCapExceeded
from src.output_maps import RealizedOutputs
from src.power_arith import PowerContext, as_level, band_size
from src.sumset_verify import appendix_b_applications, appendix_b_instance, check_level_condition, verify_sweep
from src.trend_analyzer import TrendAnalyzer
from src.utils.config import DEFAULT_SUPPORT_CAP
from src.utils.logger import app_logger

SPLIT_LEVEL = Fraction(2, 3)
CHAIN_TOLERANCE = 1e-10


def _source(config: MimoIcConfig, transmitter: int, antenna: int) -> int:
    """Antennas of transmitter 1 are sources 0…M1−1, those of transmitter 2 follow."""
    return antenna if transmitter == 1 else config.M1 + antenna


def receiver1_outputs(config: MimoIcConfig, ctx: PowerContext, channel: MimoChannel, level_scale,
                      transmitter: Optional[int] = None) -> RealizedOutputs:
    """Y1 as a realized floor-linear map over all M1 + M2 antennas, optionally restricted to one transmitter."""
    columns = mimo_columns(mimo_receiver_layout(config, 1, level_scale))
    specs, coeffs = [], []
    for row in range(channel.G1.shape[0]):
        terms, values = [], []
        for col, (tx, antenna, low, top) in enumerate(columns):
            if transmitter is not None and tx != transmitter:
                continue
            value = float(channel.G1[row, col])
            terms.append(TermSpec(source=_source(config, tx, antenna), band=(low, top),
                                  kind=CoefficientKind.FIXED, value=value))
            values.append(value)
        specs.append(CombinationSpec(terms=terms))
        coeffs.append(values)
    names = [f"Y1_{row + 1}" for row in range(len(specs))]
    return RealizedOutputs(names, specs, coeffs, ctx)


def x2c_top_outputs(config: MimoIcConfig, ctx: PowerContext, level_scale) -> RealizedOutputs:
    """(X2c)^s_{low}: the window of each X2c antenna that receiver 1 observes."""
    block = next(b for b in mimo_receiver_layout(config, 1, level_scale) if b.name == "2c")
    specs = [CombinationSpec(terms=[TermSpec(source=_source(config, 2, a), band=(block.low, block.top),
                                             kind=CoefficientKind.FIXED, value=1.0)])
             for a in block.antennas]
    return RealizedOutputs([f"X2c_top{a + 1}" for a in block.antennas], specs, [[1.0]] * len(specs), ctx)


def _x2c_low_outputs(config: MimoIcConfig, ctx: PowerContext, level_scale) -> RealizedOutputs:
    block = next(b for b in mimo_receiver_layout(config, 1, level_scale) if b.name == "2c")
    specs = [CombinationSpec(terms=[TermSpec(source=_source(config, 2, a), band=(Fraction(0), block.low),
                                             kind=CoefficientKind.FIXED, value=1.0)])
             for a in block.antennas]
    return RealizedOutputs([f"X2c_low{a + 1}" for a in block.antennas], specs, [[1.0]] * len(specs), ctx)


def _split(rows: np.ndarray, b: int):
    return np.floor_divide(rows, b), np.mod(rows, b)


def _residue_law(config, ctx, channel, level_scale, sizes, cap):
    """Law of A mod b, A the own-signal part of Y1; T given X1 depends on A only through it."""
    own = pushforward(receiver1_outputs(config, ctx, channel, level_scale, transmitter=1),
                      InputModel(kind=InputKind.UNIFORM), sizes, cap)
    b = band_size(ctx, SPLIT_LEVEL * as_level(level_scale))
    return aggregate(np.mod(own.support, b), own.mass), b


def _uniform_sides(config, ctx, channel, level_scale, cap) -> Dict[str, float]:
    sizes = [band_size(ctx, level_scale)] * (config.M1 + config.M2)
    uniform = InputModel(kind=InputKind.UNIFORM)
    cross = pushforward(receiver1_outputs(config, ctx, channel, level_scale, transmitter=2), uniform, sizes, cap)
    top = pushforward(x2c_top_outputs(config, ctx, level_scale), uniform, sizes, cap)
    residues, b = _residue_law(config, ctx, channel, level_scale, sizes, cap)

    h_cross = entropy_bits(cross.mass)
    h_t = math.fsum(float(p) * entropy_bits(aggregate(np.floor_divide(cross.support + r, b), cross.mass)[1])
                    for r, p in zip(*residues))
    return {"x2c_top": entropy_bits(top.mass), "y1_given_x1": h_cross, "t_given_x1": h_t,
            "lo_given_t_x1": h_cross - h_t}


def _pointwise_table(config, ctx, channel, level_scale, support: np.ndarray, mass: np.ndarray) -> JointTable:
    """Joint of (X1, X2c^, X2c_low, Y1, T, Lo) for an explicit input law over all antennas."""
    b = band_size(ctx, SPLIT_LEVEL * as_level(level_scale))
    y1 = receiver1_outputs(config, ctx, channel, level_scale).evaluate(support)
    t, lo = _split(y1, b)
    top = x2c_top_outputs(config, ctx, level_scale).evaluate(support)
    low = _x2c_low_outputs(config, ctx, level_scale).evaluate(support)
    columns = np.hstack([support[:, :config.M1], top, low, y1, t, lo])
    names = ([f"X1_{a + 1}" for a in range(config.M1)] + [f"X2c_top{i + 1}" for i in range(top.shape[1])]
             + [f"X2c_low{i + 1}" for i in range(low.shape[1])] + [f"Y1_{i + 1}" for i in range(y1.shape[1])]
             + [f"T{i + 1}" for i in range(t.shape[1])] + [f"Lo{i + 1}" for i in range(lo.shape[1])])
    rows, merged = aggregate(columns, mass)
    return JointTable(names=names, support=rows, mass=merged / merged.sum())


def _group(table: JointTable, prefix: str) -> List[str]:
    return [n for n in table.names if n.startswith(prefix)]


def _pointwise_sides(table: JointTable) -> Dict[str, float]:
    x1, t = _group(table, "X1_"), _group(table, "T")
    y1 = _group(table, "Y1_")
    return {
        "x2c_top": joint_entropy(table, _group(table, "X2c_top")),
        "y1_given_x1": conditional_entropy(table, y1, x1),
        "t_given_x1": conditional_entropy(table, t, x1),
        "lo_given_t_x1": conditional_entropy(table, _group(table, "Lo"), t + x1),
    }


def _input_support(config: MimoIcConfig, ctx: PowerContext, level_scale, input_model: InputModel, cap: int):
    width = config.M1 + config.M2
    size = band_size(ctx, level_scale)
    if input_model.kind == InputKind.IDENTICAL:
        return np.repeat(np.arange(size)[:, None], width, axis=1), np.full(size, 1.0 / size)
    if input_model.kind == InputKind.JOINT:
        support = np.asarray(input_model.support, dtype=np.int64)
        if support.shape[1] != width or support.min() < 0 or support.max() >= size:
            raise ValueError(f"joint inputs need {width} antenna values in {{0, …, {size - 1}}}")
        return support, np.asarray(input_model.mass, dtype=np.float64)
    if size ** width > cap:
        raise SupportCapExceeded(size ** width, cap, "antenna input space")
    grid = np.stack(np.meshgrid(*[np.arange(size)] * width, indexing="ij"), axis=-1).reshape(-1, width)
    return grid, np.full(len(grid), 1.0 / len(grid))


def lemma1_sides(config: MimoIcConfig, ctx: PowerContext, channel: MimoChannel, level_scale=Fraction(1, 2),
                 input_model: Optional[InputModel] = None, cap: int = DEFAULT_SUPPORT_CAP,
                 pointwise: bool = False) -> Dict[str, float]:
    """
    Entropies of both sides for one channel realization. Uniform independent
    inputs use the residue decomposition; other input laws (or pointwise=True)
    enumerate the input support.
    """
    input_model = input_model or InputModel(kind=InputKind.UNIFORM)
    if input_model.kind == InputKind.UNIFORM and not pointwise:
        sides = _uniform_sides(config, ctx, channel, level_scale, cap)
    else:
        support, mass = _input_support(config, ctx, level_scale, input_model, cap)
        sides = _pointwise_sides(_pointwise_table(config, ctx, channel, level_scale, support, mass))
    sides["lhs"] = 2 * sides["x2c_top"]
    sides["rhs"] = 2 * sides["y1_given_x1"] + sides["lo_given_t_x1"]
    return sides


def _mean_sides(trial_sides, trials: int, threads: int) -> Dict[str, float]:
    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(trial_sides, range(trials)))
    else:
        results = [trial_sides(t) for t in range(trials)]
    return {key: math.fsum(r[key] for r in results) / trials for key in results[0]}


def lemma1_numeric_check(contexts: Sequence[PowerContext], sampler: Optional[SamplerConfig] = None, trials: int = 4,
                         level_scale=Fraction(1, 2), config: Optional[MimoIcConfig] = None,
                         cap: int = DEFAULT_SUPPORT_CAP, threads: int = 1,
                         input_model: Optional[InputModel] = None) -> List[GapReport]:
    """
    Average both sides over `trials` channel draws at every power. In each
    report lhs holds 2H(Y1∣X1,G) + H(Lo∣T,X1,G) and rhs holds 2H(X2c^), so a
    negative normalized gap is a violation.
    """
    config = config or MimoIcConfig()
    source = CoefficientSampler(sampler or lemma1_sampler())
    scale = as_level(level_scale)
    reports = []
    for ctx in contexts:
        def trial_sides(trial: int) -> Dict[str, float]:
            channel = draw_mimo_channel(config, source.spawn(ctx.pbar, trial))
            return lemma1_sides(config, ctx, channel, scale, input_model, cap)

        try:
            sides = _mean_sides(trial_sides, trials, threads)
        except SupportCapExceeded as e:
            app_logger.warning(f"Lemma 1 at P̄={ctx.pbar}: {e}")
            reports.append(GapReport(P=ctx.P, pbar=ctx.pbar, status="cap-exceeded", note=str(e)))
            continue

        normalizer = ctx.log2_pbar
        report = GapReport(
            P=ctx.P, pbar=ctx.pbar,
            lhs=EntropyEstimate(value=sides["rhs"], trials=trials, normalizer=normalizer),
            rhs=EntropyEstimate(value=sides["lhs"], trials=trials, normalizer=normalizer),
            note=f"H(X2c^)={sides['x2c_top']:.4f} H(Y1|X1,G)={sides['y1_given_x1']:.4f} "
                 f"H(Lo|T,X1,G)={sides['lo_given_t_x1']:.4f}",
        )
        app_logger.debug(f"Lemma 1 P̄={ctx.pbar}: {report.note}, normalized gap {report.normalized_gap:.4f}")
        reports.append(report)
    return reports


def lemma1_violation_trend(reports: Sequence[GapReport], limit: float = 0.2,
                           analyzer: Optional[TrendAnalyzer] = None) -> Dict:
    evaluated = [r for r in reports if r.status == "ok"]
    analyzer = analyzer or TrendAnalyzer()
    return analyzer.violation_trend([r.pbar for r in evaluated], [-r.normalized_gap for r in evaluated], limit)


def _exact_han(config, ctx, channel, level_scale, cap) -> Dict:
    """Han on the three X2c^ signals given T, for every residue of the own-signal part of Y1."""
    sizes = [band_size(ctx, level_scale)] * (config.M1 + config.M2)
    cross = receiver1_outputs(config, ctx, channel, level_scale, transmitter=2)
    top = x2c_top_outputs(config, ctx, level_scale)
    joint = pushforward(cross.stack(top), InputModel(kind=InputKind.UNIFORM), sizes, cap)
    residues, b = _residue_law(config, ctx, channel, level_scale, sizes, cap)
    width = cross.width
    top_names = top.names

    slacks = []
    for r in residues[0]:
        t = np.floor_divide(joint.support[:, :width] + r, b)
        rows, mass = aggregate(np.hstack([t, joint.support[:, width:]]), joint.mass)
        table = JointTable(names=[f"T{i + 1}" for i in range(width)] + top_names, support=rows, mass=mass)
        given = table.names[:width]
        slacks.append(han_check(table, top_names[0], top_names[1], top_names[2:], given)[1])
    weighted = math.fsum(float(p) * s for p, s in zip(residues[1], slacks))
    return {"ok": min(slacks) >= -CHAIN_TOLERANCE, "min_slack": min(slacks), "weighted_slack": weighted,
            "residues": len(slacks)}


def _theorem4_applications(ctx: PowerContext, sampler: SamplerConfig, trials: int, cap: int) -> Dict:
    """Each sub-instance that closes the chain, run through the sum-set verifier at this power."""
    analyzer = TrendAnalyzer()
    rows = []
    for instance in appendix_b_applications(sampler):
        reports = verify_sweep(instance, [ctx], trials, cap=cap)
        verdict = analyzer.sweep_verdict(reports)
        report = reports[0]
        rows.append({"instance": instance.name, "status": report.status,
                     "normalized_gap": report.normalized_gap if report.status == "ok" else None,
                     "passed": verdict["passed"]})
    if any(r["status"] != "ok" for r in rows):
        return {"ok": None, "instances": rows}
    return {"ok": all(r["passed"] for r in rows), "instances": rows}


def lemma1_submodular_steps(ctx: PowerContext, sampler: Optional[SamplerConfig] = None, han_joints: int = 1000,
                            level_scale=Fraction(1, 2), config: Optional[MimoIcConfig] = None,
                            cap: int = DEFAULT_SUPPORT_CAP, theorem4_trials: int = 4) -> Dict:
    """Each step of the submodularity chain checked on its own at one power."""
    config = config or MimoIcConfig()
    sampler = sampler or lemma1_sampler()
    source = CoefficientSampler(sampler)
    scale = as_level(level_scale)
    channel = draw_mimo_channel(config, source.spawn(ctx.pbar))

    # empirical joint of han_joints sampled antenna inputs
    rng = np.random.default_rng(np.random.SeedSequence(sampler.seed, spawn_key=(ctx.pbar, 2 ** 30)))
    size = band_size(ctx, scale)
    draws = rng.integers(0, size, size=(han_joints, config.M1 + config.M2))
    support, counts = np.unique(draws, axis=0, return_counts=True)
    table = _pointwise_table(config, ctx, channel, scale, support, counts / counts.sum())

    x1, t, lo = _group(table, "X1_"), _group(table, "T"), _group(table, "Lo")
    y1, top, low = _group(table, "Y1_"), _group(table, "X2c_top"), _group(table, "X2c_low")
    chain_errors = [
        abs(joint_entropy(table, y1, x1) - joint_entropy(table, t, lo, x1)),
        abs(conditional_entropy(table, y1, x1)
            - conditional_entropy(table, t, x1) - conditional_entropy(table, lo, t + x1)),
        abs(joint_entropy(table, top, low)
            - joint_entropy(table, top) - conditional_entropy(table, low, top)),
    ]
    sampled_ok, sampled_slack = han_check(table, top[0], top[1], top[2:], t + x1)

    steps = {
        "pbar": ctx.pbar,
        "chain_rule": {"ok": max(chain_errors) <= CHAIN_TOLERANCE, "max_error": max(chain_errors)},
        "han_sampled": {"ok": sampled_ok, "slack": sampled_slack, "joints": han_joints,
                        "distinct": len(support)},
    }
    try:
        steps["han_exact"] = _exact_han(config, ctx, channel, scale, cap)
    except SupportCapExceeded as e:
        app_logger.warning(f"Exact Han step at P̄={ctx.pbar}: {e}")
        steps["han_exact"] = {"ok": None, "note": str(e)}

    conditions = check_level_condition(appendix_b_instance())
    steps["level_condition"] = {"ok": all(c["ok"] for c in conditions),
                                "rows": [{k: str(v) if isinstance(v, Fraction) else v for k, v in c.items()}
                                         for c in conditions]}
    steps["theorem4"] = _theorem4_applications(ctx, sampler, theorem4_trials, cap)
    steps["passed"] = all(steps[name]["ok"] is not False
                          for name in ("chain_rule", "han_sampled", "han_exact", "level_condition", "theorem4"))
    app_logger.info(f"Lemma 1 sub-steps at P̄={ctx.pbar}: {'pass' if steps['passed'] else 'FAIL'}")
    return steps
