#!/usr/bin/env python3
"""
This script runs every built-in check of the toolkit at desk scale: partitions,
the Theorem 1 sweep, the aligned image set oracle, the GDoF region, the
certificates and the Lemma 1 numeric check.
"""

from fractions import Fraction

from src.ais_oracle import expected_cardinality
from src.data_models import CoefficientFamily, SamplerConfig
from src.gdof_region import builtin_certificates, check_certificate, redundant_constraints, theorem5_region, vertices
from src.mimo_lemma import lemma1_numeric_check, lemma1_submodular_steps, lemma1_violation_trend
from src.power_arith import PowerContext, part_low, part_window
from src.sumset_verify import builtin_instance, check_level_condition, power_contexts, theorem1_instance, verify_sweep
from src.trend_analyzer import TrendAnalyzer


def main():
    print("\n=== aisbound desk-scale demo ===\n")

    ctx = PowerContext.from_pbar(16)
    X = 200
    print(f"Partition of X={X} at P̄={ctx.pbar}:")
    print(f"  (X)_1/2 = {part_low(X, ctx, Fraction(1, 2))}, (X)^2_1/2 = {part_window(X, ctx, Fraction(1, 2), 2)}")

    print("\n--- Theorem 1 (λ₁=1, λ₂=1/2) ---\n")
    analyzer = TrendAnalyzer()
    reports = verify_sweep(theorem1_instance(1, Fraction(1, 2)), power_contexts([16, 32, 64]), trials=8)
    print(analyzer.reports_frame(reports).to_string(index=False))
    verdict = analyzer.sweep_verdict(reports)
    print(f"Verdict: {'PASS' if verdict['passed'] else 'FAIL'}")

    print("\n--- Level conditions of the built-in instances ---\n")
    for name in ("figure3", "figure5", "appendix-b"):
        rows = check_level_condition(builtin_instance(name))
        print(f"  {name}: {'satisfied' if all(r['ok'] for r in rows) else 'violated'} over {len(rows)} (k, s) pairs")

    print("\n--- Aligned image sets (λ₁=λ₂=1) ---\n")
    instance = theorem1_instance(1, 1)
    for pbar in (4, 8, 16):
        report = expected_cardinality(instance, PowerContext.from_pbar(pbar), draws=128)
        print(f"  P̄={pbar}: E|S_ν|={report.expected_cardinality:.3f} over {report.distinct_images} images")

    print("\n--- GDoF region ---\n")
    region = theorem5_region()
    points = vertices(region)
    print("  Vertices: " + ", ".join(f"({p[0]}, {p[1]})" for p in points))
    print(f"  Redundant constraints: {len(redundant_constraints(region, points))}")

    print("\n--- Certificates ---\n")
    for name, cert in builtin_certificates().items():
        verified, _ = check_certificate(cert)
        print(f"  {name}: {'verified' if verified else 'REJECTED'}")

    print("\n--- Lemma 1 (levels scaled by 1/2) ---\n")
    sampler = SamplerConfig(family=CoefficientFamily.UNIFORM_POSITIVE, seed=5)
    contexts = power_contexts([16, 64])
    lemma_reports = lemma1_numeric_check(contexts, sampler, trials=2)
    print(analyzer.reports_frame(lemma_reports).to_string(index=False))
    trend = lemma1_violation_trend(lemma_reports, analyzer=analyzer)
    steps = lemma1_submodular_steps(contexts[0], sampler, han_joints=1000)
    print(f"  Max normalized violation {trend['max_violation']:.4f}; sub-steps {'pass' if steps['passed'] else 'FAIL'}")

    print("\nDemo completed successfully!")


if __name__ == "__main__":
    main()
