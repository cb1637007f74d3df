import sys
import os
import json
import unittest
from fractions import Fraction

import numpy as np

# Add parent directory to path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.data_models import TheoremInstance
from src.exceptions import InstanceValidationError
from src.output_maps import frozen_coefficients
from src.power_arith import PowerContext, part_window, pfloor
from src.sumset_verify import (appendix_b_applications, builtin_instance, check_level_condition, figure5_instance,
                               level_deficit, power_contexts, realize_outputs, theorem1_instance,
                               top_band_specialization, verify_sweep, z_kl_t_lengths)
from src.trend_analyzer import TrendAnalyzer


class TestBuiltinInstances(unittest.TestCase):
    def test_theorem1_shape(self):
        instance = theorem1_instance(1, "1/2")
        self.assertEqual((instance.N, instance.K, instance.M), (2, 1, 2))
        self.assertEqual(instance.source_level, Fraction(3, 2))
        self.assertEqual(instance.band_edges(1, 2), (Fraction(1), Fraction(3, 2)))
        with self.assertRaises(ValueError):
            theorem1_instance(-1, 1)

    def test_unknown_builtin(self):
        with self.assertRaises(ValueError):
            builtin_instance("figure9")

    def test_frozen_coefficients_repeat(self):
        instance = theorem1_instance(1, "1/2")
        self.assertEqual(frozen_coefficients(instance), frozen_coefficients(theorem1_instance(1, "1/2")))
        fixed = theorem1_instance(1, "1/2", fixed_coefficients={"1,1,2,1": 1.25})
        self.assertEqual(frozen_coefficients(fixed)["1,1,2,1"], 1.25)


class TestLevelCondition(unittest.TestCase):
    def test_builtins_satisfy_the_condition(self):
        for name in ("figure3", "figure5", "appendix-b"):
            rows = check_level_condition(builtin_instance(name))
            self.assertTrue(rows, name)
            self.assertTrue(all(row["ok"] for row in rows), name)
            self.assertEqual(level_deficit(builtin_instance(name)), 0)

    def test_theorem1_t_lengths(self):
        self.assertEqual(z_kl_t_lengths(theorem1_instance(1, "1/2")), [[Fraction(1, 2), Fraction(1)]])

    def test_deficit_when_upper_band_is_wider(self):
        instance = theorem1_instance("1/2", 1)
        rows = check_level_condition(instance)
        self.assertEqual(len(rows), 1)
        self.assertFalse(rows[0]["ok"])
        self.assertEqual(level_deficit(instance), Fraction(1, 2))
        self.assertEqual(level_deficit(theorem1_instance("1/4", 1)), Fraction(3, 4))
        self.assertEqual(level_deficit(theorem1_instance(1, 1)), 0)


class TestRealizeOutputs(unittest.TestCase):
    def setUp(self):
        self.ctx = PowerContext.from_pbar(16)
        self.instance = theorem1_instance(1, "1/2")
        self.h = {key: 1.0 for key in frozen_coefficients(self.instance)}

    def test_unit_coefficients(self):
        # 50 = 3·16 + 2, 13 = 0·16 + 13
        Z, Z_kl = realize_outputs(self.instance, [50, 13], [1.0, 1.0], self.h, self.ctx)
        self.assertEqual(Z, [63])
        self.assertEqual(Z_kl, [3, 18])

    def test_inputs_outside_the_alphabet(self):
        with self.assertRaises(ValueError):
            realize_outputs(self.instance, [64, 0], [1.0, 1.0], self.h, self.ctx)
        with self.assertRaises(ValueError):
            realize_outputs(self.instance, [1], [1.0, 1.0], self.h, self.ctx)

    def test_matches_direct_theorem1_formulas(self):
        # Z = L(X1, X2), Z_{1,1} = L1 of the top bands, Z_{1,2} = L2 of the bottom and top bands
        rng = np.random.default_rng(11)
        h = frozen_coefficients(self.instance)
        low, high = Fraction(1), Fraction(3, 2)
        for _ in range(10_000):
            X = rng.integers(0, 64, 2).tolist()
            g = (rng.uniform(1.0, 2.0, 2) * rng.choice([-1.0, 1.0], 2)).tolist()
            top = [part_window(x, self.ctx, low, high) for x in X]
            bottom = [part_window(x, self.ctx, 0, low) for x in X]
            Z, Z_kl = realize_outputs(self.instance, X, g, h, self.ctx)
            self.assertEqual(Z, [pfloor(g[0] * X[0]) + pfloor(g[1] * X[1])])
            self.assertEqual(Z_kl[0], pfloor(h["1,1,2,1"] * top[0]) + pfloor(h["1,1,2,2"] * top[1]))
            self.assertEqual(Z_kl[1], pfloor(h["1,2,1,1"] * bottom[0]) + pfloor(h["1,2,1,2"] * bottom[1])
                             + pfloor(h["1,2,2,1"] * top[0]) + pfloor(h["1,2,2,2"] * top[1]))


class TestVerifySweep(unittest.TestCase):
    def setUp(self):
        with open(os.path.join(os.path.dirname(__file__), 'sample_instances.json'), 'r') as f:
            self.test_data = json.load(f)

    def test_power_contexts(self):
        self.assertEqual([c.pbar for c in power_contexts([4, 8])], [4, 8])
        self.assertEqual([c.pbar for c in power_contexts(P=[100.0])], [10])
        self.assertEqual(power_contexts(), [])

    def test_sweep_reports(self):
        reports = verify_sweep(theorem1_instance(1, "1/2"), power_contexts([8, 16]), trials=2)
        self.assertEqual([r.pbar for r in reports], [8, 16])
        for report in reports:
            self.assertEqual(report.status, "ok")
            self.assertTrue(report.condition_ok)
            self.assertEqual(report.target, 0.0)
            self.assertAlmostEqual(report.gap, report.lhs.value - report.rhs.value)

    def test_top_band_specialization_is_exact(self):
        # Z_{1,1} and Z_{1,2} are the independent top bands of X1 and X2, each uniform over 4 values
        instance = top_band_specialization(1, "1/2")
        self.assertTrue(instance.name.startswith("top-bands"))
        reports = verify_sweep(instance, power_contexts([16]), trials=2)
        self.assertAlmostEqual(reports[0].rhs.value, 4.0, delta=1e-9)

    def test_cap_exceeded_is_reported(self):
        reports = verify_sweep(theorem1_instance(1, "1/2"), power_contexts([16]), trials=1, cap=10)
        self.assertEqual(reports[0].status, "cap-exceeded")
        self.assertIn("--cap", reports[0].note)

    def test_failing_level_condition_sets_target(self):
        reports = verify_sweep(theorem1_instance("1/2", 1), power_contexts([8]), trials=1)
        self.assertFalse(reports[0].condition_ok)
        self.assertEqual(reports[0].target, -0.5)

    def test_monotone_violation(self):
        instance = TheoremInstance(**self.test_data["bad_monotone_file"]["body"]["instance"])
        with self.assertRaises(InstanceValidationError) as ctx:
            verify_sweep(instance, power_contexts([16]), trials=1)
        self.assertEqual(ctx.exception.violation, (1, 1, 2))


class TestAcceptanceSweeps(unittest.TestCase):
    """Desk-scale sweeps over P̄ ∈ {16, …, 256}; the joint right-hand side needs a cap above the default."""

    def setUp(self):
        self.contexts = power_contexts([16, 32, 64, 128, 256])
        self.analyzer = TrendAnalyzer()

    def assertSweepPasses(self, reports):
        self.assertEqual([r.status for r in reports], ["ok"] * len(reports))
        verdict = self.analyzer.sweep_verdict(reports)
        self.assertTrue(verdict["passed"], verdict["reasons"])

    def test_theorem1_sweep(self):
        self.assertSweepPasses(verify_sweep(theorem1_instance(1, "1/2"), self.contexts, trials=64, cap=2 ** 22))

    def test_theorem1_sweep_with_identical_inputs(self):
        instance = theorem1_instance(1, "1/2", dependent=True)
        self.assertSweepPasses(verify_sweep(instance, self.contexts, trials=64, cap=2 ** 22))

    def test_wider_upper_band_meets_the_relaxed_target(self):
        reports = verify_sweep(theorem1_instance("1/2", 1), self.contexts, trials=64, cap=2 ** 22)
        self.assertTrue(all(r.target == -0.5 for r in reports))
        self.assertSweepPasses(reports)

    def test_figure5_sweep(self):
        instance = figure5_instance()
        self.assertTrue(all(row["ok"] for row in check_level_condition(instance)))
        self.assertSweepPasses(verify_sweep(instance, self.contexts, trials=16, cap=2 ** 22))

    def test_appendix_b_applications(self):
        instances = appendix_b_applications()
        self.assertEqual([i.name for i in instances], ["appendix-b-drop1", "appendix-b-drop2", "appendix-b-drop3"])
        for dropped, instance in enumerate(instances, start=1):
            self.assertTrue(all(row["ok"] for row in check_level_condition(instance)))
            pinned = [key for key, value in instance.fixed_coefficients.items() if value == 1.0]
            self.assertEqual(len(pinned), 2)
            self.assertTrue(all(not key.endswith(f",{dropped}") for key in pinned))
        reports = verify_sweep(instances[0], power_contexts([16]), trials=4)
        self.assertEqual(reports[0].status, "ok")


if __name__ == '__main__':
    unittest.main()
