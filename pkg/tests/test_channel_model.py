import sys
import os
import unittest
from fractions import Fraction
from unittest import mock

import numpy as np

# Add parent directory to path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.channel_model import (CoefficientSampler, FixedCoefficients, draw_coefficients, draw_mimo_channel,
                               is_nondegenerate, lincomb, mimo_band_split, mimo_columns, mimo_ic_outputs,
                               mimo_receiver_layout, range_bound, realize_coefficients, support_check, t_length)
from src.data_models import CoefficientFamily, CoefficientKind, CombinationSpec, MimoIcConfig, SamplerConfig, TermSpec
from src.exceptions import NonDegeneracyError
from src.power_arith import PowerContext


class TestCoefficientSampler(unittest.TestCase):
    def setUp(self):
        self.config = SamplerConfig(seed=42)

    def test_seeded_draws_repeat(self):
        a = CoefficientSampler(self.config).draw(16)
        b = CoefficientSampler(self.config).draw(16)
        np.testing.assert_array_equal(a, b)
        spawned = CoefficientSampler(self.config).spawn(3).draw(16)
        self.assertFalse(np.array_equal(a, spawned))

    def test_draws_stay_in_support(self):
        values = np.abs(CoefficientSampler(self.config).draw(5000))
        self.assertTrue(np.all((values >= 1.0) & (values <= 2.0)))
        positive = CoefficientSampler(SamplerConfig(family=CoefficientFamily.UNIFORM_POSITIVE)).draw(1000)
        self.assertTrue(np.all(positive > 0))

    def test_support_check_matches_uniform_magnitude(self):
        report = support_check(CoefficientSampler(self.config), draws=20000)
        self.assertEqual(report["outside"], 0)
        self.assertLess(report["ks_statistic"], 0.02)

    def test_invalid_configs(self):
        with self.assertRaises(ValueError):
            SamplerConfig(delta1=2.0, delta2=1.0)
        with self.assertRaises(ValueError):
            # density 1/0.5 = 2 exceeds f_max = 1
            SamplerConfig(delta1=1.0, delta2=1.5, family=CoefficientFamily.UNIFORM_POSITIVE)
        with self.assertRaises(ValueError):
            draw_coefficients(CoefficientSampler(self.config), 0)
        with self.assertRaises(ValueError):
            FixedCoefficients(delta2=2.0, values=[1.0, -2.5])


class TestLinearCombinations(unittest.TestCase):
    def setUp(self):
        self.ctx = PowerContext.from_pbar(16)

    def test_floor_toward_zero_per_term(self):
        spec = CombinationSpec(terms=[TermSpec(source=0, value=1.5), TermSpec(source=1, value=-1.5)])
        # pfloor(4.5) + pfloor(-4.5) = 4 − 4
        self.assertEqual(lincomb(spec, [3, 3], [1.5, -1.5], self.ctx), 0)
        self.assertEqual(lincomb(spec, [3, 1], [1.5, -1.5], self.ctx), 3)

    def test_band_and_trim(self):
        spec = CombinationSpec(terms=[TermSpec(source=0, band=(1, 2), value=1.0),
                                      TermSpec(source=1, band=(0, 1), trim=("1/2", "1/4"), value=1.0)])
        # band (1, 2) of 200 is 12; (13)^{1/2}_{1/4} = (13 mod 4) // 2 = 0
        self.assertEqual(lincomb(spec, [200, 13], [1.0, 1.0], self.ctx), 12)
        with self.assertRaises(ValueError):
            lincomb(spec, [200], [1.0, 1.0], self.ctx)
        with self.assertRaises(ValueError):
            lincomb(spec, [200, 13], [1.0], self.ctx)

    def test_realize_coefficients(self):
        spec = CombinationSpec(terms=[TermSpec(source=0, kind=CoefficientKind.BOUNDED),
                                      TermSpec(source=1, value=0.5)])
        coeffs = realize_coefficients(spec, CoefficientSampler(SamplerConfig(seed=1)))
        self.assertEqual(coeffs[1], 0.5)
        self.assertTrue(1.0 <= abs(coeffs[0]) <= 2.0)

    def test_t_length_and_range_bound(self):
        spec = CombinationSpec(terms=[TermSpec(source=0, band=(0, "1/2"), value=1.0),
                                      TermSpec(source=1, trim=("1/4", 0), value=1.0)])
        eta = [Fraction(1), Fraction(1)]
        self.assertEqual(t_length(spec, eta), Fraction(1, 2))
        self.assertEqual(range_bound(spec, eta, self.ctx, SamplerConfig()), 2 * 2 * 4)
        wide = SamplerConfig(delta1=1.0, delta2=3.0, f_max=1.0)
        self.assertEqual(range_bound(spec, eta, self.ctx, wide), 2 * 3 * 4)
        self.assertEqual(t_length(CombinationSpec(), eta), 0)
        self.assertEqual(range_bound(CombinationSpec(), eta, self.ctx), 0)

    def test_bounded_range_holds_on_aligned_powers(self):
        ctx = PowerContext.from_pbar(16)
        spec = CombinationSpec(terms=[TermSpec(source=0, band=(0, "1/2"), kind=CoefficientKind.BOUNDED),
                                      TermSpec(source=1, band=(0, "1/2"), kind=CoefficientKind.BOUNDED)])
        sampler = CoefficientSampler(SamplerConfig(seed=9))
        bound = range_bound(spec, [1, 1], ctx, sampler.config)
        rng = np.random.default_rng(0)
        for _ in range(200):
            coeffs = realize_coefficients(spec, sampler)
            X = rng.integers(0, 16, size=2).tolist()
            self.assertLessEqual(abs(lincomb(spec, X, coeffs, ctx)), bound)


class TestMimoModel(unittest.TestCase):
    def setUp(self):
        self.config = MimoIcConfig()

    def test_band_split(self):
        split = mimo_band_split(self.config)
        self.assertEqual(split["1a"], (1, (0, 1, 2)))
        self.assertEqual(split["1c"], (1, (3, 4)))
        self.assertEqual(split["2a"], (2, (0, 1)))
        self.assertEqual(split["2c"], (2, (2, 3, 4)))

    def test_receiver_trim_levels(self):
        receiver1 = {b.name: b.low for b in mimo_receiver_layout(self.config, 1)}
        self.assertEqual(receiver1, {"1c": 0, "2a": Fraction(1, 4), "2c": Fraction(1, 2)})
        receiver2 = {b.name: b.low for b in mimo_receiver_layout(self.config, 2)}
        self.assertEqual(receiver2, {"2c": 0, "1a": Fraction(1, 3), "1c": Fraction(2, 3)})
        scaled = {b.name: (b.low, b.top) for b in mimo_receiver_layout(self.config, 1, "1/2")}
        self.assertEqual(scaled["2c"], (Fraction(1, 4), Fraction(1, 2)))

    def test_nondegeneracy(self):
        G = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]])
        self.assertTrue(is_nondegenerate(G, [1, 1, 2], det_min=0.5))
        self.assertFalse(is_nondegenerate(np.array([[1.0, 1.0], [1.0, 1.0]]), [1, 1], det_min=0.5))

    def test_nondegeneracy_budget(self):
        sampler = CoefficientSampler(SamplerConfig(seed=2))
        with mock.patch("src.channel_model.is_nondegenerate", return_value=False):
            with self.assertRaises(NonDegeneracyError):
                draw_mimo_channel(self.config, sampler, budget=3)
        channel = draw_mimo_channel(self.config, sampler, nondegenerate=False)
        self.assertEqual(channel.G1.shape, (2, 7))
        self.assertEqual(channel.G2.shape, (3, 8))

    def test_positive_family_draws_pass_rejection(self):
        sampler = CoefficientSampler(SamplerConfig(family=CoefficientFamily.UNIFORM_POSITIVE, seed=5))
        channel = draw_mimo_channel(self.config, sampler)
        self.assertLessEqual(channel.resamples, 1000)
        for G, receiver in ((channel.G1, 1), (channel.G2, 2)):
            transmitters = [c[0] for c in mimo_columns(mimo_receiver_layout(self.config, receiver))]
            self.assertTrue(is_nondegenerate(G, transmitters, self.config.det_min))

    def test_outputs(self):
        ctx = PowerContext.from_pbar(16)
        channel = draw_mimo_channel(self.config, CoefficientSampler(SamplerConfig(seed=4)))
        Y1, Y2 = mimo_ic_outputs(self.config, ctx, channel, [0] * 5, [0] * 5)
        self.assertEqual((Y1, Y2), ([0, 0], [0, 0, 0]))
        Y1, Y2 = mimo_ic_outputs(self.config, ctx, channel, [3, 1, 4, 1, 5], [9, 2, 6, 5, 3])
        self.assertEqual((len(Y1), len(Y2)), (2, 3))
        # the top value P̄ itself is a valid input
        Y1, Y2 = mimo_ic_outputs(self.config, ctx, channel, [16] * 5, [16] * 5)
        self.assertEqual((len(Y1), len(Y2)), (2, 3))
        with self.assertRaises(ValueError):
            mimo_ic_outputs(self.config, ctx, channel, [17] * 5, [0] * 5)
        with self.assertRaises(ValueError):
            mimo_ic_outputs(self.config, ctx, channel, [0] * 4, [0] * 5)


if __name__ == '__main__':
    unittest.main()
