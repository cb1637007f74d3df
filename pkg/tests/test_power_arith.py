import sys
import os
import unittest
from fractions import Fraction

import numpy as np

# Add parent directory to path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.power_arith import (LevelVector, PowerContext, as_level, band_size, compose, composed_capacity, concat,
                             decompose, part_low, part_window, pfloor, pfloor_array, positive_part, rotate, trim)


class TestFloorAndLevels(unittest.TestCase):
    def test_pfloor_truncates_toward_zero(self):
        self.assertEqual(pfloor(2.7), 2)
        self.assertEqual(pfloor(-2.7), -2)
        self.assertEqual(pfloor(0.0), 0)
        self.assertEqual(pfloor(Fraction(-7, 2)), -3)
        np.testing.assert_array_equal(pfloor_array(np.array([1.5, -1.5, 3.0])), [1, -1, 3])

    def test_pfloor_rejects_non_finite(self):
        with self.assertRaises(ValueError):
            pfloor(float("inf"))
        with self.assertRaises(ValueError):
            pfloor_array(np.array([1.0, float("nan")]))

    def test_as_level_keeps_rationals_exact(self):
        self.assertEqual(as_level("13/9"), Fraction(13, 9))
        self.assertEqual(as_level(0.1), Fraction(1, 10))
        self.assertEqual(as_level(2), Fraction(2))
        with self.assertRaises(ValueError):
            as_level(True)
        self.assertEqual(positive_part("-1/3"), 0)
        self.assertEqual(positive_part("1/3"), Fraction(1, 3))

    def test_level_vector(self):
        levels = LevelVector(levels=["1/2", "1/4", "1/4"])
        self.assertEqual(levels.prefix_sums(), [0, Fraction(1, 2), Fraction(3, 4), 1])
        self.assertEqual(levels.total, 1)
        with self.assertRaises(ValueError):
            LevelVector(levels=["-1/2"])


class TestBandSizes(unittest.TestCase):
    def test_band_sizes_from_pbar(self):
        ctx = PowerContext.from_pbar(16)
        self.assertEqual(ctx.pbar, 16)
        self.assertEqual(band_size(ctx, 1), 16)
        self.assertEqual(band_size(ctx, "1/2"), 4)
        self.assertEqual(band_size(ctx, "1/4"), 2)
        self.assertEqual(band_size(ctx, 0), 1)
        self.assertEqual(band_size(ctx, 2), 256)

    def test_exact_powers_are_not_rounded_down(self):
        # 4096^(1/3) is 16 exactly; a float power lands just below it
        self.assertEqual(band_size(PowerContext.from_pbar(64), Fraction(2, 3)), 16)
        self.assertEqual(band_size(PowerContext.from_pbar(27), Fraction(1, 3)), 3)

    def test_non_square_power(self):
        ctx = PowerContext(P=10)
        self.assertEqual(ctx.pbar, 3)
        self.assertAlmostEqual(ctx.log2_pbar, np.log2(3))

    def test_invalid_power(self):
        with self.assertRaises(ValueError):
            PowerContext(P=0)
        with self.assertRaises(ValueError):
            PowerContext.from_pbar(0)
        with self.assertRaises(ValueError):
            band_size(PowerContext.from_pbar(4), -1)


class TestPartitions(unittest.TestCase):
    def test_reconstruction_identity_exhaustive(self):
        rng = np.random.default_rng(20240601)
        candidates = sorted({Fraction(n, d) for d in (1, 2, 3, 4) for n in range(0, 2 * d + 1)})
        for pbar in (4, 16, 64, 256):
            ctx = PowerContext.from_pbar(pbar)
            for _ in range(20):
                low, high = sorted(rng.choice(len(candidates), size=2))
                lam1, lam = candidates[low], candidates[high]
                if band_size(ctx, lam) > 2 ** 16:
                    continue
                X = np.arange(band_size(ctx, lam), dtype=np.int64)
                rebuilt = band_size(ctx, lam1) * part_window(X, ctx, lam1, lam) + part_low(X, ctx, lam1)
                np.testing.assert_array_equal(rebuilt, X, err_msg=f"P̄={pbar}, λ₁={lam1}, λ={lam}")

    def test_worked_example(self):
        ctx = PowerContext.from_pbar(16)
        # 200 = 12·16 + 8
        self.assertEqual(part_low(200, ctx, 1), 8)
        self.assertEqual(part_window(200, ctx, 1, 2), 12)
        self.assertEqual(part_window(200, ctx, "1/2", 1), 2)
        self.assertEqual(part_window(200, ctx, 1, 1), 0)

    def test_invalid_partition_arguments(self):
        ctx = PowerContext.from_pbar(16)
        with self.assertRaises(ValueError):
            part_window(5, ctx, 1, "1/2")
        with self.assertRaises(ValueError):
            part_low(-1, ctx, 1)
        with self.assertRaises(ValueError):
            part_low(np.array([3, -2]), ctx, 1)

    def test_trim(self):
        ctx = PowerContext.from_pbar(16)
        self.assertEqual(trim(200, ctx, 2, 1), 12)
        self.assertEqual(trim(200, ctx, "1/2", "1/2"), 0)
        self.assertEqual(trim(200, ctx, "1/4", "1/2"), 0)
        np.testing.assert_array_equal(trim(np.array([200, 7]), ctx, "1/4", "1/2"), [0, 0])

    def test_compositional_layout(self):
        ctx = PowerContext.from_pbar(16)
        levels = LevelVector(levels=["1/2", "1/4", "1/4", "1"])
        self.assertEqual(composed_capacity(ctx, levels), 4 * 2 * 2 * 16)
        self.assertEqual(decompose(200, ctx, levels), [0, 0, 1, 12])
        for X in (0, 1, 37, 255):
            self.assertEqual(compose(decompose(X, ctx, levels), ctx, levels), X)
        with self.assertRaises(ValueError):
            decompose(256, ctx, levels)
        with self.assertRaises(ValueError):
            compose([4, 0, 0, 0], ctx, levels)


class TestVectors(unittest.TestCase):
    def test_concat_and_rotate(self):
        self.assertEqual(concat([1, 2], [3]), [1, 2, 3])
        V = [1, 2, 3, 4]
        self.assertEqual(rotate(V, 0, 2), [1, 2])
        self.assertEqual(rotate(V, 2, 3), [3, 4, 1])
        self.assertEqual(rotate(V, 3, 0), [])

    def test_rotate_bounds(self):
        with self.assertRaises(ValueError):
            rotate([1, 2, 3], 3, 1)
        with self.assertRaises(ValueError):
            rotate([1, 2, 3], 0, 3)


if __name__ == '__main__':
    unittest.main()
