import sys
import os
import json
import unittest

# Add parent directory to path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.data_validator import InstanceValidator
from src.data_models import InstanceKind, TheoremInstance, TheoremVerifyBody

class TestInstanceValidator(unittest.TestCase):
    def setUp(self):
        self.validator = InstanceValidator()

        # Load sample test data
        with open(os.path.join(os.path.dirname(__file__), 'sample_instances.json'), 'r') as f:
            self.test_data = json.load(f)

    def test_valid_instance_file(self):
        is_valid, errors, parsed = self.validator.validate_instance_file(self.test_data["theorem1_file"])
        self.assertTrue(is_valid)
        self.assertEqual(len(errors), 0)
        instance_file, body = parsed
        self.assertEqual(instance_file.kind, InstanceKind.THEOREM_VERIFY)
        self.assertIsInstance(body, TheoremVerifyBody)
        self.assertEqual(body.pbar, [8, 16, 32])

    def test_unknown_fields_warn_or_reject(self):
        data = self.test_data["unknown_field_file"]
        is_valid, _, _ = self.validator.validate_instance_file(data)
        self.assertTrue(is_valid)
        self.assertTrue(any("body.colour" in w for w in self.validator.warnings))

        strict = InstanceValidator(strict=True)
        is_valid, errors, parsed = strict.validate_instance_file(data)
        self.assertFalse(is_valid)
        self.assertIsNone(parsed)
        self.assertIn("colour", " ".join(errors))

    def test_levels_only_apply_to_theorem1(self):
        is_valid, errors, parsed = self.validator.validate_instance_file(self.test_data["figure5_with_lambda_file"])
        self.assertFalse(is_valid)
        self.assertIsNone(parsed)
        self.assertIn("only apply to the theorem1 built-in", " ".join(errors))

    def test_wrong_schema_version(self):
        is_valid, errors, _ = self.validator.validate_instance_file(self.test_data["wrong_version_file"])
        self.assertFalse(is_valid)
        self.assertIn("schema_version", " ".join(errors))
        self.assertEqual(len(self.validator.get_error_log()), 1)

    def test_bad_trim(self):
        instance = TheoremInstance(**self.test_data["bad_trim_instance"])
        is_valid, errors, _ = self.validator.validate_theorem_instance(instance)
        self.assertFalse(is_valid)
        self.assertTrue(any("above gamma" in error for error in errors))

    def test_oversized_coefficient(self):
        instance = TheoremInstance(**self.test_data["oversized_coefficient_instance"])
        is_valid, errors, _ = self.validator.validate_theorem_instance(instance)
        self.assertFalse(is_valid)
        self.assertTrue(any("exceeds delta2" in error for error in errors))

    def test_monotone_violation(self):
        is_valid, errors, _ = self.validator.validate_instance_file(self.test_data["bad_monotone_file"])
        self.assertFalse(is_valid)
        self.assertEqual(self.validator.last_violation, (1, 1, 2))
        self.assertTrue(any("monotone index condition" in error for error in errors))

    def test_business_rules(self):
        # K above N and an index outside [1, M]
        instance = TheoremInstance(name="wide", N=1, K=2, level_grid=[["1"], ["1"]], index_sets=[[[1]], [[2]]])
        errors = self.validator._apply_instance_rules(instance)
        self.assertTrue(any("exceeds N" in error for error in errors))
        self.assertTrue(any("not a subset" in error for error in errors))

if __name__ == '__main__':
    unittest.main()
