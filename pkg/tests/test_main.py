import sys
import os
import io
import json
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

import pandas as pd

# Add parent directory to path so we can import our modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src import __version__
from src.artifact_writer import ArtifactWriter, sha256_of
from src.data_models import AisOracleBody
from src.main import EXIT_FAILED, EXIT_INPUT, EXIT_OK, AisBoundRunner, main, parse_arguments


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        with open(os.path.join(os.path.dirname(__file__), 'sample_instances.json'), 'r') as f:
            self.test_data = json.load(f)
        self.workdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.workdir, ignore_errors=True)

    def _instance(self, key: str) -> str:
        path = os.path.join(self.workdir, f"{key}.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.test_data[key], f)
        return path

    def _run(self, *argv: str):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_parse_arguments(self):
        args = parse_arguments(["verify", "in.json", "--seed", "0x10", "--trials", "3", "--strict"])
        self.assertEqual(args.command, "verify")
        self.assertEqual(args.seed, 16)
        self.assertEqual(args.trials, 3)
        self.assertTrue(args.strict)

    def test_region_writes_csv_and_manifest(self):
        path = self._instance("region_file")
        out = os.path.join(self.workdir, "region.csv")
        code, stdout, _ = self._run("region", path, "--out", out)
        self.assertEqual(code, EXIT_OK)
        frame = pd.read_csv(out, dtype=str)
        self.assertEqual(frame[["d1", "d2"]].values.tolist(), self.test_data["expected_vertices"])
        with open(out + ".manifest.json", "r", encoding="utf-8") as f:
            manifest = json.load(f)
        self.assertEqual(manifest["input_sha256"], sha256_of(path))
        self.assertEqual(manifest["tool_version"], __version__)
        self.assertEqual(manifest["tasks"], {"region": "ok"})
        self.assertIn("13/9", stdout)

    def test_reruns_are_byte_identical(self):
        path = self._instance("region_file")
        first, second = os.path.join(self.workdir, "a.csv"), os.path.join(self.workdir, "b.csv")
        self._run("region", path, "--out", first)
        self._run("region", path, "--out", second)
        with open(first, "rb") as a, open(second, "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_certificates(self):
        out = os.path.join(self.workdir, "sum_rate.json")
        code, stdout, _ = self._run("certificate", self._instance("certificate_sum_rate_file"), "--out", out)
        self.assertEqual(code, EXIT_OK)
        with open(out, "r", encoding="utf-8") as f:
            result = json.load(f)
        self.assertTrue(result["verified"])
        self.assertTrue(result["matches_region"])
        self.assertIn("manifest", result)

        out = os.path.join(self.workdir, "short.json")
        code, stdout, _ = self._run("certificate", self._instance("certificate_short_file"), "--out", out)
        self.assertEqual(code, EXIT_FAILED)
        self.assertIn("REJECTED", stdout)

        out = os.path.join(self.workdir, "builtin.json")
        code, _, _ = self._run("certificate", "--builtin", "weighted", "--out", out)
        self.assertEqual(code, EXIT_OK)

    def test_bad_monotone_exits_with_input_error(self):
        code, _, stderr = self._run("verify", self._instance("bad_monotone_file"),
                                    "--out", os.path.join(self.workdir, "bad.csv"))
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("(k, a, b) = (1, 1, 2)", stderr)

    def test_input_errors(self):
        code, _, _ = self._run("region", os.path.join(self.workdir, "missing.json"))
        self.assertEqual(code, EXIT_INPUT)
        code, _, _ = self._run("region", self._instance("theorem1_file"))
        self.assertEqual(code, EXIT_INPUT)
        code, _, _ = self._run("region", self._instance("unknown_field_file"), "--strict",
                               "--out", os.path.join(self.workdir, "strict.csv"))
        self.assertEqual(code, EXIT_INPUT)
        code, _, _ = self._run("verify", self._instance("figure5_with_lambda_file"),
                               "--out", os.path.join(self.workdir, "levels.csv"))
        self.assertEqual(code, EXIT_INPUT)
        code, _, _ = self._run("region", self._instance("region_file"), "--out", os.path.join(self.workdir, "r.txt"))
        self.assertEqual(code, EXIT_INPUT)
        malformed = os.path.join(self.workdir, "malformed.json")
        with open(malformed, "w", encoding="utf-8") as f:
            f.write("{not json")
        code, _, _ = self._run("region", malformed)
        self.assertEqual(code, EXIT_INPUT)

    def test_partition(self):
        out = os.path.join(self.workdir, "partition.csv")
        code, _, _ = self._run("partition", self._instance("partition_file"), "--out", out)
        self.assertEqual(code, EXIT_OK)
        frame = pd.read_csv(out)
        self.assertEqual(frame["composed_value"].tolist(), [0, 0, 1, 12])

    def test_verify_seed_is_recorded(self):
        out = os.path.join(self.workdir, "verify.csv")
        code, _, _ = self._run("verify", self._instance("theorem1_file"), "--out", out, "--trials", "2", "--seed", "9")
        self.assertIn(code, (EXIT_OK, EXIT_FAILED))
        frame = pd.read_csv(out)
        self.assertEqual(frame["pbar"].tolist(), [8, 16, 32])
        with open(out + ".manifest.json", "r", encoding="utf-8") as f:
            self.assertEqual(json.load(f)["seed"], 9)

    def test_lemma1_writes_steps(self):
        out = os.path.join(self.workdir, "lemma1.csv")
        code, _, _ = self._run("lemma1", self._instance("lemma1_file"), "--out", out)
        self.assertIn(code, (EXIT_OK, EXIT_FAILED))
        with open(os.path.join(self.workdir, "lemma1.steps.json"), "r", encoding="utf-8") as f:
            steps = json.load(f)
        self.assertTrue(steps["steps"]["passed"])
        self.assertEqual(len(pd.read_csv(out)), 2)


class TestAisRunner(unittest.TestCase):
    def test_growth_gate_decides_the_verdict(self):
        body = AisOracleBody(lambda1="1/2", lambda2="1/2", pbar=[2, 4, 8, 16])
        result = AisBoundRunner().run_ais(body, seed=1, trials=16)
        growth = result["growth"]
        self.assertNotIn("reports", growth)
        self.assertEqual(result["passed"], growth["passed"])
        self.assertEqual(growth["passed"], growth["exponent_ok"] and growth["residual_ok"] and growth["ratios_ok"])


class TestArtifactWriter(unittest.TestCase):
    def test_json_payload_carries_manifest(self):
        workdir = tempfile.mkdtemp()
        try:
            writer = ArtifactWriter(seed=3)
            writer.record("demo", "ok")
            out = os.path.join(workdir, "payload.json")
            writer.write({"value": 1.5}, out)
            with open(out, "r", encoding="utf-8") as f:
                document = json.load(f)
            self.assertEqual(document["value"], 1.5)
            self.assertEqual(document["manifest"]["seed"], 3)
            self.assertEqual(document["manifest"]["input_sha256"], sha256_of(payload=b""))
        finally:
            shutil.rmtree(workdir, ignore_errors=True)


if __name__ == '__main__':
    unittest.main()
