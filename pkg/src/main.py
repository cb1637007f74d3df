#!/usr/bin/env python3
import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel

from src.ais_oracle import ORACLE_CAP, all_pairs_check, expected_cardinality, growth_check, quadrature_cardinality
from src.artifact_writer import ArtifactWriter
from src.data_models import (AisOracleBody, CertificateBody, InstanceKind, Lemma1Body,
                             PartitionDemoBody, RegionBody, TheoremVerifyBody)
from src.data_validator import InstanceValidator
from src.exceptions import AisBoundError, CertificateError, InstanceValidationError, SupportCapExceeded
from src.gdof_region import (Certificate, HalfPlane, LedgerInequality, PREMISES, builtin_certificates,
                             check_certificate, matches_region, redundant_constraints, theorem5_region,
                             to_halfplane, vertices)
from src.mimo_lemma import lemma1_numeric_check, lemma1_submodular_steps, lemma1_violation_trend
from src.power_arith import LevelVector, PowerContext, band_size, compose, composed_capacity, decompose, part_window
from src.sumset_verify import builtin_instance, check_level_condition, power_contexts, theorem1_instance, verify_sweep
from src.trend_analyzer import TrendAnalyzer
from src.utils.config import settings
from src.utils.logger import app_logger

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2

SUBCOMMANDS = {
    "partition": InstanceKind.PARTITION_DEMO,
    "verify": InstanceKind.THEOREM_VERIFY,
    "ais": InstanceKind.AIS_ORACLE,
    "region": InstanceKind.REGION,
    "certificate": InstanceKind.CERTIFICATE,
    "lemma1": InstanceKind.LEMMA1,
}

DEFAULT_EXTENSIONS = {"partition": "csv", "verify": "csv", "ais": "json", "region": "csv",
                      "certificate": "json", "lemma1": "csv"}


class AisBoundRunner:
    def __init__(self, threads: Optional[int] = None, cap: Optional[int] = None, strict: bool = False):
        self.validator = InstanceValidator(strict=strict)
        self.analyzer = TrendAnalyzer()
        self.threads = threads or settings.threads
        self.cap = cap
        app_logger.info("aisbound runner initialized")

    def load_instance(self, input_file: Optional[str], kind: InstanceKind,
                      overrides: Optional[Dict[str, Any]] = None) -> Tuple[str, BaseModel]:
        """Read, schema-check and validate an instance file; without a file the body defaults plus overrides are used."""
        if input_file is None:
            data = {"name": kind.value, "kind": kind.value, "body": dict(overrides or {})}
        else:
            app_logger.info(f"Loading instance from: {input_file}")
            if not os.path.exists(input_file):
                app_logger.error(f"File not found: {input_file}")
                raise FileNotFoundError(f"File not found: {input_file}")
            with open(input_file, "r", encoding="utf-8") as f:
                try:
                    data = json.load(f)
                except json.JSONDecodeError as e:
                    raise ValueError(f"malformed JSON in {input_file}: {e}") from e
            if not isinstance(data, dict):
                raise ValueError(f"{input_file} must hold a JSON object")
            if data.get("kind") != kind.value:
                raise ValueError(f"{input_file} describes a {data.get('kind')!r} instance, not {kind.value!r}")
            data.setdefault("body", {}).update(overrides or {})

        is_valid, errors, parsed = self.validator.validate_instance_file(data)
        if not is_valid:
            raise InstanceValidationError(errors, self.validator.last_violation)
        instance_file, body = parsed
        return instance_file.name, body

    def _cap(self, body_cap: Optional[int], default: int) -> int:
        return self.cap or body_cap or default

    # partition

    def run_partition(self, body: PartitionDemoBody) -> pd.DataFrame:
        ctx = PowerContext(P=body.P) if body.P is not None else PowerContext.from_pbar(body.pbar)
        levels = LevelVector(levels=body.levels)
        edges = levels.prefix_sums()
        rows = []
        for i, level in enumerate(levels.levels, start=1):
            rows.append({"band": i, "low": str(edges[i - 1]), "high": str(edges[i]), "level": str(level),
                         "band_size": band_size(ctx, level), "value": part_window(body.X, ctx, edges[i - 1], edges[i])})
        frame = pd.DataFrame(rows)
        if body.X < composed_capacity(ctx, levels):
            composed = decompose(body.X, ctx, levels)
            frame["composed_value"] = composed
            if compose(composed, ctx, levels) != body.X:
                raise AisBoundError(f"compositional layout does not reconstruct X={body.X}")
        return frame

    # verify

    def run_verify(self, body: TheoremVerifyBody, seed: int, trials: int) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        if body.builtin == "theorem1":
            instance = theorem1_instance(body.lambda1, body.lambda2, dependent=body.dependent)
        elif body.builtin is not None:
            instance = builtin_instance(body.builtin)
        else:
            instance = body.instance
        instance.sampler = instance.sampler.model_copy(update={"seed": seed})

        reports = verify_sweep(instance, power_contexts(body.pbar, body.P), trials,
                               cap=self._cap(body.cap, settings.support_cap), threads=self.threads,
                               method=body.method)
        verdict = self.analyzer.sweep_verdict(reports, tolerance=body.tolerance)
        verdict["cap_exceeded"] = [r.note for r in reports if r.status != "ok"]
        verdict["level_condition"] = check_level_condition(instance)
        return self.analyzer.reports_frame(reports), verdict

    # ais

    def run_ais(self, body: AisOracleBody, seed: int, trials: int) -> Dict[str, Any]:
        sampler = body.sampler.model_copy(update={"seed": seed})
        instance = theorem1_instance(body.lambda1, body.lambda2, sampler=sampler)
        cap = self._cap(body.cap, ORACLE_CAP)
        result: Dict[str, Any] = {"lambda1": body.lambda1, "lambda2": body.lambda2, "points": [], "passed": True}
        for ctx in power_contexts(body.pbar, body.P):
            report = expected_cardinality(instance, ctx, trials, cap=cap, include_histogram=body.include_histogram)
            if body.quadrature_resolution is not None:
                report.quadrature_cardinality = quadrature_cardinality(instance, ctx, body.quadrature_resolution, cap=cap)
            if body.pairs:
                rows = all_pairs_check(instance, ctx, trials, cap=cap)
                report.pa_matrix = rows
                result["passed"] = result["passed"] and all(r["ok"] for r in rows)
            result["points"].append(report.model_dump())
        pbars = [p["pbar"] for p in result["points"]]
        if len(pbars) >= 4:
            growth = growth_check(body.lambda1, body.lambda2, pbars, trials, sampler=sampler, cap=cap)
            growth.pop("reports")
            result["growth"] = growth
            result["passed"] = result["passed"] and growth["passed"]
        return result

    # region

    def run_region(self, body: RegionBody) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        if body.halfplanes:
            region = [HalfPlane(a1=h.a1, a2=h.a2, b=h.b) for h in body.halfplanes]
        else:
            region = theorem5_region()
        points = vertices(region)
        redundant = redundant_constraints(region, points)
        frame = pd.DataFrame([{"vertex": i, "d1": str(p[0]), "d2": str(p[1])} for i, p in enumerate(points, start=1)],
                             columns=["vertex", "d1", "d2"])
        summary = {
            "vertices": [[str(p[0]), str(p[1])] for p in points],
            "halfplanes": [h.model_dump(mode="json") for h in region],
            "redundant": [h.model_dump(mode="json") for h in redundant],
        }
        return frame, summary

    # certificate

    def _certificate(self, body: CertificateBody) -> Certificate:
        if body.builtin is not None:
            registry = builtin_certificates()
            if body.builtin not in registry:
                raise ValueError(f"unknown certificate {body.builtin!r}; choose from {sorted(registry)}")
            return registry[body.builtin]
        premises = []
        for spec in body.premises:
            if spec.name is not None:
                if spec.name not in PREMISES:
                    raise ValueError(f"unknown premise {spec.name!r}; choose from {sorted(PREMISES)}")
                premises.append((PREMISES[spec.name], spec.weight))
            else:
                premises.append((LedgerInequality(**spec.ledger.model_dump()), spec.weight))
        target = LedgerInequality(**body.target.model_dump())
        return Certificate(name="user", premises=premises, target=target)

    def run_certificate(self, body: CertificateBody) -> Dict[str, Any]:
        cert = self._certificate(body)
        verified, residual = check_certificate(cert)
        result = {"certificate": cert.name, "verified": verified,
                  "residual_terms": {k: str(v) for k, v in residual.terms.items()},
                  "bound_margin": str(residual.constant)}
        if verified and set(cert.target.terms) <= {"R1", "R2"} and cert.target.terms:
            halfplane = to_halfplane(cert.target)
            result["halfplane"] = halfplane.model_dump(mode="json")
            result["matches_region"] = matches_region(halfplane, theorem5_region())
        return result

    # lemma1

    def run_lemma1(self, body: Lemma1Body, seed: int, trials: int) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sampler = body.sampler.model_copy(update={"seed": seed})
        contexts = power_contexts(body.pbar, body.P)
        cap = self._cap(body.cap, settings.support_cap)
        reports = lemma1_numeric_check(contexts, sampler, trials, body.level_scale, body.mimo, cap, self.threads)
        trend = lemma1_violation_trend(reports, analyzer=self.analyzer)
        steps = lemma1_submodular_steps(contexts[0], sampler, body.han_joints, body.level_scale, body.mimo, cap)
        summary = {"trend": trend, "steps": steps,
                   "cap_exceeded": [r.note for r in reports if r.status != "ok"],
                   "passed": trend["passed"] and steps["passed"]}
        return self.analyzer.reports_frame(reports), summary


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Sum-set inequality and aligned image set verification toolkit")
    parser.add_argument("command", choices=sorted(SUBCOMMANDS), help="Task to run")
    parser.add_argument("instance", nargs="?", help="Path to a JSON instance file")
    parser.add_argument("--builtin", help="Built-in instance or certificate name instead of a file")
    parser.add_argument("--seed", type=lambda s: int(s, 0), help="Seed; overrides AISBOUND_SEED and the instance")
    parser.add_argument("--threads", type=int, help="Worker threads for coefficient draws")
    parser.add_argument("--out", help="Output path (.csv or .json)")
    parser.add_argument("--trials", type=int, help="Coefficient draws per power")
    parser.add_argument("--cap", type=int, help="Support cap for exact enumeration")
    parser.add_argument("--strict", action="store_true", help="Reject unknown fields in instance files")
    return parser.parse_args(argv)


def _print_frame(frame: pd.DataFrame) -> None:
    if not frame.empty:
        print(frame.to_string(index=False))


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)
    kind = SUBCOMMANDS[args.command]
    runner = AisBoundRunner(threads=args.threads, cap=args.cap, strict=args.strict)
    overrides = {"builtin": args.builtin} if args.builtin else {}

    try:
        name, body = runner.load_instance(args.instance, kind, overrides)
        seed = settings.resolve_seed(getattr(body, "seed", 0), args.seed)
        trials = args.trials or getattr(body, "trials", 1)
        out = args.out or getattr(body, "out", None) or os.path.join("results", f"{name}.{DEFAULT_EXTENSIONS[args.command]}")
        writer = ArtifactWriter(args.instance, seed if isinstance(body, (TheoremVerifyBody, AisOracleBody, Lemma1Body)) else None)
        status = EXIT_OK

        if args.command == "partition":
            frame = runner.run_partition(body)
            writer.record("partition", "ok")
            writer.write(frame, out)
            _print_frame(frame)

        elif args.command == "verify":
            frame, verdict = runner.run_verify(body, seed, trials)
            passed = verdict["passed"]
            writer.record("verify", "passed" if passed else "failed")
            writer.write(frame, out)
            _print_frame(frame)
            print(f"\nVerdict: {'PASS' if passed else 'FAIL'}")
            for reason in verdict["reasons"]:
                print(f"  - {reason}")
            if verdict["cap_exceeded"]:
                for note in verdict["cap_exceeded"]:
                    print(f"Error: {note}", file=sys.stderr)
                status = EXIT_INPUT
            elif not passed:
                status = EXIT_FAILED

        elif args.command == "ais":
            result = runner.run_ais(body, seed, trials)
            writer.record("ais", "passed" if result["passed"] else "failed")
            writer.write(result, out)
            for point in result["points"]:
                print(f"pbar={point['pbar']}: E|S|={point['expected_cardinality']:.4f}, "
                      f"E max|S|={point['expected_max_cardinality']:.4f}, images={point['distinct_images']}")
            if "growth" in result:
                print(f"Growth exponent {result['growth']['leading_exponent']:.3f} "
                      f"(reference {result['growth']['reference_exponent']})")
            status = EXIT_OK if result["passed"] else EXIT_FAILED

        elif args.command == "region":
            frame, summary = runner.run_region(body)
            writer.record("region", "ok")
            writer.write(frame if out.lower().endswith(".csv") else summary, out)
            _print_frame(frame)
            if summary["redundant"]:
                print(f"Redundant constraints: {len(summary['redundant'])}")

        elif args.command == "certificate":
            result = runner.run_certificate(body)
            writer.record("certificate", "verified" if result["verified"] else "rejected")
            writer.write(result, out)
            print(f"Certificate {result['certificate']}: {'VERIFIED' if result['verified'] else 'REJECTED'}")
            if result["residual_terms"]:
                print(f"Residual: {result['residual_terms']}")
            status = EXIT_OK if result["verified"] else EXIT_FAILED

        elif args.command == "lemma1":
            frame, summary = runner.run_lemma1(body, seed, trials)
            writer.record("lemma1", "passed" if summary["passed"] else "failed")
            writer.write(frame, out)
            writer.write(summary, os.path.splitext(out)[0] + ".steps.json")
            _print_frame(frame)
            print(f"\nMax normalized violation: {summary['trend']['max_violation']:.4f}; "
                  f"sub-steps {'pass' if summary['steps']['passed'] else 'FAIL'}")
            if summary["cap_exceeded"]:
                status = EXIT_INPUT
            elif not summary["passed"]:
                status = EXIT_FAILED

        return status

    except InstanceValidationError as e:
        for error in e.errors:
            print(f"Error: {error}", file=sys.stderr)
        if e.violation is not None:
            k, a, b = e.violation
            print(f"Monotone index condition violated at (k, a, b) = ({k}, {a}, {b})", file=sys.stderr)
        return EXIT_INPUT
    except SupportCapExceeded as e:
        app_logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except CertificateError as e:
        app_logger.error(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, ValueError, AisBoundError) as e:
        app_logger.error(f"Error in main process: {str(e)}")
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
