import pandas as pd
import numpy as np
from fractions import Fraction
from typing import List, Dict, Any, Optional, Sequence
from src.data_models import GapReport
from src.utils.logger import app_logger

VERIFY_COLUMNS = ["P", "pbar", "lhs_bits", "rhs_bits", "gap_bits", "normalized_gap", "condition_ok"]

class TrendAnalyzer:
    def __init__(self):
        self.analysis_results = {}

    def reports_frame(self, reports: List[GapReport]) -> pd.DataFrame:
        rows = []
        for report in reports:
            if report.status != "ok":
                continue
            rows.append({
                "P": report.P,
                "pbar": report.pbar,
                "lhs_bits": report.lhs.value,
                "rhs_bits": report.rhs.value,
                "gap_bits": report.gap,
                "normalized_gap": report.normalized_gap,
                "condition_ok": report.condition_ok
            })
        return pd.DataFrame(rows, columns=VERIFY_COLUMNS)

    def fit_gap_trend(self, reports: List[GapReport]) -> Dict[str, Any]:
        """Least-squares line of the gap (bits) against log2 of P̄."""
        frame = self.reports_frame(reports)
        frame = frame[frame["pbar"] > 1]
        trend = {"points": len(frame), "slope": None, "intercept": None, "monotone_drop": None}

        if len(frame) >= 2:
            log_pbar = np.log2(frame["pbar"].to_numpy(dtype=float))
            slope, intercept = np.polyfit(log_pbar, frame["gap_bits"].to_numpy(dtype=float), 1)
            trend["slope"] = slope
            trend["intercept"] = intercept
            # largest decrease between consecutive normalized gaps
            trend["monotone_drop"] = max(0.0, -float(np.diff(frame["normalized_gap"].to_numpy()).min()))

        self.analysis_results["gap_trend"] = trend
        return trend

    def sweep_verdict(self, reports: List[GapReport], tolerance: float = 0.15, monotone_slack: float = 0.01) -> Dict[str, Any]:
        """
        A sweep passes when the gap keeps up with its target: the normalized gap at
        the largest P̄ is at least target − tolerance, the fitted slope of gap vs
        log2 P̄ is at least target − tolerance, and the normalized gap does not fall
        by more than monotone_slack between consecutive powers. A single point is
        judged on its normalized gap alone.
        """
        evaluated = sorted((r for r in reports if r.status == "ok"), key=lambda r: r.pbar)
        reasons = []
        if not evaluated:
            reasons.append("no power in the sweep could be evaluated")
            verdict = {"passed": False, "reasons": reasons}
            self.analysis_results["verdict"] = verdict
            return verdict

        target = evaluated[0].target
        trend = self.fit_gap_trend(evaluated)
        last = evaluated[-1]
        if last.normalized_gap < target - tolerance:
            reasons.append(f"normalized gap {last.normalized_gap:.4f} at P̄={last.pbar} below {target - tolerance:.4f}")
        if trend["slope"] is not None:
            if trend["slope"] < target - tolerance:
                reasons.append(f"gap slope {trend['slope']:.4f} bits per log2(pbar) below {target - tolerance:.4f}")
            if trend["monotone_drop"] > monotone_slack:
                reasons.append(f"normalized gap decreases by {trend['monotone_drop']:.4f} along the sweep")

        verdict = {"passed": not reasons, "reasons": reasons, "target": target, "trend": trend}
        self.analysis_results["verdict"] = verdict
        if reasons:
            app_logger.warning(f"Sweep failed: {'; '.join(reasons)}")
        else:
            app_logger.info("Sweep respects its target")
        return verdict

    def violation_trend(self, pbars: Sequence[int], violations: Sequence[float], limit: float = 0.2,
                        monotone_slack: float = 0.01) -> Dict[str, Any]:
        """Normalized violations (positive part) must stay below limit and not grow along the sweep."""
        values = np.maximum(np.asarray(violations, dtype=float), 0.0)
        growth = float(np.diff(values).max()) if len(values) > 1 else 0.0
        result = {
            "pbar": list(pbars),
            "violations": values.tolist(),
            "max_violation": float(values.max()) if len(values) else 0.0,
            "non_increasing": growth <= monotone_slack,
        }
        result["passed"] = result["max_violation"] <= limit and result["non_increasing"]
        self.analysis_results["violation_trend"] = result
        return result

    def fit_growth(self, pbars: Sequence[int], values: Sequence[float], exponent: float) -> Dict[str, Any]:
        """
        Fit values ≈ (a + b·log2 P̄)·P̄^exponent. The leading exponent is the
        log-log slope of values / (1 + log2 P̄), so one logarithmic factor does
        not count as polynomial growth.
        """
        pbar = np.asarray(pbars, dtype=float)
        y = np.asarray(values, dtype=float)
        scaled = y / pbar ** exponent
        design = np.column_stack([np.ones_like(pbar), np.log2(pbar)])
        (a, b), *_ = np.linalg.lstsq(design, scaled, rcond=None)
        residual = scaled - design @ np.array([a, b])
        leading = np.polyfit(np.log2(pbar), np.log2(y / (1.0 + np.log2(pbar))), 1)[0]

        growth = {
            "a": a,
            "b": b,
            "relative_residual": float(np.linalg.norm(residual) / np.linalg.norm(scaled)),
            "leading_exponent": leading,
            "ratios": (y[1:] / y[:-1]).tolist(),
            "reference_exponent": exponent
        }
        self.analysis_results["growth"] = growth
        return growth

    def generate_report(self) -> Dict[str, Any]:
        report = {
            "timestamp": pd.Timestamp.now().isoformat(),
            **self.analysis_results
        }

        # Convert NumPy and Fraction values for JSON serialization
        return self._convert_numpy_types(report)

    def _convert_numpy_types(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, Fraction):
            return str(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, dict):
            return {key: self._convert_numpy_types(value) for key, value in obj.items()}
        elif isinstance(obj, list):
            return [self._convert_numpy_types(item) for item in obj]
        elif isinstance(obj, tuple):
            return tuple(self._convert_numpy_types(item) for item in obj)
        else:
            return obj
