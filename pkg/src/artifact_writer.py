import hashlib
import json
import os
import time
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src import __version__
from src.data_models import RunManifest
from src.trend_analyzer import TrendAnalyzer
from src.utils.logger import app_logger

CSV_FLOAT_FORMAT = "%.10g"


def sha256_of(path: Optional[str] = None, payload: Optional[bytes] = None) -> str:
    digest = hashlib.sha256()
    if path is not None:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 16), b""):
                digest.update(chunk)
    elif payload is not None:
        digest.update(payload)
    return digest.hexdigest()


class ArtifactWriter:
    """Writes CSV and JSON results together with the run manifest."""

    def __init__(self, input_path: Optional[str] = None, seed: Optional[int] = None):
        self.input_sha256 = sha256_of(input_path) if input_path and os.path.exists(input_path) else sha256_of(payload=b"")
        self.seed = seed
        self.started = time.perf_counter()
        self.tasks: Dict[str, str] = {}
        self._converter = TrendAnalyzer()

    def record(self, task: str, status: str) -> None:
        self.tasks[task] = status

    def manifest(self) -> RunManifest:
        return RunManifest(input_sha256=self.input_sha256, seed=self.seed, tool_version=__version__,
                           wall_time_s=round(time.perf_counter() - self.started, 3), tasks=dict(self.tasks))

    def write_csv(self, frame: pd.DataFrame, output_file: str) -> str:
        """Deterministic CSV (LF, fixed float format, no index) plus <out>.manifest.json beside it."""
        os.makedirs(os.path.dirname(os.path.abspath(output_file)), exist_ok=True)
        frame.to_csv(output_file, index=False, lineterminator="\n", float_format=CSV_FLOAT_FORMAT, encoding="utf-8")
        sidecar = f"{output_file}.manifest.json"
        self._dump(self.manifest().model_dump(mode="json"), sidecar)
        app_logger.info(f"Wrote {len(frame)} rows to {output_file}")
        return sidecar

    def write_json(self, payload: Dict[str, Any], output_file: str) -> None:
        document = dict(self._converter._convert_numpy_types(payload))
        document["manifest"] = self.manifest().model_dump(mode="json")
        self._dump(document, output_file)
        app_logger.info(f"Wrote {output_file}")

    def write(self, data: Any, output_file: str) -> None:
        # Determine file type by extension
        _, ext = os.path.splitext(output_file.lower())
        if ext == ".csv":
            self.write_csv(data if isinstance(data, pd.DataFrame) else pd.DataFrame(data), output_file)
        elif ext == ".json":
            if isinstance(data, pd.DataFrame):
                data = {"rows": data.to_dict(orient="records")}
            self.write_json(data, output_file)
        else:
            app_logger.error(f"Unsupported file format: {ext}")
            raise ValueError(f"Unsupported file format: {ext}")

    @staticmethod
    def _dump(document: Dict[str, Any], output_file: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(output_file)), exist_ok=True)
        with open(output_file, "w", encoding="utf-8", newline="\n") as f:
            json.dump(document, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)
