# report_manager.py
import csv
import hashlib
import json
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from openpyxl import Workbook

from CGM_Engine import __version__
from CGM_Engine.exceptions import ReportError
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import RunMessages, format_message

logger = get_logger(__name__)

FORMATS = ("json", "csv", "xlsx")


def _plain(value: Any) -> Any:
    """numpy scalars/arrays to builtins; non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def config_hash(config: Dict[str, Any]) -> str:
    canonical = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def flatten(data: Any, prefix: str = "") -> List[Tuple[str, Any]]:
    """Nested dicts/lists to (dotted.key, scalar) rows in sorted key order."""
    rows: List[Tuple[str, Any]] = []
    if isinstance(data, dict):
        for key in sorted(data, key=str):
            rows.extend(flatten(data[key], f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(data, list):
        for i, item in enumerate(data):
            rows.extend(flatten(item, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, data))
    return rows


class ReportManager:
    """
    Collects one run's results and residuals and writes them as JSON, CSV or XLSX.

    A residual passes when its value is finite and at most its tolerance.
    """

    def __init__(self, command: str, config: Dict[str, Any], seed: int, tolerances: Dict[str, float], log_callback=None):
        self.command = command
        self.config = _plain(config)
        self.seed = seed
        self.tolerances = dict(tolerances)
        self.results: Dict[str, Any] = {}
        self.residuals: Dict[str, Dict[str, Any]] = {}
        self.fields: Dict[str, list] = {}
        self.default_path = os.environ.get("CGM_OUTPUT_DIR") or "output_files"
        self.log_callback = log_callback

    # ------------------------------------------------------------------
    # collection
    # ------------------------------------------------------------------
    def add_result(self, name: str, value: Any) -> None:
        self.results[name] = _plain(value)

    def add_residual(self, name: str, value: Optional[float], suite: Optional[str] = None) -> bool:
        """Record a residual judged against the tolerance of `suite` (defaults to name)."""
        tolerance = self.tolerances[suite or name]
        value = _plain(value)
        passed = value is not None and value <= tolerance
        self.residuals[name] = {"value": value, "tolerance": tolerance, "pass": passed}
        if not passed:
            self.log_warning(f"Residual '{name}' = {value} exceeds tolerance {tolerance:g}")
        return passed

    def add_field(self, name: str, rows: Iterable[Tuple[str, np.ndarray, np.ndarray]]) -> None:
        """Per-point residual values: (chart, points (n,4), values (n,)) blocks."""
        self.fields.setdefault(name, []).extend(rows)

    @property
    def all_passed(self) -> bool:
        return all(entry["pass"] for entry in self.residuals.values())

    @property
    def passed_count(self) -> int:
        return sum(1 for entry in self.residuals.values() if entry["pass"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "meta": {
                "version": __version__,
                "config_hash": config_hash(self.config),
                "seed": self.seed,
                "command": self.command,
            },
            "config": self.config,
            "results": self.results,
            "residuals": self.residuals,
        }

    # ------------------------------------------------------------------
    # writers
    # ------------------------------------------------------------------
    def default_output(self, fmt: str) -> str:
        return os.path.join(self.default_path, f"{self.command}_{config_hash(self.config)}.{fmt}")

    def write(self, path: Optional[str] = None, fmt: str = "json") -> str:
        """
        Write the report and return its path.

        Raises:
            ReportError: unknown format or unwritable path
        """
        if fmt not in FORMATS:
            raise ReportError(f"Unknown report format '{fmt}'")
        path = path or self.default_output(fmt)
        try:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            if fmt == "json":
                self._write_json(path)
            elif fmt == "csv":
                self._write_csv(path)
            else:
                self._write_xlsx(path)
        except OSError as e:
            message = format_message(RunMessages.REPORT_FAILED, path=path, reason=e)
            self.log_error(message)
            raise ReportError(message, path=path) from e
        self.log_info(format_message(RunMessages.REPORT_WRITTEN, path=path))
        return path

    def _write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.to_dict(), handle, sort_keys=True, indent=2, allow_nan=False)
            handle.write("\n")

    def _rows(self) -> List[Tuple[str, Any]]:
        rows = flatten(self.results, "results")
        for name in sorted(self.residuals):
            entry = self.residuals[name]
            rows.append((f"residuals.{name}.value", entry["value"]))
            rows.append((f"residuals.{name}.tolerance", entry["tolerance"]))
            rows.append((f"residuals.{name}.pass", entry["pass"]))
        return rows

    def _write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["quantity", "value"])
            for quantity, value in self._rows():
                writer.writerow([quantity, "" if value is None else repr(value) if isinstance(value, float) else value])

    def _write_xlsx(self, path: str) -> None:
        wb = Workbook()
        ws = wb.active
        ws.title = "Results"
        ws.append(["quantity", "value"])
        for quantity, value in flatten(self.results):
            ws.append([quantity, value if not isinstance(value, list) else str(value)])
        residuals = wb.create_sheet("Residuals")
        residuals.append(["name", "value", "tolerance", "pass"])
        for name in sorted(self.residuals):
            entry = self.residuals[name]
            residuals.append([name, entry["value"], entry["tolerance"], "PASS" if entry["pass"] else "FAIL"])
        meta = wb.create_sheet("Meta")
        for key, value in sorted(self.to_dict()["meta"].items()):
            meta.append([key, value])
        try:
            wb.save(path)
        finally:
            wb.close()

    def write_fields(self, path: str) -> str:
        """Plot-ready CSV of every per-point residual: suite,chart,u1,u2,u3,u4,value."""
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["suite", "chart", "u1", "u2", "u3", "u4", "value"])
                for name in sorted(self.fields):
                    for chart, points, values in self.fields[name]:
                        for point, value in zip(np.atleast_2d(points), values):
                            writer.writerow([name, chart, *(repr(float(x)) for x in point), repr(float(value))])
        except OSError as e:
            message = format_message(RunMessages.REPORT_FAILED, path=path, reason=e)
            self.log_error(message)
            raise ReportError(message, path=path) from e
        self.log_info(format_message(RunMessages.REPORT_WRITTEN, path=path))
        return path

    # ------------------------------------------------------------------
    # logging
    # ------------------------------------------------------------------
    def log_info(self, message: str) -> None:
        """Log info message to the logger and the optional console callback"""
        logger.info(message)
        if self.log_callback:
            self.log_callback(message)

    def log_warning(self, message: str) -> None:
        logger.warning(message)
        if self.log_callback:
            self.log_callback(message)

    def log_error(self, message: str) -> None:
        logger.error(message)
        if self.log_callback:
            self.log_callback(message)
