import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
import yaml

from src.exceptions import NonFiniteError

logger = logging.getLogger(__name__)

REPORT_FILE = "report.yaml"
TABLE_TEXT_FILE = "table.txt"
TABLE_CSV_FILE = "table.csv"


@dataclass
class EvalRow:
    """
    One table row. metrics keys are flattened, for example stft_d.full or mel_d.side.
    """

    label: str
    metrics: Dict[str, float]
    gflops: Optional[float] = None
    note: Optional[str] = None

    def __post_init__(self):
        self.metrics = {key: float(value) for key, value in self.metrics.items()}
        for key, value in self.metrics.items():
            if not math.isfinite(value):
                raise NonFiniteError(f"Metric {key} of row {self.label!r} is {value}")
        if self.gflops is not None:
            self.gflops = float(self.gflops)


@dataclass
class EvalReport:
    task: Literal["bwe", "m2s"]
    rows: List[EvalRow]
    provenance: Dict[str, Any] = field(default_factory=dict)
    sweep: Optional[Dict[str, Any]] = None

    def row(self, label: str) -> EvalRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(f"No row labelled {label!r}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(report: Dict[str, Any]) -> "EvalReport":
        return EvalReport(
            task=report["task"],
            rows=[EvalRow(**row) for row in report["rows"]],
            provenance=report.get("provenance") or {},
            sweep=report.get("sweep"),
        )


def _format(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def _banded_cell(metrics: Dict[str, float], metric: str) -> str:
    full = metrics.get(f"{metric}.full")
    low = metrics.get(f"{metric}.low")
    high = metrics.get(f"{metric}.high")
    if low is None or high is None:
        return _format(full)
    return f"{_format(full)} ({_format(low)} / {_format(high)})"


def _pair_cell(metrics: Dict[str, float], metric: str, first: str, second: str) -> str:
    return f"{_format(metrics.get(f'{metric}.{first}'))} / {_format(metrics.get(f'{metric}.{second}'))}"


def format_table(report: EvalReport) -> pd.DataFrame:
    """
    Presentation table: "full (low / high)" cells for bandwidth extension,
    "left / right" and "mid / side" cells for mono-to-stereo.
    """
    records = []
    for row in report.rows:
        if report.task == "bwe":
            record = {
                "STFT-D full (low / high)": _banded_cell(row.metrics, "stft_d"),
                "Mel-D full (low / high)": _banded_cell(row.metrics, "mel_d"),
            }
        else:
            record = {
                "STFT-D Left / Right": _pair_cell(row.metrics, "stft_d", "left", "right"),
                "STFT-D Middle / Side": _pair_cell(row.metrics, "stft_d", "mid", "side"),
                "Mel-D Left / Right": _pair_cell(row.metrics, "mel_d", "left", "right"),
                "Mel-D Middle / Side": _pair_cell(row.metrics, "mel_d", "mid", "side"),
            }
        record["GFLOPs"] = "-" if row.gflops is None else f"{row.gflops:.2f}"
        records.append(record)
    return pd.DataFrame(records, index=[row.label for row in report.rows])


def emit_report(report: EvalReport, directory: str) -> Dict[str, str]:
    """
    Writes report.yaml (machine-readable), table.txt (presentation) and table.csv (raw metrics).

    :return: mapping from file kind to path
    """
    os.makedirs(directory, exist_ok=True)
    paths = {
        "report": os.path.join(directory, REPORT_FILE),
        "table_text": os.path.join(directory, TABLE_TEXT_FILE),
        "table_csv": os.path.join(directory, TABLE_CSV_FILE),
    }
    with open(paths["report"], "w") as file:
        yaml.safe_dump(report.to_dict(), file, sort_keys=False)
    with open(paths["table_text"], "w") as file:
        file.write(format_table(report).to_string() + "\n")
    pd.DataFrame(
        [{"label": row.label, **row.metrics, "gflops": row.gflops} for row in report.rows]
    ).to_csv(paths["table_csv"], index=False)
    logger.info(f"Wrote {report.task} report to {directory=}.")
    return paths


def load_report(path: str) -> EvalReport:
    """
    :param path: a report.yaml file or the directory containing one
    """
    if os.path.isdir(path):
        path = os.path.join(path, REPORT_FILE)
    with open(path, "r") as file:
        return EvalReport.from_dict(yaml.safe_load(file))
