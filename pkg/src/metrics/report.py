"""
Metrics report files
"""

from pathlib import Path
from typing import Dict, Union

import pandas as pd

from ..core.serialization import write_json
from .evaluation import MetricsReport

REPORT_JSON = "metrics.json"
REPORT_CSV = "metrics_pairs.csv"


def pair_frame(report: MetricsReport) -> pd.DataFrame:
    """One row per pair for external statistics"""
    return pd.DataFrame([p.summary(report.pixel_size_um) for p in report.pairs])


def write_report(report: MetricsReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write the JSON report and the per-pair CSV"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = write_json(out_dir / REPORT_JSON, report.to_dict())
    csv_path = out_dir / REPORT_CSV
    pair_frame(report).to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")
    return {"json": json_path, "csv": csv_path}
