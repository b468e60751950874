"""
chaostat - Report tables
Comparison tables, the cost-error summary and histogram dumps as CSV/JSON files
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

from chaostat.stats.report import StatReport

logger = logging.getLogger(__name__)

COST_ERROR_COLUMNS = ("method", "seconds_per_trajectory", "avg_tv", "max_tv")


def cost_error_summary(reports: Sequence[StatReport]) -> List[Dict[str, Any]]:
    """One (compute seconds, Avg. TV) point per method, in report order"""
    if not reports:
        raise ValueError("cost-error summary needs at least one report")
    return [
        {
            "method": r.method,
            "seconds_per_trajectory": r.runtime_seconds,
            "avg_tv": r.avg_tv,
            "max_tv": r.max_tv,
        }
        for r in reports
    ]


def write_csv(path: Path, rows: Sequence[Dict[str, Any]], columns: Sequence[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return path


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2), encoding="utf-8")
    return path


def write_histograms(directory: Path, report: StatReport) -> List[Path]:
    """One CSV per compared distribution: bin edges, reference density, method density"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, pair in sorted(report.histograms.items()):
        ref, cand = pair["reference"], pair["method"]
        ref_density, cand_density = ref.density(), cand.density()
        rows = [
            {"lo": float(ref.edges[i]), "hi": float(ref.edges[i + 1]),
             "reference": float(ref_density[i]), "method": float(cand_density[i])}
            for i in range(len(ref.counts))
        ]
        written.append(write_csv(directory / f"{name}.csv", rows, ("lo", "hi", "reference", "method")))
    return written


def write_reports(out_dir: Path, reports: Sequence[StatReport], failures: Dict[str, str] = None,
                  histograms: bool = True) -> Dict[str, Path]:
    """reports.json, table.csv, cost_error.{csv,json} and histograms/<method>/*.csv"""
    out_dir = Path(out_dir)
    paths = {
        "reports": write_json(out_dir / "reports.json",
                              {"reports": [r.to_dict() for r in reports], "failures": failures or {}}),
        "table": write_csv(out_dir / "table.csv", [r.table_row() for r in reports]),
    }
    if reports:
        summary = cost_error_summary(reports)
        paths["cost_error_csv"] = write_csv(out_dir / "cost_error.csv", summary, COST_ERROR_COLUMNS)
        paths["cost_error_json"] = write_json(out_dir / "cost_error.json", summary)
    if histograms:
        for r in reports:
            write_histograms(out_dir / "histograms" / r.method, r)
    logger.info(f"💾 wrote {len(reports)} reports to {out_dir}")
    return paths
