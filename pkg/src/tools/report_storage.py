"""
src/tools/report_storage.py

CSV persistence for MetricsReport, the run manifest and the per-packet trace.
All writes happen from the single CLI process after aggregation.
"""

import csv
import hashlib
import logging
from pathlib import Path
from typing import Dict, Iterable, List

from src import __version__
from src.tools.scenarios import MetricRow, MetricsReport, ScenarioSpec

logger = logging.getLogger(__name__)

CSV_HEADER = ["scenario", "arm", "lambda1", "class", "metric", "mean", "ci95_lo", "ci95_hi", "replications"]
TRACE_HEADER = ["packet_id", "class", "node", "node_arrival", "departure", "service_demand", "served_time"]


class ReportFormatError(ValueError):
    pass


def _num(value: float) -> str:
    return f"{value:.9g}"


def _sort_key(row: MetricRow):
    return (row.scenario, row.arm, row.lambda1, row.traffic_class, row.metric)


def emit_csv(report: MetricsReport, path) -> Path:
    """Write rows sorted by (scenario, arm, lambda1, class, metric); header only if empty"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in sorted(report.rows, key=_sort_key):
            writer.writerow([
                row.scenario, row.arm, _num(row.lambda1), row.traffic_class, row.metric,
                _num(row.mean), _num(row.ci95_lo), _num(row.ci95_hi), row.replications,
            ])
    logger.info(f"💾 Wrote {len(report.rows)} rows to {out}")
    return out


def load_csv(path) -> MetricsReport:
    """Rebuild a report (rows and arm order) from a CSV written by emit_csv"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ReportFormatError(f"{path}: unexpected header {header}")
        rows = []
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(CSV_HEADER):
                raise ReportFormatError(f"{path}:{line_no}: expected {len(CSV_HEADER)} fields, got {len(record)}")
            try:
                rows.append(MetricRow(
                    scenario=record[0], arm=record[1], lambda1=float(record[2]),
                    traffic_class=record[3], metric=record[4], mean=float(record[5]),
                    ci95_lo=float(record[6]), ci95_hi=float(record[7]), replications=int(record[8]),
                ))
            except ValueError as e:
                raise ReportFormatError(f"{path}:{line_no}: {e}") from None

    arms = list(dict.fromkeys(r.arm for r in rows))
    return MetricsReport(
        scenario=rows[0].scenario if rows else "",
        base_seed=0,
        replications=max((r.replications for r in rows), default=0),
        arms=arms,
        rows=rows,
    )


def config_hash(spec: ScenarioSpec) -> str:
    return hashlib.sha256(spec.to_config_text().encode("utf-8")).hexdigest()


def write_manifest(report: MetricsReport, spec: ScenarioSpec, duration: float, path) -> Path:
    """Key-value run manifest next to the CSV"""
    entries: Dict[str, str] = {
        "config_hash": config_hash(spec),
        "base_seed": str(report.base_seed),
        "tool_version": __version__,
        "scenario": report.scenario,
        "replications": str(report.replications),
        "arrivals_per_replication": str(spec.arrivals_per_replication),
        "wall_clock_seconds": f"{duration:.3f}",
        "failed_arms": str(len(report.failures)),
    }
    for arm, count in report.row_counts().items():
        entries[f"rows[{arm}]"] = str(count)

    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(f"{k} = {v}\n" for k, v in entries.items()), encoding="utf-8")
    logger.info(f"💾 Manifest: {out}")
    return out


def write_trace(records: Iterable[Dict], path) -> int:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for record in records:
            writer.writerow([
                record["packet_id"], record["class"], record["node"],
                repr(record["node_arrival"]), repr(record["departure"]),
                repr(record["service_demand"]), repr(record["served_time"]),
            ])
            written += 1
    logger.info(f"💾 Trace: {written} departures -> {out}")
    return written


def read_trace(path) -> List[Dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [
            {
                "packet_id": int(r["packet_id"]), "class": int(r["class"]), "node": r["node"],
                "node_arrival": float(r["node_arrival"]), "departure": float(r["departure"]),
                "service_demand": float(r["service_demand"]), "served_time": float(r["served_time"]),
            }
            for r in csv.DictReader(f)
        ]
