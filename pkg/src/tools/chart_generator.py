"""
src/tools/chart_generator.py

SVG charts of one metric across the lambda1 sweep: one line per arm x class
with 95% CI whiskers. Output is byte-stable for identical reports.
"""

import logging
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.tools.router_model import CLASS_LABELS, METRICS, TOTAL_LABEL  # noqa: E402
from src.tools.scenarios import MetricsReport  # noqa: E402

logger = logging.getLogger(__name__)

# Config
CHART_OUTPUT_DIR = "output/charts"
FIGSIZE = (10, 6)
SVG_HASH_SALT = "routerq"

METRIC_TITLES = {
    "W": "Mean response time",
    "MQL": "Mean queue length",
    "PL": "Packet loss",
    "UTIL": "Utilization",
}
METRIC_UNITS = {
    "W": "W (s)",
    "MQL": "MQL (packets)",
    "PL": "PL (fraction of offered)",
    "UTIL": "UTIL (fraction of server time)",
}


class ChartGenerator:
    """Render report metrics as SVG line charts"""

    def __init__(self, output_dir: str = CHART_OUTPUT_DIR, include_total: bool = False):
        self.output_dir = Path(output_dir)
        self.include_total = include_total

    def series(self, report: MetricsReport, metric: str) -> Dict[str, Dict[str, List[float]]]:
        """`{"<arm> <class>": {"x", "mean", "lo", "hi"}}` in arm order, then class"""
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r} (expected one of {', '.join(METRICS)})")
        rows = report.rows_for(metric=metric)
        classes = sorted({r.traffic_class for r in rows if r.traffic_class != TOTAL_LABEL}, key=_class_order)
        # UTIL always shows the router-wide total next to the class shares
        if self.include_total or metric == "UTIL":
            classes.append(TOTAL_LABEL)

        out: Dict[str, Dict[str, List[float]]] = {}
        for arm in report.arms:
            for traffic_class in classes:
                points = sorted(
                    (r for r in rows if r.arm == arm and r.traffic_class == traffic_class),
                    key=lambda r: r.lambda1,
                )
                if not points:
                    continue
                out[f"{arm} {traffic_class}"] = {
                    "x": [r.lambda1 for r in points],
                    "mean": [r.mean for r in points],
                    "lo": [r.ci95_lo for r in points],
                    "hi": [r.ci95_hi for r in points],
                }
        return out

    def emit_chart(self, report: MetricsReport, metric: str, path=None) -> Path:
        series = self.series(report, metric)
        out = Path(path) if path else self.output_dir / f"scenario_{report.scenario}_{metric}.svg"
        out.parent.mkdir(parents=True, exist_ok=True)

        with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=FIGSIZE)
            for label, s in series.items():
                yerr = [
                    [m - lo for m, lo in zip(s["mean"], s["lo"])],
                    [hi - m for m, hi in zip(s["mean"], s["hi"])],
                ]
                ax.errorbar(s["x"], s["mean"], yerr=yerr, marker="o", markersize=4,
                            capsize=3, linewidth=1.5, label=label)
            ax.set_xlabel("λ1 (packets/s)", fontsize=12)
            ax.set_ylabel(METRIC_UNITS[metric], fontsize=12)
            ax.set_title(f"{METRIC_TITLES[metric]}, scenario {report.scenario}", fontsize=14)
            ax.grid(True, alpha=0.3)
            if series:
                ax.legend(fontsize=9)
            fig.savefig(out, format="svg", bbox_inches="tight", metadata={"Date": None})
            plt.close(fig)

        logger.info(f"📊 {metric} chart ({len(series)} series) -> {out}")
        return out


def _class_order(label: str):
    known = list(CLASS_LABELS.values())
    return (known.index(label), label) if label in known else (len(known), label)


def emit_chart(report: MetricsReport, metric: str, path) -> Path:
    return ChartGenerator().emit_chart(report, metric, path)
