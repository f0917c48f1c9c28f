import time
from pathlib import Path

from src.tools.chart_generator import ChartGenerator
from src.tools.report_storage import emit_csv, write_manifest
from src.tools.router_model import METRICS
from src.tools.scenarios import builtin_scenarios, run_scenario
from src.utils.log_config import setup_logging

# ================== CONFIG ==================
BASE_SEED = 7
PARALLEL = 8
OUTPUT_FOLDER = "output/reproduce"


def main():
    logger = setup_logging(name="reproduce")
    charts = ChartGenerator(output_dir=f"{OUTPUT_FOLDER}/charts")

    for spec in builtin_scenarios():
        started = time.time()
        report = run_scenario(spec, BASE_SEED, parallel=PARALLEL)
        out = Path(OUTPUT_FOLDER)
        emit_csv(report, out / f"scenario_{spec.id}.csv")
        write_manifest(report, spec, time.time() - started, out / f"scenario_{spec.id}.manifest")
        for metric in METRICS:
            charts.emit_chart(report, metric)
        logger.info(f"✓ Scenario {spec.id} reproduced")


if __name__ == "__main__":
    main()
