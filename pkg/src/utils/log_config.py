import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional

LOG_DIR = "logs"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


# ================== LOGGING SETUP ==================
def setup_logging(log_dir: Optional[str] = None, name: str = "routerq",
                  level: int = logging.INFO) -> logging.Logger:
    """Timestamped log file under `log_dir` plus console output"""
    log_folder = Path(log_dir or os.getenv("ROUTERQ_LOG_DIR", LOG_DIR))
    log_folder.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    log_file = log_folder / f"{name}_{timestamp}.log"

    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(),
        ],
        force=True,
    )
    return logging.getLogger(name)
