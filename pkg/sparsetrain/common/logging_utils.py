"""Logging utilities for consistent logging across modules."""

import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)


def _log_dir(log_dir: Optional[str] = None) -> Path:
    path = Path(log_dir or os.getenv("SPARSETRAIN_LOG_DIR", "logs"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def setup_logging(log_dir: Optional[str] = None, level: str = "INFO") -> None:
    """Setup logging configuration."""
    log_path = _log_dir(log_dir)

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_path / "sparsetrain.log"),
            logging.StreamHandler()
        ],
        force=True,
    )


def log_run_message(message: str) -> None:
    """Log run-related messages."""
    logging.info(f"[RUN] {message}")


def log_error(error_message: str, error_data: str = "", log_dir: Optional[str] = None) -> None:
    """Log error messages with optional error data."""
    try:
        log_path = _log_dir(log_dir)

        timestamp = datetime.now().strftime("%Y%m%dT%H%M%S")
        error_file = log_path / f"error-{timestamp}.log"

        with open(error_file, "w", encoding="utf-8") as f:
            f.write(f"Error occurred at: {datetime.now().isoformat()}\n")
            f.write(f"Error message: {error_message}\n")
            if error_data:
                f.write(f"Error data:\n{error_data}\n")

        logging.error(f"Error logged to: {error_file}")

    except Exception as e:
        logging.error(f"Failed to log error: {e}")
