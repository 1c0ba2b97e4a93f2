from __future__ import annotations

import logging
import os
import sys
from typing import Optional


def build_logger(main_log_path: Optional[str] = None, *, level: str = "INFO") -> logging.Logger:
    """
    Configure the package logger. Messages go to stderr (stdout carries CSV
    output) and, when a path is given, to a UTF-8 log file as well.
    """
    logger = logging.getLogger("median_risk")
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    logger.propagate = False

    formatter = logging.Formatter("%(asctime)s | %(levelname)s | %(message)s")

    handlers: list[logging.Handler] = []
    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    handlers.append(stream)

    if main_log_path:
        log_dir = os.path.dirname(main_log_path)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(main_log_path, encoding="utf-8")
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)

    for h in list(logger.handlers):
        try:
            h.close()
        except Exception:
            pass
    logger.handlers.clear()
    for h in handlers:
        logger.addHandler(h)
    return logger
