import json
import logging
from datetime import datetime, timezone
from typing import Optional, Dict, Any

from config import Config


# ============================================================================
# INPUT UTILITIES
# ============================================================================

def parse_sentence(text: Optional[str]) -> tuple[str, ...]:
    """Split a sentence into whitespace-separated tokens."""
    if not text:
        return ()
    return tuple(text.split())


def parse_lengths(spec: str) -> list[int]:
    if not spec:
        return []

    parts = [p.strip() for p in spec.split(",") if p.strip()]
    lengths: list[int] = []
    for p in parts:
        try:
            n = int(p)
        except ValueError:
            raise ValueError(f"Invalid length '{p}'. Use a comma-separated list such as 2,4,8")
        if n < 0:
            raise ValueError("Lengths must be >= 0")
        lengths.append(n)
    return lengths


# ============================================================================
# LOGGING UTILITIES
# ============================================================================

class StructuredLogger:
    def __init__(self, name: str = "lcfrs"):
        self.logger = logging.getLogger(name)
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            formatter = logging.Formatter('%(message)s')
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)
            self.logger.setLevel(getattr(logging, Config.LOG_LEVEL, logging.INFO))

    def _emit(self, level: int, log_type: str, data: Dict[str, Any]):
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "type": log_type,
        }
        log_data.update(data)
        self.logger.log(level, json.dumps(log_data, default=str))

    def log_analysis(self, grammar: str, contact_rank: int, balanced: bool,
                     details: Optional[Dict[str, Any]] = None):
        data = {"grammar": grammar, "d": contact_rank, "balanced": balanced}
        if details:
            data.update(details)
        self._emit(logging.INFO, "analysis", data)

    def log_recognition(self, engine: str, n: int, accept: bool,
                        details: Optional[Dict[str, Any]] = None):
        data = {"engine": engine, "n": n, "accept": accept}
        if details:
            data.update(details)
        self._emit(logging.INFO, "recognition", data)

    def log_closure(self, algorithm: str, products: int, iterations: int,
                    details: Optional[Dict[str, Any]] = None):
        data = {"algorithm": algorithm, "products": products, "iterations": iterations}
        if details:
            data.update(details)
        self._emit(logging.DEBUG, "closure", data)

    def log_error(self, error: Exception, context: Optional[Dict[str, Any]] = None):
        data = {
            "error_type": type(error).__name__,
            "error_message": str(error)
        }
        if context:
            data.update(context)
        self._emit(logging.ERROR, "error", data)


# Global logger instance
logger = StructuredLogger()
