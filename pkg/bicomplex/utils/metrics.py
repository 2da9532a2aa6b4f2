"""Monitoring and metrics utilities."""

import logging
import time
from functools import wraps
from typing import Any, Callable

from prometheus_client import Counter, Gauge, Histogram, generate_latest

from bicomplex.config import get_settings

logger = logging.getLogger(__name__)
settings = get_settings()


# Prometheus Metrics
CHECKS_TOTAL = Counter(
    "bicomplex_checks_total",
    "Identity checks evaluated",
    ["check", "status"],
)

OPERATOR_LATENCY = Histogram(
    "bicomplex_operator_duration_seconds",
    "Latency of symbolic operators",
    ["operator"],
    buckets=[0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1, 5, 30],
)

OPERATOR_CALLS = Counter(
    "bicomplex_operator_calls_total",
    "Symbolic operator invocations",
    ["operator", "status"],
)

HOMOTOPY_CACHE_PIECES = Gauge(
    "bicomplex_homotopy_cache_pieces",
    "Number of cached pseudo-inverse blocks of the horizontal differential",
)


class MetricsCollector:
    """Collect and export engine metrics."""

    def __init__(self):
        """Initialize metrics collector."""
        self.enabled = settings.enable_metrics

    def record_check(self, check: str, status: str) -> None:
        """Record the outcome of one identity check."""
        if not self.enabled:
            return

        CHECKS_TOTAL.labels(check=check, status=status).inc()

    def record_operator(self, operator: str, duration: float, status: str = "success") -> None:
        """Record operator latency and outcome."""
        if not self.enabled:
            return

        OPERATOR_CALLS.labels(operator=operator, status=status).inc()
        OPERATOR_LATENCY.labels(operator=operator).observe(duration)

    def update_cache_size(self, pieces: int) -> None:
        """Update the number of cached homotopy blocks."""
        if not self.enabled:
            return

        HOMOTOPY_CACHE_PIECES.set(pieces)

    def export_metrics(self) -> bytes:
        """Export metrics in Prometheus format."""
        return generate_latest()


# Global metrics instance
metrics = MetricsCollector()


def track_time(operation: str) -> Callable:
    """Decorator to track function execution time.

    Args:
        operation: Name of the operation being tracked
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            status = "success"
            try:
                return func(*args, **kwargs)
            except Exception:
                status = "error"
                raise
            finally:
                duration = time.perf_counter() - start_time
                metrics.record_operator(operation, duration, status)
                logger.debug(f"{operation} took {duration:.3f}s")

        return wrapper

    return decorator
