import logging
from prometheus_client import Counter, Histogram, start_http_server
from config.app_config import settings

logger = logging.getLogger(__name__)

POINTS_EVALUATED = Counter("points_evaluated_total", "Sample points evaluated", ["command", "family"])
POINTS_EXCLUDED = Counter("points_excluded_total", "Sample points excluded from verdicts", ["command", "reason"])
EVALUATION_LATENCY = Histogram("evaluation_latency_seconds", "Latency of curvature evaluations in seconds", ["operation"])
CHECK_FAILURES = Counter("check_failures_total", "Failed engine/oracle or identity checks", ["check"])


def attach_metrics() -> bool:
    """Expose the registry over HTTP when METRICS_PORT is configured."""
    if not settings.METRICS_PORT:
        return False
    start_http_server(settings.METRICS_PORT)
    logger.info(f"Prometheus metrics exposed on port {settings.METRICS_PORT}")
    return True
