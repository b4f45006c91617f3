from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter
import logging

from config.app_config import settings

logger = logging.getLogger(__name__)

tracer = trace.get_tracer("curvature-homogeneity")


def setup_tracing() -> bool:
    """
    Install a console span exporter when TRACING_ENABLED is set.
    Failures are logged and the run continues untraced.
    """
    if not settings.TRACING_ENABLED:
        return False
    try:
        resource = Resource.create({"service.name": "curvature-homogeneity"})
        provider = TracerProvider(resource=resource)
        provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter()))
        trace.set_tracer_provider(provider)
        logger.info("OpenTelemetry tracing using console exporter")
        return True
    except Exception as e:
        logger.error(f"Failed to setup OpenTelemetry tracing: {e}")
        logger.warning("Continuing without tracing")
        return False
