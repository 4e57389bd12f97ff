"""
Prometheus metrics for pipeline runs.
"""

import logging

try:
    from prometheus_client import Counter, Histogram, start_http_server
    PROMETHEUS_AVAILABLE = True
except ImportError:
    PROMETHEUS_AVAILABLE = False

logger = logging.getLogger(__name__)

if PROMETHEUS_AVAILABLE:
    frames_processed = Counter(
        'fomo_frames_processed_total',
        'Camera frames that reached extraction',
        ['stream_id']
    )

    crops_extracted = Counter(
        'fomo_crops_extracted_total',
        'Object crops cut from frames',
        ['stream_id']
    )

    crops_dropped = Counter(
        'fomo_crops_dropped_total',
        'Crops dropped by pool overflow'
    )

    compositions_total = Counter(
        'fomo_compositions_total',
        'Composite frames built',
        ['policy']
    )

    detector_calls = Counter(
        'fomo_detector_calls_total',
        'Detector invocations'
    )

    detector_failures = Counter(
        'fomo_detector_failures_total',
        'Failed detector invocations',
        ['error_type']
    )

    stage_latency = Histogram(
        'fomo_stage_seconds',
        'Time spent per pipeline stage',
        ['stage']
    )
else:
    # Dummy metrics if prometheus_client not available
    class DummyMetric:
        def labels(self, *args, **kwargs):
            return self
        def inc(self, *args, **kwargs):
            pass
        def observe(self, *args, **kwargs):
            pass

    frames_processed = DummyMetric()
    crops_extracted = DummyMetric()
    crops_dropped = DummyMetric()
    compositions_total = DummyMetric()
    detector_calls = DummyMetric()
    detector_failures = DummyMetric()
    stage_latency = DummyMetric()


_server_started = False


def start_metrics_server(port: int) -> bool:
    """Expose metrics over HTTP once per process; False when unavailable."""
    global _server_started
    if not PROMETHEUS_AVAILABLE:
        logger.warning("prometheus_client not installed, metrics server not started")
        return False
    if not _server_started:
        start_http_server(port)
        _server_started = True
        logger.info(f"Metrics server listening on :{port}", extra={'event_type': 'metrics_server_started'})
    return True
