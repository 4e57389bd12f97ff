"""
Detector construction from configuration.
"""

from typing import Mapping, Sequence, Tuple

from ..core.errors import ConfigurationError
from ..dataio.models import Annotation
from .base import Detector
from .models import DetectorConfig
from .oracle import OracleDetector
from .remote import RemoteDetector


def create_detector(
    config: DetectorConfig,
    input_side: int,
    ground_truth: Mapping[Tuple[str, int], Sequence[Annotation]],
) -> Detector:
    """Oracle or remote detector per ``config.kind``.

    Raises:
        ConfigurationError: If a remote detector has no endpoint
    """
    if config.kind == "remote":
        if not config.endpoint:
            raise ConfigurationError("detector.endpoint is required for a remote detector")
        return RemoteDetector(config.endpoint, input_side=input_side, timeout_s=config.timeout_s)
    return OracleDetector(input_side=input_side, ground_truth=ground_truth, config=config.oracle)
