"""Detection stage: ground-truth oracle and remote wire-protocol client."""

from .models import (
    Detection, DetectorConfig, OracleConfig, parse_endpoint,
    DetectorError, DetectorConnectionError, DetectorTimeoutError, ProtocolError, TruncatedMessageError,
    InvalidDetectionError, MissingMetadataError,
)
from .base import Detector, DetectorStats
from .oracle import OracleDetector, oracle_detect, corresponding_annotations, map_to_input
from .remote import RemoteDetector
from .factory import create_detector

__all__ = [
    "Detection", "DetectorConfig", "OracleConfig", "parse_endpoint",
    "DetectorError", "DetectorConnectionError", "DetectorTimeoutError", "ProtocolError", "TruncatedMessageError",
    "InvalidDetectionError", "MissingMetadataError",
    "Detector", "DetectorStats",
    "OracleDetector", "oracle_detect", "corresponding_annotations", "map_to_input",
    "RemoteDetector", "create_detector",
]
