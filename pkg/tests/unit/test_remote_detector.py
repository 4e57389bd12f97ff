"""
Unit tests for the remote detector client against the test-double server.
"""

import pytest
import socket
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from src.dataio.models import ClassLabel, PixelBuffer
from src.detector.models import (
    DetectorConnectionError, DetectorTimeoutError, InvalidDetectionError, ProtocolError, TruncatedMessageError,
)
from src.detector.remote import RemoteDetector
from tests.assets.detection_server import DetectionServer


def model_input() -> PixelBuffer:
    pixels = PixelBuffer.blank(32, 32)
    pixels.data[4:10, 6:16] = 200
    pixels.data[20:30, 20:24] = 90
    return pixels


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestRemoteDetector:
    """Request/response exchange."""

    def test_detects_blobs(self):
        with DetectionServer() as server, RemoteDetector(server.endpoint, input_side=32, timeout_s=2) as detector:
            detections = detector.detect(model_input())
        assert [d.as_tuple() for d in detections] == [(6.0, 4.0, 10.0, 6.0), (20.0, 20.0, 4.0, 10.0)]
        assert all(d.class_label == ClassLabel.OBJECT for d in detections)

    def test_one_connection_and_increasing_ids(self):
        with DetectionServer() as server, RemoteDetector(server.endpoint, input_side=32, timeout_s=2) as detector:
            for _ in range(3):
                detector.detect(model_input())
            assert server.request_ids == [0, 1, 2]
            assert detector.stats.calls == 3
            assert detector.stats.failed == 0

    def test_timeout_retried_once(self):
        with DetectionServer(delays=[1.0]) as server:
            with RemoteDetector(server.endpoint, input_side=32, timeout_s=0.3) as detector:
                detections = detector.detect(model_input())
            assert len(detections) == 2
            # the same request went out twice
            assert server.request_ids == [0, 0]
        assert detector.stats.timeouts == 1
        assert detector.stats.failed == 0

    def test_second_timeout_fails(self):
        with DetectionServer(delays=[1.0, 1.0]) as server:
            detector = RemoteDetector(server.endpoint, input_side=32, timeout_s=0.3)
            with pytest.raises(DetectorTimeoutError):
                detector.detect(model_input())
            detector.close()
        assert detector.stats.timeouts == 2
        assert detector.stats.failures == {"DetectorTimeoutError": 1}

    def test_connection_refused(self):
        detector = RemoteDetector(f"127.0.0.1:{free_port()}", input_side=32, timeout_s=1)
        with pytest.raises(DetectorConnectionError):
            detector.detect(model_input())
        assert detector.stats.failures == {"DetectorConnectionError": 1}

    @pytest.mark.parametrize("mode, error", [
        ("truncate", TruncatedMessageError),
        ("close", TruncatedMessageError),
        ("malformed", ProtocolError),
        ("bad_score", InvalidDetectionError),
        ("wrong_id", ProtocolError),
    ])
    def test_faulty_server(self, mode, error):
        with DetectionServer(mode=mode) as server:
            detector = RemoteDetector(server.endpoint, input_side=32, timeout_s=2)
            with pytest.raises(error):
                detector.detect(model_input())
            detector.close()
        assert detector.stats.failed == 1

    def test_reconnects_after_failure(self):
        with DetectionServer(mode="close") as server:
            detector = RemoteDetector(server.endpoint, input_side=32, timeout_s=2)
            with pytest.raises(TruncatedMessageError):
                detector.detect(model_input())
            server.mode = "ok"
            assert len(detector.detect(model_input())) == 2
            detector.close()
        assert detector.stats.calls == 2
