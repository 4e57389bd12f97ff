"""
Client for a detection server speaking the NDJSON wire protocol.

One persistent TCP connection per run; calls are serialized. A request
that times out is sent again once on a fresh connection.
"""

import socket
import threading
from typing import List, Optional

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..composer.models import CompositeFrame
from ..dataio.models import PixelBuffer
from ..utils.logging import get_logger
from .base import Detector
from .models import (
    Detection, DetectorConnectionError, DetectorError, DetectorTimeoutError, ProtocolError, TruncatedMessageError,
    parse_endpoint,
)
from .protocol import decode_response, encode_request

logger = get_logger(__name__)


class RemoteDetector(Detector):
    """Detector reached over TCP."""

    def __init__(self, endpoint: str, input_side: int, timeout_s: float = 10.0):
        super().__init__(input_side)
        self.endpoint = endpoint
        self.host, self.port = parse_endpoint(endpoint)
        self.timeout_s = timeout_s
        self._sock: Optional[socket.socket] = None
        self._reader = None
        self._next_id = 0
        self._lock = threading.Lock()

    def open(self) -> None:
        """Connect to the endpoint.

        Raises:
            DetectorConnectionError: If the endpoint refuses or is unreachable
        """
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout_s)
        except socket.timeout as e:
            raise DetectorTimeoutError(f"Connecting to {self.endpoint} timed out") from e
        except OSError as e:
            raise DetectorConnectionError(f"Cannot connect to {self.endpoint}: {e}") from e
        self._reader = self._sock.makefile("rb")
        logger.info(
            f"Connected to detection server {self.endpoint}",
            extra={'event_type': 'detector_connected', 'endpoint': self.endpoint}
        )

    def close(self) -> None:
        if self._reader is not None:
            self._reader.close()
            self._reader = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def _exchange(self, request_id: int, model_input: PixelBuffer) -> List[Detection]:
        self.open()
        try:
            self._sock.sendall(encode_request(request_id, model_input))
            line = self._reader.readline()
        except socket.timeout as e:
            # A late reply would desynchronize the stream
            self.close()
            self.stats.timeouts += 1
            raise DetectorTimeoutError(f"Request {request_id} to {self.endpoint} timed out") from e
        except OSError as e:
            self.close()
            raise DetectorConnectionError(f"Connection to {self.endpoint} failed: {e}") from e
        if not line:
            self.close()
            raise TruncatedMessageError(f"Server {self.endpoint} closed the connection before responding")
        try:
            return decode_response(line, request_id)
        except ProtocolError:
            self.close()
            raise

    @retry(
        stop=stop_after_attempt(2),
        wait=wait_exponential(multiplier=0.1, min=0.1, max=1),
        retry=retry_if_exception_type(DetectorTimeoutError),
        reraise=True,
    )
    def _request(self, request_id: int, model_input: PixelBuffer) -> List[Detection]:
        return self._exchange(request_id, model_input)

    def detect(self, model_input: PixelBuffer, composite: Optional[CompositeFrame] = None) -> List[Detection]:
        """Send one model input and wait for its detections.

        Raises:
            DetectorConnectionError: Connection refused or lost
            DetectorTimeoutError: No response after one retry
            ProtocolError: Malformed or truncated response, or invalid detection
        """
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            self.stats.calls += 1
            try:
                return self._request(request_id, model_input)
            except DetectorError as e:
                self.stats.record_failure(e)
                logger.warning(
                    f"Detector request {request_id} failed: {e}",
                    extra={'event_type': 'detector_failure', 'error_type': type(e).__name__}
                )
                raise
