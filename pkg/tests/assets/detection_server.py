#!/usr/bin/env python3
"""
Reference detection server for tests and local runs.

Speaks the NDJSON wire protocol. By default every non-black connected
region of the model input is reported as one "object" detection, which is
enough to exercise the remote detector end to end on composites (crops are
separated by black borders). Faults can be injected per server to test
the client: response delays, truncated or malformed replies, invalid
scores, mismatched ids and dropped connections.

Usage:
    python tests/assets/detection_server.py --port 9100
"""

import argparse
import logging
import socketserver
import sys
import threading
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from src.bgs.models import BinaryMask
from src.dataio.models import ClassLabel, PixelBuffer
from src.detector.models import Detection
from src.detector.protocol import decode_request, dumps, encode_response
from src.extract.components import connected_components

logger = logging.getLogger(__name__)

Responder = Callable[[PixelBuffer], List[Detection]]

MODES = ("ok", "truncate", "malformed", "bad_score", "wrong_id", "close")


def blob_detections(pixels: PixelBuffer) -> List[Detection]:
    """One detection per 8-connected non-black region."""
    mask = BinaryMask(np.asarray(pixels.data).any(axis=2))
    return [
        Detection(x=float(b.x), y=float(b.y), w=float(b.w), h=float(b.h), class_label=ClassLabel.OBJECT, score=0.9)
        for b in connected_components(mask)
    ]


class _Handler(socketserver.StreamRequestHandler):

    def handle(self) -> None:
        server: "DetectionServer" = self.server.owner
        while True:
            line = self.rfile.readline()
            if not line:
                return
            request_id, pixels = decode_request(line)
            index = server.record(request_id)
            delay = server.delays[index] if index < len(server.delays) else 0.0
            if delay:
                time.sleep(delay)
            try:
                if not self._reply(server.mode, request_id, pixels, server.responder):
                    return
            except OSError:
                # client gave up on this request
                return

    def _reply(self, mode: str, request_id: int, pixels: PixelBuffer, responder: Responder) -> bool:
        if mode == "close":
            return False
        if mode == "truncate":
            self.wfile.write(encode_response(request_id, responder(pixels))[:-5])
            self.wfile.flush()
            return False
        if mode == "malformed":
            self.wfile.write(b"{not json\n")
        elif mode == "bad_score":
            self.wfile.write(dumps({"id": request_id, "detections": [
                {"x": 0, "y": 0, "w": 4, "h": 4, "class": "car", "score": 1.5},
            ]}))
        elif mode == "wrong_id":
            self.wfile.write(encode_response(request_id + 1, responder(pixels)))
        else:
            self.wfile.write(encode_response(request_id, responder(pixels)))
        self.wfile.flush()
        return True


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


class DetectionServer:
    """Threaded NDJSON detection server on localhost.

    Args:
        responder: Detections for a model input (default: blob_detections)
        mode: Reply behaviour, one of MODES
        delays: Seconds to wait before answering the n-th request received
        port: TCP port, 0 picks a free one
    """

    def __init__(
        self,
        responder: Optional[Responder] = None,
        mode: str = "ok",
        delays: Sequence[float] = (),
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        if mode not in MODES:
            raise ValueError(f"Unknown mode {mode!r}")
        self.responder = responder or blob_detections
        self.mode = mode
        self.delays = list(delays)
        self.request_ids: List[int] = []
        self._lock = threading.Lock()
        self._server = _TCPServer((host, port), _Handler)
        self._server.owner = self
        self._thread: Optional[threading.Thread] = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def record(self, request_id: int) -> int:
        with self._lock:
            self.request_ids.append(request_id)
            return len(self.request_ids) - 1

    def start(self) -> "DetectionServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "DetectionServer":
        return self.start()

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.stop()


def main():
    parser = argparse.ArgumentParser(description="Reference NDJSON detection server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9100)
    parser.add_argument("--mode", choices=MODES, default="ok")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    server = DetectionServer(mode=args.mode, host=args.host, port=args.port)
    logger.info(f"Serving detections on {server.endpoint}")
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        logger.info("Stopping detection server")
    finally:
        server._server.server_close()


if __name__ == "__main__":
    main()
