"""
Detection wire protocol: newline-delimited JSON over TCP.

Request:
    {"id": <int>, "w": <int>, "h": <int>, "rgb_b64": "<base64 of row-major RGB bytes>"}

Response:
    {"id": <int>, "detections": [{"x": f, "y": f, "w": f, "h": f, "class": "<label>", "score": f}, ...]}

Boxes are in model-input pixels.
"""

import base64
from typing import Any, Dict, List, Tuple

import numpy as np
import orjson

from ..dataio.models import ClassLabel, PixelBuffer
from .models import Detection, InvalidDetectionError, ProtocolError, TruncatedMessageError

NEWLINE = b"\n"
BOX_FIELDS = ("x", "y", "w", "h")


def dumps(message: Dict[str, Any]) -> bytes:
    """One message as an NDJSON line."""
    return orjson.dumps(message) + NEWLINE


def loads(line: bytes) -> Dict[str, Any]:
    """Decode one NDJSON line.

    Raises:
        TruncatedMessageError: If the line has no terminating newline
        ProtocolError: If the line is not a JSON object
    """
    if not line.endswith(NEWLINE):
        raise TruncatedMessageError(f"Message truncated after {len(line)} bytes")
    try:
        message = orjson.loads(line)
    except orjson.JSONDecodeError as e:
        raise ProtocolError(f"Malformed message: {e}") from e
    if not isinstance(message, dict):
        raise ProtocolError("Message is not a JSON object")
    return message


def encode_request(request_id: int, pixels: PixelBuffer) -> bytes:
    return dumps({
        "id": request_id,
        "w": pixels.width,
        "h": pixels.height,
        "rgb_b64": base64.b64encode(np.ascontiguousarray(pixels.data).tobytes()).decode("ascii"),
    })


def decode_request(line: bytes) -> Tuple[int, PixelBuffer]:
    """Server side: request id and pixels."""
    message = loads(line)
    try:
        w, h = int(message["w"]), int(message["h"])
        raw = base64.b64decode(message["rgb_b64"], validate=True)
        request_id = int(message["id"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"Malformed request: {e}") from e
    if len(raw) != w * h * 3:
        raise ProtocolError(f"Request carries {len(raw)} bytes for a {w}x{h} image")
    return request_id, PixelBuffer(np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy())


def detection_to_wire(detection: Detection) -> Dict[str, Any]:
    return {
        "x": detection.x, "y": detection.y, "w": detection.w, "h": detection.h,
        "class": detection.class_label.value, "score": detection.score,
    }


def encode_response(request_id: int, detections: List[Detection]) -> bytes:
    return dumps({"id": request_id, "detections": [detection_to_wire(d) for d in detections]})


def _parse_detection(item: Any) -> Detection:
    if not isinstance(item, dict):
        raise ProtocolError("Detection is not a JSON object")
    try:
        box = [float(item[k]) for k in BOX_FIELDS]
        score = float(item["score"])
        label = item["class"]
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"Malformed detection: {e}") from e
    try:
        class_label = ClassLabel(label)
    except ValueError as e:
        raise ProtocolError(f"Unknown class {label!r}") from e
    if not 0.0 <= score <= 1.0:
        raise InvalidDetectionError(f"Detection score {score} outside [0, 1]")
    return Detection(x=box[0], y=box[1], w=box[2], h=box[3], class_label=class_label, score=score)


def decode_response(line: bytes, expected_id: int) -> List[Detection]:
    """Client side: detections of the response to `expected_id`.

    Raises:
        TruncatedMessageError: If the line has no terminating newline
        InvalidDetectionError: If a detection's score is outside [0, 1]
        ProtocolError: On any other malformed content
    """
    message = loads(line)
    if message.get("id") != expected_id:
        raise ProtocolError(f"Response id {message.get('id')!r} does not match request {expected_id}")
    items = message.get("detections")
    if not isinstance(items, list):
        raise ProtocolError("Response has no detections list")
    return [_parse_detection(item) for item in items]
