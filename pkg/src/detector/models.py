"""
Detections, detector settings and detector errors.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from ..core.errors import FomoError
from ..dataio.models import ClassLabel


class DetectorError(FomoError):
    """Base exception for detector errors."""
    pass


class DetectorConnectionError(DetectorError):
    """The detection endpoint refused or dropped the connection."""
    pass


class DetectorTimeoutError(DetectorError):
    """No response within the configured timeout."""
    pass


class ProtocolError(DetectorError):
    """A response does not follow the wire protocol."""
    pass


class TruncatedMessageError(ProtocolError):
    """The connection closed in the middle of a message."""
    pass


class InvalidDetectionError(ProtocolError):
    """A detection violates its invariants (e.g. score outside [0, 1])."""
    pass


class MissingMetadataError(DetectorError):
    """The oracle was called without a placement map or scale factor."""
    pass


@dataclass(frozen=True)
class Detection:
    """A detection in model-input pixel coordinates (fractional)."""
    x: float
    y: float
    w: float
    h: float
    class_label: ClassLabel
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidDetectionError(f"Detection score {self.score} outside [0, 1]")
        if self.w < 0 or self.h < 0:
            raise InvalidDetectionError(f"Detection has negative size {self.w}x{self.h}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.x, self.y, self.w, self.h


class OracleConfig(BaseModel):
    """Ground-truth oracle settings and perturbations."""

    jitter_px: float = Field(default=0.0, description="Max uniform shift of each box edge origin (input px)")
    jitter_per_downscale: float = Field(default=0.0, description="Extra jitter per unit of downscale above 1")
    drop_rate: float = Field(default=0.0, description="Probability of missing an object")
    spurious_rate: float = Field(default=0.0, description="Probability of one false box per call")
    min_input_px: float = Field(default=0.0, description="Objects smaller than this in input space are missed")
    min_coverage: float = Field(default=0.5, description="Share of an object's area that must lie inside a crop")
    rng_seed: int = Field(default=0, description="Perturbation seed")

    @field_validator("drop_rate", "spurious_rate", "min_coverage")
    @classmethod
    def validate_rate(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be in [0, 1]")
        return v

    @field_validator("jitter_px", "jitter_per_downscale", "min_input_px")
    @classmethod
    def validate_non_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("must be non-negative")
        return v


class DetectorConfig(BaseModel):
    """Detection stage settings."""

    kind: Literal["oracle", "remote"] = Field(default="oracle", description="Detector implementation")
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    endpoint: Optional[str] = Field(default=None, description="host:port of a remote detection server")
    timeout_s: float = Field(default=10.0, description="Per-request timeout (s)")
    min_overlap: float = Field(default=0.5, description="Back-mapping: minimum share of a detection inside its crop")

    @field_validator("timeout_s")
    @classmethod
    def validate_timeout(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("timeout_s must be positive")
        return v

    @field_validator("min_overlap")
    @classmethod
    def validate_min_overlap(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("min_overlap must be in [0, 1]")
        return v

    @field_validator("endpoint")
    @classmethod
    def validate_endpoint(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        parse_endpoint(v)
        return v


def parse_endpoint(endpoint: str) -> Tuple[str, int]:
    """Split ``host:port``."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"Endpoint must be host:port, got {endpoint!r}")
    return host, int(port)
