"""
Run configuration.

RunConfig aggregates the per-module settings. Values come, in order of
precedence, from CLI overrides, a flat ``key = value`` config file, the
environment (``FOMO_`` prefix, ``__`` for nesting, e.g.
``FOMO_BGS__METHOD=hybrid``) and the defaults.

Config file example::

    # 8 replicas of one synthetic stream
    data_root = data/synth
    replicate = 8
    bgs.method = hybrid
    composer.policy = elastic:8
    detector.oracle.jitter_px = 2
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..bgs.models import BgsConfig
from ..composer.models import ComposerConfig
from ..core.errors import ConfigurationError
from ..dataio.models import DatasetConfig
from ..detector.models import DetectorConfig
from ..evaluation.report import EvalConfig
from ..extract.models import ExtractConfig
from ..utils.logging import get_logger

logger = get_logger(__name__)


class RunConfig(BaseSettings):
    """Everything a pipeline run needs."""

    model_config = SettingsConfigDict(
        env_prefix="FOMO_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Input
    data_root: Optional[str] = Field(default=None, description="Dataset root (<root>/<stream_id>/frames)")
    streams: List[str] = Field(default_factory=list, description="Stream ids to use (default: all)")
    replicate: int = Field(default=1, description="Copies of every stream")
    curate: bool = Field(default=True, description="Drop static objects from annotations on load")
    max_frames: Optional[int] = Field(default=None, description="Limit on decoded frames per stream")

    # Stages
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    bgs: BgsConfig = Field(default_factory=BgsConfig)
    extract: ExtractConfig = Field(default_factory=ExtractConfig)
    composer: ComposerConfig = Field(default_factory=ComposerConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)

    # Execution
    baseline: bool = Field(default=False, description="Full frames straight to the detector")
    schedule: Literal["tick", "free"] = Field(default="tick", description="Lock-step or event-driven lanes")
    workers: int = Field(default=0, description="Stream lane threads (0 = one per stream)")

    # Outputs
    output_dir: Optional[str] = Field(default=None, description="Directory for detections, report and timings")
    dump_masks: Optional[str] = Field(default=None, description="Directory for foreground mask PNGs")
    dump_crops: Optional[str] = Field(default=None, description="Directory for crop PNGs")
    dump_composites: Optional[str] = Field(default=None, description="Directory for composite PNGs + JSON")

    @field_validator("streams", mode="before")
    @classmethod
    def split_streams(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [s.strip() for s in v.split(",") if s.strip()]
        return v

    @field_validator("replicate")
    @classmethod
    def validate_replicate(cls, v: int) -> int:
        if v < 1:
            raise ValueError("replicate must be >= 1")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 0:
            raise ValueError("workers must be non-negative")
        return v

    @field_validator("max_frames")
    @classmethod
    def validate_max_frames(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("max_frames must be >= 1")
        return v

    @model_validator(mode="after")
    def validate_detector(self) -> "RunConfig":
        if self.detector.kind == "remote" and not self.detector.endpoint:
            raise ValueError("detector.endpoint is required when detector.kind = remote")
        return self

    def policy_label(self) -> str:
        return "baseline" if self.baseline else self.composer.policy


def parse_config_text(text: str) -> Dict[str, str]:
    """Flat ``key = value`` pairs; ``#`` starts a comment.

    Raises:
        ConfigurationError: On a line without '='
    """
    pairs: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"Config line {number} is not 'key = value': {raw!r}")
        pairs[key.strip()] = value.strip()
    return pairs


def _check_key(model: type, parts: List[str], dotted: str) -> None:
    fields = model.model_fields
    if parts[0] not in fields:
        raise ConfigurationError(f"Unknown config key {dotted!r}")
    if len(parts) > 1:
        annotation = fields[parts[0]].annotation
        if not (isinstance(annotation, type) and issubclass(annotation, BaseModel)):
            raise ConfigurationError(f"Config key {dotted!r} does not name a section")
        _check_key(annotation, parts[1:], dotted)


def nest(pairs: Mapping[str, Any]) -> Dict[str, Any]:
    """Dotted keys to nested dicts; empty or 'none' values become None."""
    nested: Dict[str, Any] = {}
    for dotted, value in pairs.items():
        parts = dotted.split(".")
        _check_key(RunConfig, parts, dotted)
        if isinstance(value, str) and value.lower() in ("", "none", "null"):
            value = None
        target = nested
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return nested


def _merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Build a RunConfig from a config file and CLI overrides.

    Args:
        path: Optional flat key=value file
        overrides: Dotted keys from the command line (None values are ignored)

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError: On unreadable files, unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Config file not found: {path}")
        values = nest(parse_config_text(path.read_text(encoding="utf-8")))
    if overrides:
        values = _merge(values, nest({k: v for k, v in overrides.items() if v is not None}))
    try:
        config = RunConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid run configuration: {e}") from e
    logger.debug(
        "Loaded run configuration",
        extra={'event_type': 'run_config_loaded', 'config_file': str(path) if path else None}
    )
    return config
