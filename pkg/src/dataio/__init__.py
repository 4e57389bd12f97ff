"""Frame and annotation IO, curation and sequence selection."""

from .models import (
    Annotation, BoundingBox, ClassLabel, CLASS_CODES, DatasetConfig, FrameRecord, PixelBuffer,
)
from .frames import DatasetError, FrameReadError, load_sequence, read_frame, write_frame, frame_filename
from .annotations import (
    AnnotationError, ParseStats, parse_annotations, write_annotations, curate_annotations, index_by_frame,
)
from .sequences import (
    SequenceInfo, SelectedSequence, describe_sequence, discover_sequences, select_sequences,
    evaluated_frames, scene_occupancy, FRAMES_DIR, ANNOTATIONS_FILE,
)

__all__ = [
    "Annotation", "BoundingBox", "ClassLabel", "CLASS_CODES", "DatasetConfig", "FrameRecord", "PixelBuffer",
    "DatasetError", "FrameReadError", "load_sequence", "read_frame", "write_frame", "frame_filename",
    "AnnotationError", "ParseStats", "parse_annotations", "write_annotations", "curate_annotations",
    "index_by_frame",
    "SequenceInfo", "SelectedSequence", "describe_sequence", "discover_sequences", "select_sequences",
    "evaluated_frames", "scene_occupancy", "FRAMES_DIR", "ANNOTATIONS_FILE",
]
