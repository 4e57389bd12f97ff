"""
Frame sequence IO.

A sequence is a directory of still images named by zero-padded frame index
(`000000.png`, `000001.png`, ...). Frames are decoded lazily, one at a time.
"""

from pathlib import Path
from typing import Iterator, List, Optional, Union

import cv2
import numpy as np

from ..core.errors import FomoError, ConfigurationError
from ..utils.logging import get_logger
from .models import FrameRecord, PixelBuffer

logger = get_logger(__name__)

FRAME_SUFFIXES = (".ppm", ".png")
FRAME_NAME_WIDTH = 6


class DatasetError(FomoError):
    """Dataset layout or content violates the expected format."""
    pass


class FrameReadError(DatasetError):
    """A frame file could not be decoded."""

    def __init__(self, path: Path, reason: str = "unreadable or corrupt image"):
        self.path = Path(path)
        super().__init__(f"Cannot read frame {self.path}: {reason}")


def list_frame_files(dir_path: Union[str, Path]) -> List[Path]:
    """Numerically ordered frame files of a sequence directory.

    Raises:
        DatasetError: If the directory does not exist
    """
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise DatasetError(f"Frame directory not found: {dir_path}")

    files = []
    for path in dir_path.iterdir():
        if path.suffix.lower() not in FRAME_SUFFIXES or not path.stem.isdigit():
            continue
        files.append(path)
    files.sort(key=lambda p: int(p.stem))
    return files


def read_frame(path: Union[str, Path]) -> PixelBuffer:
    """Decode one still image into an RGB PixelBuffer.

    Raises:
        FrameReadError: If the file cannot be decoded
    """
    path = Path(path)
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        raise FrameReadError(path)
    return PixelBuffer(np.ascontiguousarray(cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)))


def write_frame(path: Union[str, Path], pixels: PixelBuffer) -> Path:
    """Write an RGB PixelBuffer as PNG or PPM (chosen by suffix)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = [cv2.IMWRITE_PNG_COMPRESSION, 1] if path.suffix.lower() == ".png" else []
    if not cv2.imwrite(str(path), cv2.cvtColor(pixels.data, cv2.COLOR_RGB2BGR), params):
        raise DatasetError(f"Failed to write frame {path}")
    return path


def frame_filename(frame_index: int, suffix: str = ".png") -> str:
    return f"{frame_index:0{FRAME_NAME_WIDTH}d}{suffix}"


def _default_stream_id(dir_path: Path) -> str:
    # <root>/<stream_id>/frames -> stream_id
    if dir_path.name == "frames" and dir_path.parent.name:
        return dir_path.parent.name
    return dir_path.name


def load_sequence(
    dir_path: Union[str, Path],
    skip: int = 1,
    stream_id: Optional[str] = None,
) -> Iterator[FrameRecord]:
    """Yield every skip-th frame of a sequence directory in filename order.

    frame_index is the position in the full sequence, not in the subsampled
    one, so skip=10 yields indices 0, 10, 20, ...

    Args:
        dir_path: Directory holding the numbered frame files
        skip: Subsampling step (>= 1)
        stream_id: Stream identifier; derived from the directory layout if omitted

    Yields:
        FrameRecord per kept frame

    Raises:
        ConfigurationError: If skip < 1
        DatasetError: If the directory is missing or frame dimensions change
        FrameReadError: If a kept frame cannot be decoded
    """
    if skip < 1:
        raise ConfigurationError("skip must be >= 1")

    dir_path = Path(dir_path)
    files = list_frame_files(dir_path)
    stream_id = stream_id or _default_stream_id(dir_path)
    expected_size = None

    for position in range(0, len(files), skip):
        pixels = read_frame(files[position])
        if expected_size is None:
            expected_size = pixels.size
        elif pixels.size != expected_size:
            raise DatasetError(
                f"Frame {files[position]} is {pixels.size[0]}x{pixels.size[1]}, "
                f"sequence is {expected_size[0]}x{expected_size[1]} (static camera expected)"
            )
        yield FrameRecord(stream_id=stream_id, frame_index=position, pixels=pixels)

    logger.debug(
        f"Finished sequence {stream_id}",
        extra={'event_type': 'sequence_loaded', 'stream_id': stream_id, 'frames_on_disk': len(files), 'skip': skip}
    )
