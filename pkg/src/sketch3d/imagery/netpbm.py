"""
Binary Netpbm Codec
Bit-exact reader and writer for P5 (grayscale) and P6 (RGB) files with maxval 255
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..errors import FormatError
from .types import SegMask, Sketch

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_WHITESPACE = b" \t\n\r\x0b\x0c"


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] reals to bytes with round-half-up: floor(255 v + 0.5)"""
    values = np.asarray(values, dtype=np.float64)
    if np.isnan(values).any():
        raise ValueError(f"NaN at element {int(np.flatnonzero(np.isnan(values).ravel())[0])}")
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _read_token(buf: bytes, pos: int) -> Tuple[bytes, int]:
    """Read one whitespace-delimited header token, skipping comments"""
    n = len(buf)
    while pos < n:
        if buf[pos] in _WHITESPACE:
            pos += 1
        elif buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("Unexpected end of header", offset=start)
    return buf[start:pos], pos


def _read_int(buf: bytes, pos: int, field: str) -> Tuple[int, int]:
    start = pos
    token, pos = _read_token(buf, pos)
    if not token.isdigit():
        raise FormatError(f"Header field {field} is not a decimal integer: {token!r}", offset=start)
    return int(token), pos


def parse_netpbm(buf: bytes, magic: bytes) -> Tuple[int, int, np.ndarray]:
    """
    Parse a binary netpbm buffer

    Args:
        buf: Complete file contents
        magic: Expected magic number, b"P5" or b"P6"

    Returns:
        (width, height, payload bytes as uint8 array)
    """
    if len(buf) < 2:
        raise FormatError("File too short for a netpbm header", offset=0)
    if buf[:2] != magic:
        raise FormatError(f"Unsupported magic {buf[:2]!r}, expected {magic!r}", offset=0)

    pos = 2
    width, pos = _read_int(buf, pos, "width")
    height, pos = _read_int(buf, pos, "height")
    maxval_offset = pos
    maxval, pos = _read_int(buf, pos, "maxval")
    if width < 1 or height < 1:
        raise FormatError(f"Invalid dimensions {width}x{height}", offset=2)
    if maxval != 255:
        raise FormatError(f"Unsupported maxval {maxval}, only 255 is supported", offset=maxval_offset)
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise FormatError("Missing whitespace after maxval", offset=pos)
    pos += 1

    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    available = len(buf) - pos
    if available < expected:
        raise FormatError(
            f"Truncated payload: expected {expected} bytes, found {available}",
            offset=pos + available,
        )
    payload = np.frombuffer(buf, dtype=np.uint8, count=expected, offset=pos)
    return width, height, payload


def _header(magic: bytes, width: int, height: int) -> bytes:
    return magic + f"\n{width} {height}\n255\n".encode("ascii")


def _write_bytes(path: PathLike, data: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise OSError(f"Failed to write {path}: {e}") from e


def load_pgm(path: PathLike) -> Sketch:
    """Load a P5 file as a Sketch with values v/255"""
    width, height, payload = parse_netpbm(Path(path).read_bytes(), b"P5")
    return Sketch(payload.reshape(height, width).astype(np.float64) / 255.0)


def save_pgm(sketch: Sketch, path: PathLike) -> None:
    """Save a Sketch as P5, value v stored as round-half-up(255 v)"""
    payload = round_half_up(sketch.pixels).tobytes()
    _write_bytes(path, _header(b"P5", sketch.width, sketch.height) + payload)


def save_mask_pgm(mask: SegMask, path: PathLike) -> None:
    """Save a SegMask as P5 with raw label bytes (not scaled)"""
    if mask.num_classes > 256:
        raise ValueError(f"Cannot store {mask.num_classes} classes in 8-bit labels")
    payload = mask.labels.astype(np.uint8).tobytes()
    _write_bytes(path, _header(b"P5", mask.width, mask.height) + payload)


def load_mask_pgm(path: PathLike, num_classes: int) -> SegMask:
    """Load a raw-label P5 file; every byte must be < num_classes"""
    width, height, payload = parse_netpbm(Path(path).read_bytes(), b"P5")
    bad = np.flatnonzero(payload >= num_classes)
    if bad.size:
        raise ValueError(
            f"Label byte {int(payload[bad[0]])} >= num_classes {num_classes} at pixel {int(bad[0])} in {path}"
        )
    return SegMask(payload.reshape(height, width), num_classes)


def save_ppm(rgb_image: np.ndarray, path: PathLike) -> None:
    """
    Save an (height, width, 3) image with values in [0, 1] as P6

    Args:
        rgb_image: Array of reals in [0, 1]
        path: Output file
    """
    rgb = np.asarray(rgb_image, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"Expected (height, width, 3) image, got shape {rgb.shape}")
    payload = round_half_up(rgb).tobytes()
    _write_bytes(path, _header(b"P6", rgb.shape[1], rgb.shape[0]) + payload)


def load_ppm(path: PathLike) -> np.ndarray:
    """Load a P6 file as (height, width, 3) reals v/255"""
    width, height, payload = parse_netpbm(Path(path).read_bytes(), b"P6")
    return payload.reshape(height, width, 3).astype(np.float64) / 255.0


__all__ = [
    "round_half_up",
    "parse_netpbm",
    "load_pgm",
    "save_pgm",
    "save_mask_pgm",
    "load_mask_pgm",
    "save_ppm",
    "load_ppm",
]
