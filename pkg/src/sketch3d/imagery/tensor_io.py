"""
S3DT Tensor Codec

Layout (all integers little-endian):
    magic "S3DT" | version byte (1) | rank u32 | rank x dim u32 | payload float32
Tensors are widened back to float64 on load.
"""

import json
import math
import os
import shutil
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from ..errors import ConfigError, FormatError
from .types import Tensor

MAGIC = b"S3DT"
VERSION = 1

PathLike = Union[str, Path]


def encode_tensor(t: Tensor) -> bytes:
    """Serialize a Tensor to S3DT bytes"""
    header = MAGIC + bytes([VERSION]) + struct.pack("<I", len(t.shape))
    header += struct.pack(f"<{len(t.shape)}I", *t.shape)
    return header + t.values.astype("<f4").tobytes()


def decode_tensor(buf: bytes) -> Tensor:
    """Parse S3DT bytes into a 64-bit Tensor"""
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError("Bad S3DT magic", offset=0)
    if len(buf) < 5:
        raise FormatError("Missing S3DT version byte", offset=4)
    if buf[4] != VERSION:
        raise FormatError(f"Unsupported S3DT version {buf[4]}", offset=4)
    if len(buf) < 9:
        raise FormatError("Truncated S3DT rank field", offset=len(buf))
    (rank,) = struct.unpack_from("<I", buf, 5)
    if rank < 1:
        raise FormatError("S3DT rank must be >= 1", offset=5)
    dims_end = 9 + 4 * rank
    if len(buf) < dims_end:
        raise FormatError("Truncated S3DT shape", offset=len(buf))
    shape = struct.unpack_from(f"<{rank}I", buf, 9)
    if min(shape) < 1:
        raise FormatError(f"S3DT dimensions must be >= 1, got {shape}", offset=9)
    count = math.prod(shape)
    expected = dims_end + 4 * count
    if len(buf) < expected:
        raise FormatError(f"Truncated S3DT payload: expected {4 * count} bytes", offset=len(buf))
    if len(buf) > expected:
        raise FormatError("Trailing bytes after S3DT payload", offset=expected)
    values = np.frombuffer(buf, dtype="<f4", count=count, offset=dims_end).astype(np.float64)
    return Tensor(values.reshape(shape))


def save_tensor(t: Tensor, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_tensor(t))


def load_tensor(path: PathLike) -> Tensor:
    return decode_tensor(Path(path).read_bytes())


MANIFEST_FILE = "manifest.json"


def _tensor_file(name: str) -> str:
    return f"{name}.s3dt"


def save_tensor_directory(tensors: Dict[str, np.ndarray], directory: PathLike, manifest: Dict[str, Any]) -> None:
    """
    Write named tensors as S3DT files plus a JSON manifest, atomically

    The directory is assembled under a temporary sibling name and renamed
    into place, so readers never observe a partial checkpoint.
    """
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    tmp = directory.with_name(f".{directory.name}.tmp-{os.getpid()}")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()

    shapes = {}
    for name, values in tensors.items():
        save_tensor(Tensor(np.asarray(values, dtype=np.float64)), tmp / _tensor_file(name))
        shapes[name] = list(np.shape(values))
    payload = dict(manifest)
    payload["tensors"] = shapes
    (tmp / MANIFEST_FILE).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    if directory.exists():
        shutil.rmtree(directory)
    os.replace(tmp, directory)


def load_tensor_directory(directory: PathLike) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Read a directory written by save_tensor_directory"""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.is_file():
        raise ConfigError(f"Checkpoint manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    tensors = {}
    for name, shape in manifest.get("tensors", {}).items():
        t = load_tensor(directory / _tensor_file(name))
        if list(t.shape) != list(shape):
            raise ConfigError(f"Tensor {name} has shape {t.shape}, manifest says {shape}")
        tensors[name] = t.values.copy()
    return tensors, manifest


__all__ = [
    "MAGIC",
    "VERSION",
    "encode_tensor",
    "decode_tensor",
    "save_tensor",
    "load_tensor",
    "save_tensor_directory",
    "load_tensor_directory",
]
