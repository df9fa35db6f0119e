"""Tensor and image files.

Tensor layout (all integers little-endian)::

    offset  size      field
    0       8         magic b"DFSQTNSR"
    8       1         version, 0x01
    9       1         dtype, 0x01 = float32 (IEEE 754, little-endian)
    10      1         rank r
    11      8*r       dims, uint64 each
    11+8r   4*prod    row-major data

Images are binary PGM (P5, grayscale) and PPM (P6, RGB) with maxval 255.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"DFSQTNSR"
VERSION = 1
DTYPE_F32 = 1
_HEADER = 11


class TensorFormatError(ValueError):
    pass


class BadMagicError(TensorFormatError):
    pass


class UnsupportedVersionError(TensorFormatError):
    pass


class UnsupportedDTypeError(TensorFormatError):
    pass


class TruncatedError(TensorFormatError):
    pass


class NonFiniteError(TensorFormatError):
    pass


class ImageFormatError(ValueError):
    pass


def encode_tensor(t) -> bytes:
    a = np.asarray(t)
    if a.ndim > 255:
        raise ValueError("rank must fit in one byte")
    head = MAGIC + bytes([VERSION, DTYPE_F32, a.ndim]) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + np.ascontiguousarray(a, dtype="<f4").tobytes()


def decode_tensor(buf: bytes, allow_nonfinite: bool = False) -> np.ndarray:
    if len(buf) < len(MAGIC) or buf[:8] != MAGIC:
        raise BadMagicError(f"bad magic {bytes(buf[:8])!r}, expected {MAGIC!r}")
    if len(buf) < _HEADER:
        raise TruncatedError("file ends inside the header")
    version, dtype, rank = buf[8], buf[9], buf[10]
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise UnsupportedDTypeError(f"unsupported dtype code {dtype}")
    data_at = _HEADER + 8 * rank
    if len(buf) < data_at:
        raise TruncatedError("file ends inside the dimension list")
    shape = struct.unpack_from(f"<{rank}Q", buf, _HEADER)
    nbytes = 4 * int(np.prod(shape, dtype=object))
    if len(buf) < data_at + nbytes:
        raise TruncatedError(f"payload has {len(buf) - data_at} bytes, expected {nbytes}")
    if len(buf) > data_at + nbytes:
        raise TensorFormatError(f"{len(buf) - data_at - nbytes} trailing bytes after payload")
    a = np.frombuffer(buf, dtype="<f4", offset=data_at, count=nbytes // 4).astype(np.float32).reshape(shape)
    if not allow_nonfinite and not np.all(np.isfinite(a)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(a))[0])
        raise NonFiniteError(f"non-finite value at index {idx}")
    return a


def write_tensor(t, path) -> None:
    Path(path).write_bytes(encode_tensor(t))


def read_tensor(path, allow_nonfinite: bool = False) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes(), allow_nonfinite=allow_nonfinite)


@dataclass(eq=False)
class Image:
    """8-bit image; ``pixels`` has shape (height, width, channels)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim == 2:
            p = p[:, :, None]
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (H, W, 1|3), got {p.shape}")
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        self.pixels = p

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_image(buf: bytes) -> Image:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(buf, pos)
        if not m:
            raise ImageFormatError("malformed header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported magic {magic!r}; only P5 and P6 are read")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ImageFormatError("malformed header") from None
    if width <= 0 or height <= 0:
        raise ImageFormatError("malformed header: non-positive size")
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval}; only 255 is supported")
    if pos >= len(buf) or buf[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise ImageFormatError("malformed header: missing separator before pixel data")
    pos += 1
    ch = 3 if magic == b"P6" else 1
    n = width * height * ch
    data = buf[pos:pos + n]
    if len(data) < n:
        raise ImageFormatError(f"truncated pixel data: {len(data)} of {n} bytes")
    px = np.frombuffer(data, dtype=np.uint8).reshape(height, width, ch).copy()
    return Image(px)


def encode_image(img: Image) -> bytes:
    magic = b"P6" if img.channels == 3 else b"P5"
    return magic + b"\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def read_image(path) -> Image:
    return decode_image(Path(path).read_bytes())


def write_image(img: Image, path) -> None:
    Path(path).write_bytes(encode_image(img))
