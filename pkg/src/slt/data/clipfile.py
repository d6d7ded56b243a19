"""ClipFile binary format and clip loading.

Layout (little-endian)::

    b"SLTC" | u32 version=1 | u32 C | u32 D | u32 H | u32 W | f32[C*D*H*W]

values row-major with C outermost and W innermost. Decoded video frames
reach the pipeline through this format; one way to produce it from a
subclip is::

    ffmpeg -i clip.mp4 -vf scale=224:224 -f rawvideo -pix_fmt rgb24 - > frames.rgb

followed by :func:`clip_from_rgb24` and :func:`write_clip`.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import FormatError

MAGIC = b"SLTC"
VERSION = 1
HEADER = struct.Struct("<4s5I")


def write_clip(path: str | os.PathLike, clip: np.ndarray) -> None:
    clip = np.asarray(clip, dtype="<f4")
    if clip.ndim != 4:
        raise FormatError(f"clip must be (C, D, H, W), got shape {clip.shape}")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, *clip.shape))
        fh.write(np.ascontiguousarray(clip).tobytes())


def read_clip(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    return decode_clip(blob, str(path))


def decode_clip(blob: bytes, name: str = "<bytes>") -> np.ndarray:
    if len(blob) < HEADER.size:
        raise FormatError(f"{name}: truncated header ({len(blob)} bytes)")
    magic, version, c, d, h, w = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{name}: unsupported version {version}")
    expected = HEADER.size + 4 * c * d * h * w
    if len(blob) != expected:
        raise FormatError(f"{name}: payload is {len(blob)} bytes, header implies {expected}")
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER.size)
    return data.reshape(c, d, h, w).astype(np.float32)


def clip_from_rgb24(raw: bytes, height: int, width: int) -> np.ndarray:
    """Convert raw rgb24 frames (as emitted by ffmpeg) to a (3, D, H, W) clip in [0, 1]."""
    frame = height * width * 3
    if len(raw) % frame:
        raise FormatError("raw video length is not a whole number of frames")
    frames = np.frombuffer(raw, dtype=np.uint8).reshape(-1, height, width, 3)
    return (frames.transpose(3, 0, 1, 2).astype(np.float32) / 255.0)


def temporal_indices(source_depth: int, depth: int) -> np.ndarray:
    """Frame indices mapping ``source_depth`` frames onto ``depth``.

    Longer sources are sampled uniformly (endpoints included); shorter ones
    repeat cyclically.
    """
    if source_depth < 1 or depth < 1:
        raise FormatError("clip depth must be positive")
    if source_depth == depth:
        return np.arange(depth)
    if source_depth > depth:
        if depth == 1:
            return np.zeros(1, dtype=np.int64)
        pos = np.arange(depth) * (source_depth - 1) / (depth - 1)
        return np.floor(pos + 0.5).astype(np.int64)
    return np.arange(depth) % source_depth


def _resize_axis(arr: np.ndarray, size: int, axis: int) -> np.ndarray:
    old = arr.shape[axis]
    if old == size:
        return arr
    # half-pixel centres, edge-clamped
    src = (np.arange(size) + 0.5) * (old / size) - 0.5
    src = np.clip(src, 0.0, old - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, old - 1)
    frac = (src - lo).astype(arr.dtype)
    shape = [1] * arr.ndim
    shape[axis] = size
    frac = frac.reshape(shape)
    return np.take(arr, lo, axis=axis) * (1 - frac) + np.take(arr, hi, axis=axis) * frac


def resize_bilinear(clip: np.ndarray, height: int, width: int) -> np.ndarray:
    return _resize_axis(_resize_axis(clip, height, 2), width, 3)


def fit_clip(clip: np.ndarray, target: tuple[int, int, int]) -> np.ndarray:
    """Bring a (C, D, H, W) array to (3, *target) with values in [0, 1]."""
    depth, height, width = target
    if clip.ndim != 4:
        raise FormatError(f"clip must be 4-D, got {clip.shape}")
    if clip.shape[0] == 1:
        clip = np.repeat(clip, 3, axis=0)
    elif clip.shape[0] != 3:
        raise FormatError(f"clip must have 1 or 3 channels, got {clip.shape[0]}")
    clip = clip[:, temporal_indices(clip.shape[1], depth)]
    clip = resize_bilinear(clip, height, width)
    return np.clip(clip, 0.0, 1.0).astype(np.float32)


def load_clip(path: str | os.PathLike, target: tuple[int, int, int]) -> np.ndarray:
    """Read a ClipFile and fit it to (3, D, H, W) = (3, *target)."""
    return fit_clip(read_clip(path), target)
