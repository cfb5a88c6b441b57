"""TACF frame file format.

One record is: magic bytes ``TACF``, format version (u16), side (u32),
timestamp in ms (u64), then side^2 little-endian float64 forces, row-major.
All integers are little-endian. A sequence file is just concatenated records.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .frames import TactileFrame

MAGIC = b"TACF"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version, side, timestamp_ms


def write_frame(fp: BinaryIO, frame: TactileFrame) -> None:
    fp.write(_HEADER.pack(MAGIC, VERSION, frame.side, frame.timestamp_ms))
    fp.write(np.ascontiguousarray(frame.forces, dtype="<f8").tobytes())


def write_frames(path, frames: Iterable[TactileFrame]) -> int:
    """Write concatenated TACF records; returns the number of frames written."""
    count = 0
    with open(path, "wb") as fp:
        for frame in frames:
            write_frame(fp, frame)
            count += 1
    return count


def read_frame(fp: BinaryIO) -> TactileFrame | None:
    """Read one record, or None at a clean end of file."""
    header = fp.read(_HEADER.size)
    if not header:
        return None
    if len(header) < _HEADER.size:
        raise ValueError("truncated TACF header")
    magic, version, side, timestamp_ms = _HEADER.unpack(header)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValueError(f"unsupported TACF version {version}")
    n = side * side
    raw = fp.read(8 * n)
    if len(raw) < 8 * n:
        raise ValueError("truncated TACF payload")
    forces = np.frombuffer(raw, dtype="<f8", count=n)
    return TactileFrame(side, forces, timestamp_ms)


def iter_frames(path) -> Iterator[TactileFrame]:
    with open(path, "rb") as fp:
        while True:
            frame = read_frame(fp)
            if frame is None:
                return
            yield frame


def read_frames(path) -> list[TactileFrame]:
    return list(iter_frames(path))
