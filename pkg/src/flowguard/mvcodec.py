"""Macroblock motion-vector codec.

Video encoders estimate one displacement vector per 16x16 pixel macroblock
and expose them as a compact side stream. This module parses and serializes
that stream bit-exactly.

Wire layout, little-endian throughout:

====== ======= ==========================================
offset size    field
====== ======= ==========================================
0      1       dx, signed 8-bit horizontal displacement, px
1      1       dy, signed 8-bit vertical displacement, px
2      2       sad, unsigned 16-bit block-match residual
====== ======= ==========================================

Records are row-major, one per macroblock, with an optional trailing pad
column per row (present on real hardware, dropped at parse time, so a
640x480 stream yields a 30x40 vector field).

Framed streams prefix each frame with magic ``FGMV``, a u32 sequence number
and a u64 timestamp in microseconds.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Union

import numpy as np

MAGIC = b"FGMV"
MACROBLOCK_PX = 16
RECORD_SIZE = 4
HEADER = struct.Struct("<4sIQ")

REC_DTYPE = np.dtype([("dx", "<i1"), ("dy", "<i1"), ("sad", "<u2")])


class CodecError(ValueError):
    """Base for motion-vector codec failures."""


class FrameSizeError(CodecError):
    """Payload length does not match the grid; caller may resynchronize."""


class TruncatedFrameError(CodecError):
    """Byte stream ended in the middle of a frame."""


@dataclass(frozen=True)
class GridSpec:
    """Macroblock grid geometry.

    ``has_pad_column`` marks one extra padding column per row on the wire;
    pad records are length-checked but their values are ignored.
    """

    cols: int
    rows: int
    has_pad_column: bool = True

    def __post_init__(self) -> None:
        if self.cols < 1 or self.rows < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def wire_cols(self) -> int:
        return self.cols + (1 if self.has_pad_column else 0)

    @property
    def payload_size(self) -> int:
        """Exact frame payload length in bytes."""
        return self.rows * self.wire_cols * RECORD_SIZE


@dataclass
class MotionVectorFrame:
    """One decoded vector field: per-cell (dx, dy, sad) plus stream metadata."""

    grid: GridSpec
    dx: np.ndarray  # int8, (rows, cols)
    dy: np.ndarray  # int8, (rows, cols)
    sad: np.ndarray  # uint16, (rows, cols)
    seq: int = 0
    timestamp_us: int = 0

    def __post_init__(self) -> None:
        shape = (self.grid.rows, self.grid.cols)
        for name in ("dx", "dy", "sad"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} shape {arr.shape} != grid {shape}")
        self.dx = np.asarray(self.dx, dtype=np.int8)
        self.dy = np.asarray(self.dy, dtype=np.int8)
        self.sad = np.asarray(self.sad, dtype=np.uint16)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MotionVectorFrame):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.seq == other.seq
            and self.timestamp_us == other.timestamp_us
            and np.array_equal(self.dx, other.dx)
            and np.array_equal(self.dy, other.dy)
            and np.array_equal(self.sad, other.sad)
        )

    @classmethod
    def zeros(cls, grid: GridSpec, seq: int = 0, timestamp_us: int = 0) -> "MotionVectorFrame":
        shape = (grid.rows, grid.cols)
        return cls(
            grid,
            np.zeros(shape, np.int8),
            np.zeros(shape, np.int8),
            np.zeros(shape, np.uint16),
            seq,
            timestamp_us,
        )


def grid_for_resolution(width_px: int, height_px: int, has_pad_column: bool = True) -> GridSpec:
    """Grid covering a pixel resolution with 16x16 macroblocks (ceil division)."""
    if width_px <= 0 or height_px <= 0:
        raise ValueError(f"resolution must be positive, got {width_px}x{height_px}")
    return GridSpec(
        cols=-(-width_px // MACROBLOCK_PX),
        rows=-(-height_px // MACROBLOCK_PX),
        has_pad_column=has_pad_column,
    )


def parse_mv_frame(
    payload: bytes, grid: GridSpec, seq: int = 0, timestamp_us: int = 0
) -> MotionVectorFrame:
    """Decode one frame payload. Every byte pattern of correct length is valid."""
    if len(payload) != grid.payload_size:
        raise FrameSizeError(
            f"payload is {len(payload)} bytes, grid {grid.rows}x{grid.wire_cols} "
            f"needs {grid.payload_size}"
        )
    recs = np.frombuffer(payload, dtype=REC_DTYPE).reshape(grid.rows, grid.wire_cols)
    recs = recs[:, : grid.cols]  # drop pad column
    return MotionVectorFrame(
        grid,
        recs["dx"].copy(),
        recs["dy"].copy(),
        recs["sad"].copy(),
        seq,
        timestamp_us,
    )


def serialize_mv_frame(frame: MotionVectorFrame) -> bytes:
    """Inverse of parse_mv_frame; pad column written as zeros."""
    grid = frame.grid
    recs = np.zeros((grid.rows, grid.wire_cols), dtype=REC_DTYPE)
    recs["dx"][:, : grid.cols] = frame.dx
    recs["dy"][:, : grid.cols] = frame.dy
    recs["sad"][:, : grid.cols] = frame.sad
    return recs.tobytes()


def frame_to_wire(frame: MotionVectorFrame) -> bytes:
    """Full framed encoding: magic, seq, timestamp, payload."""
    return HEADER.pack(MAGIC, frame.seq & 0xFFFFFFFF, frame.timestamp_us) + serialize_mv_frame(
        frame
    )


ByteSource = Union[Iterable[bytes], BinaryIO]


class StreamParser:
    """Incremental parser for framed motion-vector streams.

    Feed arbitrary byte chunks; complete frames come out. On a magic
    mismatch the parser scans forward to the next magic (resynchronization),
    so output is independent of chunk boundaries.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self._buf = bytearray()
        self._frame_size = HEADER.size + grid.payload_size

    def feed(self, chunk: bytes) -> Iterator[MotionVectorFrame]:
        self._buf.extend(chunk)
        while True:
            start = self._buf.find(MAGIC)
            if start < 0:
                # keep a possible magic prefix at the tail
                del self._buf[: max(0, len(self._buf) - (len(MAGIC) - 1))]
                return
            if start > 0:
                del self._buf[:start]
            if len(self._buf) < self._frame_size:
                return
            _, seq, ts = HEADER.unpack_from(self._buf, 0)
            payload = bytes(self._buf[HEADER.size : self._frame_size])
            del self._buf[: self._frame_size]
            yield parse_mv_frame(payload, self.grid, seq=seq, timestamp_us=ts)

    def finish(self) -> None:
        """Signal end of stream; raises if a frame was left incomplete."""
        if self._buf.find(MAGIC) >= 0:
            raise TruncatedFrameError(
                f"stream ended {self._frame_size - len(self._buf)} bytes short of a frame"
            )
        self._buf.clear()


def stream_frames(source: ByteSource, grid: GridSpec) -> Iterator[MotionVectorFrame]:
    """Parse a framed stream from a file-like object or an iterable of chunks.

    Emits frames in arrival order; resynchronizes on corruption; raises
    TruncatedFrameError if the stream ends mid-frame (after yielding all
    complete frames).
    """
    if hasattr(source, "read"):
        fileobj = source

        def chunks() -> Iterator[bytes]:
            while True:
                block = fileobj.read(65536)
                if not block:
                    return
                yield block

        source = chunks()
    parser = StreamParser(grid)
    for chunk in source:
        yield from parser.feed(chunk)
    parser.finish()
