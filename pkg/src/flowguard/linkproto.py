"""Wire protocols for the remote-inference link and the controller link.

Remote inference rides on "FGRI" datagrams:

    magic "FGRI" | version u8 | kind u8 | seq u32le | payload

Kinds: 0 flow-frame (payload = an FGMV frame payload), 1 steer-command
(payload = echo_seq u32le, steer u16le fixed-point 0..10000, klass u8),
2 heartbeat (empty). No retransmission: stale frames and commands are
worthless, so the receiver rejects any command whose datagram seq is not
strictly newer than the last applied one, and a staleness timeout drops
the speed setpoint to zero (steering passes through) when commands stop
arriving.

The low-level controller speaks length-prefixed frames over a byte
stream:

    sync 0xA5 | type u8 | length u8 | payload | crc8

Types: 0x01 SetDrive {steer u16le, speed i16le mm/s}, 0x02 Telemetry
{speed i16le, rc_desired u16le, rc_override u16le, override_active u8},
0x03 Heartbeat {}. The CRC-8 uses polynomial 0x07, init 0x00, over
type+length+payload. This message set is a clean-room stand-in for an
undocumented vehicle link; the layout is fixed by this codebase only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

from .datapipe import STEER_SCALE, steer_to_u16, u16_to_steer

KIND_FLOW = 0
KIND_STEER = 1
KIND_HEARTBEAT = 2
_KINDS = (KIND_FLOW, KIND_STEER, KIND_HEARTBEAT)

MAX_PAYLOAD = 60 * 1024
_DGRAM_HEADER = struct.Struct("<4sBBI")
_DGRAM_MAGIC = b"FGRI"
_DGRAM_VERSION = 1
_STEER_PAYLOAD = struct.Struct("<IHB")

CLASSES = ("left", "none", "right")


class ProtocolError(ValueError):
    """Datagram or frame bytes violate the wire format."""


@dataclass(frozen=True)
class RemoteDatagram:
    kind: int
    seq: int
    payload: bytes


@dataclass(frozen=True)
class SteerCommand:
    echo_seq: int
    steer: float
    klass: str


def encode_datagram(kind: int, seq: int, payload: bytes = b"") -> bytes:
    if kind not in _KINDS:
        raise ProtocolError(f"unknown datagram kind {kind}")
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return _DGRAM_HEADER.pack(_DGRAM_MAGIC, _DGRAM_VERSION, kind, seq & 0xFFFFFFFF) + payload


def decode_datagram(data: bytes) -> RemoteDatagram:
    if len(data) < _DGRAM_HEADER.size:
        raise ProtocolError(f"datagram too short ({len(data)} bytes)")
    magic, version, kind, seq = _DGRAM_HEADER.unpack_from(data, 0)
    if magic != _DGRAM_MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != _DGRAM_VERSION:
        raise ProtocolError(f"unsupported version {version}")
    if kind not in _KINDS:
        raise ProtocolError(f"unknown kind {kind}")
    payload = data[_DGRAM_HEADER.size :]
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return RemoteDatagram(kind, seq, payload)


def encode_steer_command(seq: int, echo_seq: int, steer: float, klass: str) -> bytes:
    if klass not in CLASSES:
        raise ProtocolError(f"unknown class {klass!r}")
    payload = _STEER_PAYLOAD.pack(
        echo_seq & 0xFFFFFFFF, steer_to_u16(steer), CLASSES.index(klass)
    )
    return encode_datagram(KIND_STEER, seq, payload)


def parse_steer_command(dgram: RemoteDatagram) -> SteerCommand:
    if dgram.kind != KIND_STEER:
        raise ProtocolError(f"kind {dgram.kind} is not a steer command")
    if len(dgram.payload) != _STEER_PAYLOAD.size:
        raise ProtocolError(f"steer payload is {len(dgram.payload)} bytes")
    echo_seq, steer, klass = _STEER_PAYLOAD.unpack(dgram.payload)
    if steer > STEER_SCALE or klass >= len(CLASSES):
        raise ProtocolError(f"steer command fields out of range ({steer}, {klass})")
    return SteerCommand(echo_seq, u16_to_steer(steer), CLASSES[klass])


# -- command staleness and failsafe ------------------------------------------------


@dataclass(frozen=True)
class LinkState:
    """Receiver-side freshness tracking for the steering command channel."""

    last_applied_seq: int = -1
    last_command_time_us: int = 0
    last_steer: float = 0.5
    last_klass: str = "none"
    failsafe_after_us: int = 200_000

    def __post_init__(self) -> None:
        if self.failsafe_after_us <= 0:
            raise ValueError("failsafe_after_us must be positive")


@dataclass(frozen=True)
class ActiveCommand:
    steer: float
    klass: str
    failsafe: bool
    speed_setpoint: Optional[float]  # None = leave setpoint unchanged


def ingest_command(
    state: LinkState, dgram: RemoteDatagram, now_us: int
) -> Tuple[LinkState, Optional[SteerCommand]]:
    """Apply a steer-command datagram unless it is stale or duplicated.

    Returns the updated state and the applied command, or (state, None)
    when the datagram's seq is not strictly newer than the last applied.
    """
    cmd = parse_steer_command(dgram)
    if dgram.seq <= state.last_applied_seq:
        return state, None
    new = replace(
        state,
        last_applied_seq=dgram.seq,
        last_command_time_us=now_us,
        last_steer=cmd.steer,
        last_klass=cmd.klass,
    )
    return new, cmd


def failsafe_check(state: LinkState, now_us: int, desired_steer: float) -> ActiveCommand:
    """Current actuation: last command, or the failsafe once commands stall.

    Engaged until the first command arrives, and again whenever the gap
    since the last applied command exceeds the threshold.
    """
    stalled = now_us - state.last_command_time_us > state.failsafe_after_us
    if state.last_applied_seq < 0 or stalled:
        return ActiveCommand(float(desired_steer), "none", True, 0.0)
    return ActiveCommand(state.last_steer, state.last_klass, False, None)


# -- controller byte-stream frames ---------------------------------------------------

SYNC = 0xA5
TYPE_SET_DRIVE = 0x01
TYPE_TELEMETRY = 0x02
TYPE_HEARTBEAT = 0x03

_SET_DRIVE = struct.Struct("<Hh")
_TELEMETRY = struct.Struct("<hHHB")


@dataclass(frozen=True)
class SetDrive:
    steer: float
    speed: float  # m/s


@dataclass(frozen=True)
class Telemetry:
    speed: float
    rc_desired: float
    rc_override: float
    override_active: bool


@dataclass(frozen=True)
class Heartbeat:
    pass


ControlFrame = Union[SetDrive, Telemetry, Heartbeat]

_PAYLOAD_SIZE = {TYPE_SET_DRIVE: _SET_DRIVE.size, TYPE_TELEMETRY: _TELEMETRY.size, TYPE_HEARTBEAT: 0}


def crc8(data: bytes) -> int:
    """CRC-8 with polynomial 0x07, init 0x00, no reflection."""
    crc = 0
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = ((crc << 1) ^ 0x07) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
    return crc


def _speed_mm(speed: float) -> int:
    mm = int(round(speed * 1000))
    if not -32768 <= mm <= 32767:
        raise ProtocolError(f"speed {speed} m/s not representable")
    return mm


def encode_control(frame: ControlFrame) -> bytes:
    if isinstance(frame, SetDrive):
        ftype = TYPE_SET_DRIVE
        payload = _SET_DRIVE.pack(steer_to_u16(frame.steer), _speed_mm(frame.speed))
    elif isinstance(frame, Telemetry):
        ftype = TYPE_TELEMETRY
        payload = _TELEMETRY.pack(
            _speed_mm(frame.speed),
            steer_to_u16(frame.rc_desired),
            steer_to_u16(frame.rc_override),
            1 if frame.override_active else 0,
        )
    elif isinstance(frame, Heartbeat):
        ftype = TYPE_HEARTBEAT
        payload = b""
    else:
        raise ProtocolError(f"unknown control frame {frame!r}")
    body = bytes([ftype, len(payload)]) + payload
    return bytes([SYNC]) + body + bytes([crc8(body)])


def _parse_control_body(ftype: int, payload: bytes) -> ControlFrame:
    if ftype == TYPE_SET_DRIVE:
        steer, speed = _SET_DRIVE.unpack(payload)
        if steer > STEER_SCALE:
            raise ProtocolError(f"steer {steer} out of range")
        return SetDrive(u16_to_steer(steer), speed / 1000.0)
    if ftype == TYPE_TELEMETRY:
        speed, desired, override, active = _TELEMETRY.unpack(payload)
        if desired > STEER_SCALE or override > STEER_SCALE or active > 1:
            raise ProtocolError("telemetry fields out of range")
        return Telemetry(speed / 1000.0, u16_to_steer(desired), u16_to_steer(override), bool(active))
    return Heartbeat()


class ControlDecoder:
    """Incremental scanner for control frames embedded in a noisy stream.

    Output is invariant to how the byte stream is chunked. Candidates
    failing the CRC or carrying an unknown type/length are dropped one
    sync byte at a time, so a frame hiding behind noise is still found.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.crc_failures = 0
        self.invalid_frames = 0
        self.discarded_bytes = 0

    def feed(self, chunk: bytes) -> List[ControlFrame]:
        self._buf.extend(chunk)
        frames: List[ControlFrame] = []
        while True:
            start = self._buf.find(SYNC)
            if start < 0:
                self.discarded_bytes += len(self._buf)
                self._buf.clear()
                break
            if start > 0:
                self.discarded_bytes += start
                del self._buf[:start]
            if len(self._buf) < 3:
                break
            ftype, length = self._buf[1], self._buf[2]
            if ftype not in _PAYLOAD_SIZE or length != _PAYLOAD_SIZE[ftype]:
                self.discarded_bytes += 1
                del self._buf[:1]
                continue
            end = 3 + length + 1
            if len(self._buf) < end:
                break
            body = bytes(self._buf[1 : 3 + length])
            if crc8(body) != self._buf[end - 1]:
                self.crc_failures += 1
                self.discarded_bytes += 1
                del self._buf[:1]
                continue
            try:
                frames.append(_parse_control_body(ftype, bytes(self._buf[3 : 3 + length])))
            except ProtocolError:
                self.invalid_frames += 1
            del self._buf[:end]
        return frames


def decode_control(data: bytes) -> Tuple[List[ControlFrame], "ControlDecoder"]:
    """One-shot decode; returns frames plus the decoder for its counters."""
    dec = ControlDecoder()
    frames = dec.feed(data)
    return frames, dec
