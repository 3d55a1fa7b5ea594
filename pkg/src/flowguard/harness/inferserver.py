"""Datagram inference service: flow frames in, steering commands out.

One socket, one thread, one inference at a time. Under backlog the pending
datagrams are drained first and only the newest valid frame is inferred,
so a slow network never queues stale work; duplicates and lower-sequence
frames are dropped. Malformed datagrams are counted, never fatal.
"""

from __future__ import annotations

import socket
from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..avoidproxy import decide_classification
from ..datapipe import frame_input
from ..flowcore import MaskSpec
from ..linkproto import (
    KIND_FLOW,
    ProtocolError,
    decode_datagram,
    encode_steer_command,
)
from ..mvcodec import CodecError, GridSpec, grid_for_resolution, parse_mv_frame
from ..tinynet import Network, forward


@dataclass
class InferenceStats:
    received: int = 0
    malformed: int = 0
    ignored: int = 0  # valid datagrams of non-flow kinds
    stale: int = 0  # duplicate or lower-sequence frames
    inferred: int = 0
    replied: int = 0

    def as_text(self) -> str:
        return (
            f"received={self.received} malformed={self.malformed} "
            f"ignored={self.ignored} stale={self.stale} "
            f"inferred={self.inferred} replied={self.replied}"
        )


def serve_inference(
    net: Network,
    mask: MaskSpec,
    address: Tuple[str, int] = ("127.0.0.1", 0),
    grid: Optional[GridSpec] = None,
    desired_steer: float = 0.5,
    sock: Optional[socket.socket] = None,
    stop=None,
    max_replies: Optional[int] = None,
    poll_s: float = 0.2,
) -> InferenceStats:
    """Serve until `stop` is set (or max_replies commands were sent).

    The remote side's desired steering is not on the wire, so replies carry
    the class verdict plus the steering it implies around `desired_steer`;
    the vehicle end recombines with its live desired value.
    """
    grid = grid or grid_for_resolution(640, 480)
    own_sock = sock is None
    if own_sock:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind(address)
    sock.settimeout(poll_s)
    stats = InferenceStats()
    last_seq = -1
    reply_seq = 0
    try:
        while not (stop is not None and stop.is_set()):
            if max_replies is not None and stats.replied >= max_replies:
                break
            try:
                batch = [sock.recvfrom(65536)]
            except socket.timeout:
                continue
            except OSError:
                break
            # drain the backlog; only the newest frame is worth inferring
            sock.setblocking(False)
            try:
                while True:
                    try:
                        batch.append(sock.recvfrom(65536))
                    except (BlockingIOError, socket.timeout):
                        break
            finally:
                sock.settimeout(poll_s)
            best = None
            for data, addr in batch:
                stats.received += 1
                try:
                    dgram = decode_datagram(data)
                    if dgram.kind != KIND_FLOW:
                        stats.ignored += 1
                        continue
                    frame = parse_mv_frame(dgram.payload, grid, seq=dgram.seq)
                except (ProtocolError, CodecError):
                    stats.malformed += 1
                    continue
                if dgram.seq <= last_seq or (best and dgram.seq <= best[0].seq):
                    stats.stale += 1
                    continue
                if best is not None:
                    stats.stale += 1  # superseded within the same batch
                best = (frame, addr)
            if best is None:
                continue
            frame, addr = best
            x = frame_input(frame, mask)
            probs = forward(net, x[None])[0]
            decision = decide_classification(probs, desired_steer, source_seq=frame.seq)
            stats.inferred += 1
            last_seq = frame.seq
            reply = encode_steer_command(reply_seq, frame.seq, decision.final_steer, decision.klass)
            reply_seq += 1
            try:
                sock.sendto(reply, addr)
                stats.replied += 1
            except OSError:
                pass
    finally:
        if own_sock:
            sock.close()
    return stats
