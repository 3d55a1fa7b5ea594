"""Interactive drive service: fixed-rate simulation behind a websocket.

The tick loop owns the world. It runs at a fixed rate, consumes the
operator's latest input snapshot (a single-slot mailbox, so only the
freshest state matters), advances the vehicle, optionally runs the
collision-avoidance network over the wire-encoded flow frame, and
broadcasts one state message per tick. Network handlers never touch
simulation state; they feed the mailbox and a command queue.

Messages are newline-delimited JSON. Client to server:

    {"type": "input", "steer": s, "speed": v, "proxy_on": b}   full snapshot
    {"type": "reset"}
    {"type": "label", "start": i, "end": j, "klass": "left"}   inclusive range
    {"type": "record", "on": true}

Server to client: one {"type": "world", ...} on connect, then one
{"type": "state", ...} per tick with the base64 flow payload, plus a
periodic {"type": "stats", ...}. With no client connected the simulation
pauses; the session recording and its labels live for the whole service,
so a reconnecting client finds them intact.
"""

from __future__ import annotations

import base64
import json
import threading
import time
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from websockets.sync.server import serve

from ..avoidproxy import CLASSES, Mailbox, decide_classification
from ..datapipe import Sample, frame_input, write_dataset
from ..flowcore import preset_mask
from ..mvcodec import parse_mv_frame, serialize_mv_frame
from ..simworld import (
    Circle,
    VehicleParams,
    VehicleState,
    check_collision,
    step_vehicle,
)
from ..synthflow import CameraRig, render_frame
from ..tinynet import Network, forward
from .datagen import world_for


@dataclass(frozen=True)
class ServiceConfig:
    scenario: str = "perimeter"
    fps: float = 30.0
    mask: str = "best15x20"
    inference_min_interval: float = 0.0  # s; > 0 makes the proxy skip ticks
    quant_step: float = 0.5
    noise_amp: int = 1
    stats_every: int = 30
    session_out: Optional[str] = None
    seed: int = 0
    max_speed: float = 2.0

    def __post_init__(self) -> None:
        if self.fps <= 0 or self.stats_every < 1:
            raise ValueError("fps and stats_every must be positive")


def _world_message(world, grid, cfg: ServiceConfig, has_net: bool) -> dict:
    obstacles = []
    for obs in world.obstacles:
        if isinstance(obs, Circle):
            obstacles.append({"kind": "circle", "cx": obs.cx, "cy": obs.cy, "r": obs.r})
        else:
            obstacles.append({
                "kind": "wall", "x1": obs.x1, "y1": obs.y1, "x2": obs.x2, "y2": obs.y2,
            })
    return {
        "type": "world",
        "scenario": world.name,
        "bounds": list(world.bounds),
        "obstacles": obstacles,
        "grid": {"cols": grid.cols, "rows": grid.rows},
        "fps": cfg.fps,
        "proxy_available": has_net,
    }


class DriveService:
    """One simulated vehicle, one operator client at a time."""

    def __init__(
        self,
        cfg: ServiceConfig,
        net: Optional[Network] = None,
        rig: Optional[CameraRig] = None,
        params: Optional[VehicleParams] = None,
    ):
        self.cfg = cfg
        self.net = net
        self.rig = rig or CameraRig()
        self.params = params or VehicleParams()
        self.world = world_for(cfg.scenario)
        self.mask = preset_mask(cfg.mask)
        self.grid = self.rig.grid()
        self._rng = np.random.default_rng(cfg.seed)

        self._input = Mailbox()  # latest operator snapshot wins
        self._commands: List[dict] = []
        self._lock = threading.Lock()
        self._client = None
        self._stop = threading.Event()
        self._server = None
        self._threads: List[threading.Thread] = []

        self._state = VehicleState()
        self._tick = 0
        self._steer = 0.5
        self._speed_setpoint = 0.0
        self._proxy_on = False
        self._recording = False
        self._session: List[Sample] = []
        self._last_decision = None
        self._last_infer_t = float("-inf")
        self.collisions = 0
        self.inferences = 0
        self.skipped = 0
        self.input_errors = 0

    # -- websocket side ---------------------------------------------------

    def _handler(self, conn) -> None:
        with self._lock:
            if self._client is not None:
                busy = True
            else:
                busy = False
                self._client = conn
        if busy:
            conn.close(1013, "another operator is connected")
            return
        try:
            conn.send(json.dumps(_world_message(self.world, self.grid, self.cfg, self.net is not None)))
            for message in conn:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", "replace")
                for line in message.split("\n"):
                    line = line.strip()
                    if line:
                        self._apply_message(line)
        except Exception:
            pass
        finally:
            with self._lock:
                if self._client is conn:
                    self._client = None

    def _apply_message(self, line: str) -> None:
        try:
            msg = json.loads(line)
            kind = msg["type"]
        except (ValueError, TypeError, KeyError):
            self.input_errors += 1
            return
        if kind == "input":
            try:
                snapshot = {
                    "steer": min(1.0, max(0.0, float(msg.get("steer", 0.5)))),
                    "speed": min(self.cfg.max_speed, max(0.0, float(msg.get("speed", 0.0)))),
                    "proxy_on": bool(msg.get("proxy_on", False)),
                }
            except (TypeError, ValueError):
                self.input_errors += 1
                return
            self._input.put(snapshot)
        elif kind in ("reset", "label", "record"):
            with self._lock:
                self._commands.append(msg)
        else:
            self.input_errors += 1

    # -- tick side ---------------------------------------------------------

    def _apply_commands(self, events: List[dict]) -> None:
        with self._lock:
            commands, self._commands = self._commands, []
        for msg in commands:
            kind = msg["type"]
            if kind == "reset":
                self._state = VehicleState()
                self._last_decision = None
                events.append({"kind": "reset"})
            elif kind == "record":
                on = bool(msg.get("on", False))
                if self._recording and not on:
                    self._flush_session(events)
                self._recording = on
                events.append({"kind": "recording", "on": on})
            elif kind == "label":
                events.append(self._apply_label(msg))

    def _apply_label(self, msg: dict) -> dict:
        try:
            start, end, klass = int(msg["start"]), int(msg["end"]), str(msg["klass"])
        except (KeyError, TypeError, ValueError):
            self.input_errors += 1
            return {"kind": "label_rejected", "reason": "malformed"}
        if klass not in CLASSES or not (0 <= start <= end < len(self._session)):
            self.input_errors += 1
            return {"kind": "label_rejected", "reason": "range or class"}
        for i in range(start, end + 1):
            self._session[i] = replace(self._session[i], manual_label=klass)
        return {"kind": "labeled", "start": start, "end": end, "klass": klass}

    def _flush_session(self, events: List[dict]) -> None:
        if not (self.cfg.session_out and self._session):
            return
        try:
            write_dataset(self._session, self.cfg.session_out)
            events.append({"kind": "session_saved", "frames": len(self._session)})
        except OSError as exc:
            events.append({"kind": "session_save_failed", "reason": str(exc)})

    def _decide(self, frame, desired: float, now: float):
        """Full deployment chain, with optional in-loop frame skipping."""
        if self.net is None or not self._proxy_on:
            self._last_decision = None
            return None, False
        interval = self.cfg.inference_min_interval
        if self._last_decision is not None and interval > 0 and now - self._last_infer_t < interval:
            self.skipped += 1
            return self._last_decision, True
        payload = serialize_mv_frame(frame)
        wire = parse_mv_frame(payload, frame.grid, frame.seq, frame.timestamp_us)
        probs = forward(self.net, frame_input(wire, self.mask)[None])[0]
        decision = decide_classification(probs, desired, source_seq=frame.seq)
        self.inferences += 1
        self._last_infer_t = now
        self._last_decision = decision
        return decision, False

    def _step_once(self) -> Tuple[dict, Optional[dict]]:
        """Advance one tick; returns (state message, stats message or None)."""
        snapshot = self._input.take_nowait()
        if snapshot is not None:
            self._steer = snapshot["steer"]
            self._speed_setpoint = snapshot["speed"]
            self._proxy_on = snapshot["proxy_on"]
        events: List[dict] = []
        self._apply_commands(events)

        dt = 1.0 / self.cfg.fps
        ts = int(round(self._tick * 1e6 / self.cfg.fps))
        frame = render_frame(
            self._state, self.world, self.rig, self.params, dt,
            q=self.cfg.quant_step, noise_amp=self.cfg.noise_amp, rng=self._rng,
            grid=self.grid, seq=self._tick, timestamp_us=ts,
        )
        desired = self._steer
        decision, skipped = self._decide(frame, desired, time.monotonic())
        final = decision.final_steer if decision is not None else desired
        overriding = decision is not None and decision.klass != "none"

        if self._recording:
            self._session.append(Sample(
                flow=frame,
                desired_steer=desired,
                corrected_steer=final,
                override_active=overriding,
                speed=self._state.speed,
                timestamp_us=ts,
            ))

        new_state = step_vehicle(self._state, final, self._speed_setpoint, self.params, dt)
        if check_collision(new_state, self.world, self.params) is not None:
            self.collisions += 1
            events.append({"kind": "collision", "tick": self._tick})
            new_state = VehicleState()
        self._state = new_state
        self._tick += 1

        state_msg = {
            "type": "state",
            "tick": self._tick,
            "pose": {
                "x": self._state.x,
                "y": self._state.y,
                "heading": self._state.heading,
                "speed": self._state.speed,
            },
            "steer": {
                "desired": desired,
                "final": final,
                "proxy_on": self._proxy_on,
                "speed_setpoint": self._speed_setpoint,
            },
            "decision": None if decision is None else {
                "klass": decision.klass,
                "probs": list(decision.probs),
                "skipped": skipped,
            },
            "flow": base64.b64encode(serialize_mv_frame(frame)).decode("ascii"),
            "events": events,
            "recording": self._recording,
            "session_frames": len(self._session),
        }
        stats_msg = None
        if self._tick % self.cfg.stats_every == 0:
            stats_msg = {
                "type": "stats",
                "ticks": self._tick,
                "collisions": self.collisions,
                "inferences": self.inferences,
                "skipped": self.skipped,
                "input_errors": self.input_errors,
                "session_frames": len(self._session),
            }
        return state_msg, stats_msg

    def _loop(self) -> None:
        period = 1.0 / self.cfg.fps
        next_t = time.monotonic()
        while not self._stop.is_set():
            with self._lock:
                conn = self._client
            if conn is None:
                next_t = time.monotonic() + period  # paused; nothing advances
                self._stop.wait(period)
                continue
            state_msg, stats_msg = self._step_once()
            try:
                conn.send(json.dumps(state_msg))
                if stats_msg is not None:
                    conn.send(json.dumps(stats_msg))
            except Exception:
                with self._lock:
                    if self._client is conn:
                        self._client = None
                continue
            next_t += period
            delay = next_t - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_t = time.monotonic()  # fell behind; don't spiral

    # -- lifecycle ----------------------------------------------------------

    def start(self, host: str = "127.0.0.1", port: int = 0) -> Tuple[str, int]:
        self._server = serve(self._handler, host, port)
        bound = self._server.socket.getsockname()
        t_serve = threading.Thread(target=self._server.serve_forever, daemon=True)
        t_loop = threading.Thread(target=self._loop, daemon=True)
        self._threads = [t_serve, t_loop]
        t_serve.start()
        t_loop.start()
        return bound[0], bound[1]

    def stop(self) -> None:
        self._stop.set()
        with self._lock:
            conn = self._client
            self._client = None
        if conn is not None:
            try:
                conn.close()
            except Exception:
                pass
        if self._server is not None:
            self._server.shutdown()
        for t in self._threads:
            t.join(timeout=5.0)
        events: List[dict] = []
        self._flush_session(events)

    @property
    def session(self) -> List[Sample]:
        return list(self._session)
