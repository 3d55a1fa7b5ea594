"""Closed-loop scenario evaluation: a policy drives the simulated car.

Policies map (state, flow frame, desired steer) to a steering command.
The network policy exercises the full deployment chain on purpose: the
rendered frame is serialized to wire bytes and parsed back, dequantized
and cropped, run through the network, and turned into a command, so codec
or preprocessing bugs show up as collisions here, not just as unit-test
failures.

False overrides are measured against the geometric truth: a frame counts
as obstacle-free when no obstacle sits inside the scripted operator's
trigger cone, and an override on such a frame is false.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..avoidproxy import decide_classification
from ..datapipe import frame_input
from ..flowcore import MaskSpec
from ..mvcodec import MotionVectorFrame, parse_mv_frame, serialize_mv_frame
from ..simworld import (
    Circle,
    DriverConfig,
    OracleDriver,
    VehicleParams,
    VehicleState,
    WorldSpec,
    check_collision,
    cone_threat,
    step_vehicle,
)
from ..synthflow import CameraRig, render_frame
from ..tinynet import Network, forward
from .datagen import aimed_spawn, world_for


@dataclass(frozen=True)
class EvalConfig:
    runs: int = 50
    seed: int = 0
    fps: float = 30.0
    speed_setpoint: float = 0.8
    max_seconds: float = 10.0
    desired_steer: float = 0.5  # the operator intends to go straight
    quant_step: float = 0.5
    noise_amp: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1 or self.fps <= 0 or self.max_seconds <= 0:
            raise ValueError("runs, fps, max_seconds must be positive")


@dataclass(frozen=True)
class ClosedLoopReport:
    scenario: str
    policy: str
    runs: int
    collisions: int
    collision_free_fraction: float
    mean_overrides_per_run: float  # rising edges of the override signal
    false_override_rate: float  # override frames / obstacle-free frames
    mean_time_to_first_collision: float  # seconds; nan when nothing collided
    frames: int

    def __post_init__(self) -> None:
        for frac in (self.collision_free_fraction, self.false_override_rate):
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"fraction {frac} outside [0,1]")

    def as_text(self) -> str:
        ttc = (
            f"{self.mean_time_to_first_collision:.2f}s"
            if self.mean_time_to_first_collision == self.mean_time_to_first_collision
            else "-"
        )
        return (
            f"{self.scenario}/{self.policy}: {self.runs} runs, "
            f"{100 * self.collision_free_fraction:.0f}% collision-free "
            f"({self.collisions} collisions, mean first at {ttc}), "
            f"{self.mean_overrides_per_run:.1f} overrides/run, "
            f"{100 * self.false_override_rate:.1f}% false-override frames"
        )


class PassthroughPolicy:
    """Desired steering straight through; the baseline that crashes."""

    name = "passthrough"

    def begin_run(self, state: VehicleState, world: WorldSpec) -> None:
        pass

    def step(
        self, state: VehicleState, frame: MotionVectorFrame, desired: float
    ) -> Tuple[float, bool]:
        return desired, False


class OraclePolicy:
    """The scripted operator's override rule on top of the desired steer."""

    name = "oracle"

    def __init__(self, driver_cfg: Optional[DriverConfig] = None):
        self.driver_cfg = driver_cfg or DriverConfig()
        self._driver: Optional[OracleDriver] = None

    def begin_run(self, state: VehicleState, world: WorldSpec) -> None:
        far = (state.x + 1e4 * math.cos(state.heading), state.y + 1e4 * math.sin(state.heading))
        self._driver = OracleDriver(world, self.driver_cfg, [far])

    def step(
        self, state: VehicleState, frame: MotionVectorFrame, desired: float
    ) -> Tuple[float, bool]:
        op, _ = self._driver.step(state)
        if op.override_active:
            return op.override_steer, True
        return desired, False


class ProxyPolicy:
    """Trained network behind the wire codec; overrides on left/right."""

    name = "proxy"

    def __init__(self, net: Network, mask: MaskSpec):
        self.net = net
        self.mask = mask

    def begin_run(self, state: VehicleState, world: WorldSpec) -> None:
        pass

    def step(
        self, state: VehicleState, frame: MotionVectorFrame, desired: float
    ) -> Tuple[float, bool]:
        payload = serialize_mv_frame(frame)
        wire = parse_mv_frame(payload, frame.grid, frame.seq, frame.timestamp_us)
        x = frame_input(wire, self.mask)
        probs = forward(self.net, x[None])[0]
        decision = decide_classification(probs, desired, source_seq=frame.seq)
        return decision.final_steer, decision.klass != "none"


def _ray_hits_obstacle(
    x: float, y: float, heading: float, world: WorldSpec, max_range: float
) -> bool:
    """Whether a straight run from the pose strikes an obstacle surface."""
    dx, dy = math.cos(heading), math.sin(heading)
    for obs in world.obstacles:
        if isinstance(obs, Circle):
            fx, fy = x - obs.cx, y - obs.cy
            b = fx * dx + fy * dy
            disc = b * b - (fx * fx + fy * fy - obs.r * obs.r)
            if disc < 0:
                continue
            t = -b - math.sqrt(disc)
            if 0.0 <= t <= max_range:
                return True
        else:  # wall segment
            sx, sy = obs.x2 - obs.x1, obs.y2 - obs.y1
            rxs = dx * sy - dy * sx
            if rxs == 0.0:
                continue
            qx, qy = obs.x1 - x, obs.y1 - y
            t = (qx * sy - qy * sx) / rxs
            u = (qx * dy - qy * dx) / rxs
            if 0.0 <= t <= max_range and 0.0 <= u <= 1.0:
                return True
    return False


def _spawn(world: WorldSpec, rng: np.random.Generator, cfg: EvalConfig) -> VehicleState:
    if not world.obstacles:
        x = rng.uniform(-2.0, 2.0)
        y = rng.uniform(-2.0, 2.0)
        heading = rng.uniform(-math.pi, math.pi)
        return VehicleState(x, y, heading, cfg.speed_setpoint)
    # a run must be on a true collision course, so that doing nothing loses:
    # jittered aims can slip past an obstacle edge, so resample until the
    # straight ray strikes a surface; the floor keeps the aim test geometric
    # even when the run budget is shorter than the farthest spawn distance
    ray_range = max(cfg.max_seconds * cfg.speed_setpoint, 4.6)
    for _ in range(200):
        x, y, heading, _ = aimed_spawn(
            world, rng, dist_range=(2.4, 3.6), min_clear=1.8, heading_jitter=0.15
        )
        if _ray_hits_obstacle(x, y, heading, world, ray_range):
            return VehicleState(x, y, heading, cfg.speed_setpoint)
    raise RuntimeError(f"no collision-course spawn found in world {world.name!r}")


def closed_loop_eval(
    scenario_name: str,
    policy,
    cfg: EvalConfig,
    rig: Optional[CameraRig] = None,
    params: Optional[VehicleParams] = None,
    threat_cfg: Optional[DriverConfig] = None,
) -> ClosedLoopReport:
    """Run the policy cfg.runs times from random poses; aggregate a report."""
    world = world_for(scenario_name)
    rig = rig or CameraRig()
    params = params or VehicleParams()
    threat_cfg = threat_cfg or DriverConfig()
    rng = np.random.default_rng(cfg.seed)
    dt = 1.0 / cfg.fps
    max_ticks = int(round(cfg.max_seconds * cfg.fps))
    grid = rig.grid()

    collisions = 0
    collision_times = []
    override_edges = 0
    false_overrides = 0
    clear_frames = 0
    frames = 0
    for run in range(cfg.runs):
        state = _spawn(world, rng, cfg)
        policy.begin_run(state, world)
        was_override = False
        for tick in range(max_ticks):
            frame = render_frame(
                state, world, rig, params, dt,
                q=cfg.quant_step, noise_amp=cfg.noise_amp, rng=rng,
                grid=grid, seq=tick, timestamp_us=int(round(tick * 1e6 / cfg.fps)),
            )
            steer, overrides = policy.step(state, frame, cfg.desired_steer)
            frames += 1
            if cone_threat(state, world, threat_cfg) is None:
                clear_frames += 1
                if overrides:
                    false_overrides += 1
            if overrides and not was_override:
                override_edges += 1
            was_override = overrides
            state = step_vehicle(state, steer, cfg.speed_setpoint, params, dt)
            if check_collision(state, world, params) is not None:
                collisions += 1
                collision_times.append((tick + 1) * dt)
                break

    return ClosedLoopReport(
        scenario=scenario_name,
        policy=getattr(policy, "name", type(policy).__name__),
        runs=cfg.runs,
        collisions=collisions,
        collision_free_fraction=1.0 - collisions / cfg.runs,
        mean_overrides_per_run=override_edges / cfg.runs,
        false_override_rate=(false_overrides / clear_frames) if clear_frames else 0.0,
        mean_time_to_first_collision=(
            float(np.mean(collision_times)) if collision_times else float("nan")
        ),
        frames=frames,
    )
