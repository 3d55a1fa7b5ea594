"""Synthetic data recording: scripted-operator episodes over scenario worlds.

Each episode spawns the vehicle near a randomly chosen obstacle, aimed at
it, with a waypoint placed just beyond, so the scripted operator keeps
being pulled into approach-override-recover cycles; that is where the
interesting frames are. Episodes end on collision, timeout, or when the
frame quota is met, and everything is driven by one seeded generator, so
a given seed reproduces the dataset byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..datapipe import Sample
from ..simworld import (
    Circle,
    DriverConfig,
    OracleDriver,
    VehicleParams,
    VehicleState,
    WorldSpec,
    check_collision,
    clearance,
    empty_world,
    scenario,
    scenario_names,
    step_vehicle,
)
from ..synthflow import CameraRig, render_frame

DEFAULT_SCENARIOS = ("frontal_wall", "perimeter", "pollers", "spheres")


def world_for(name: str) -> WorldSpec:
    """Scenario registry used by every harness entry point.

    The four recording scenarios plus "empty", an obstacle-free plane for
    baseline runs, sized so a 10 s straight run cannot reach the boundary.
    """
    if name == "empty":
        return empty_world(12.0)
    return scenario(name)


def world_names() -> List[str]:
    return scenario_names() + ["empty"]


@dataclass(frozen=True)
class DataGenConfig:
    scenarios: Tuple[str, ...] = DEFAULT_SCENARIOS
    n_frames: int = 20000
    seed: int = 0
    fps: float = 30.0
    speed_setpoint: float = 0.8
    episode_ticks: int = 450  # 15 s cap per episode at 30 fps
    hold_extra_frames: int = 0  # late-release label corruption, see DriverConfig
    quant_step: float = 0.5
    noise_amp: int = 1

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError("n_frames must be positive")
        if self.fps <= 0 or self.speed_setpoint < 0 or self.episode_ticks < 1:
            raise ValueError("bad timing or speed parameters")
        if not self.scenarios:
            raise ValueError("need at least one scenario")


def _sample_near(
    world: WorldSpec,
    rng: np.random.Generator,
    cx: float,
    cy: float,
    radius: float,
    min_clear: float,
    margin: float = 0.6,
) -> Tuple[float, float]:
    """Random free point within `radius` of (cx, cy), inside the bounds."""
    xmin, ymin, xmax, ymax = world.bounds
    for _ in range(500):
        x = rng.uniform(max(xmin + margin, cx - radius), min(xmax - margin, cx + radius))
        y = rng.uniform(max(ymin + margin, cy - radius), min(ymax - margin, cy + radius))
        if clearance(x, y, world) >= min_clear:
            return x, y
    raise RuntimeError(f"no free point near ({cx:.1f}, {cy:.1f}) in {world.name}")


def _anchor_point(obs, rng: np.random.Generator) -> Tuple[float, float]:
    """A point on (or at the center of) an obstacle worth driving toward."""
    if isinstance(obs, Circle):
        return obs.cx, obs.cy
    t = rng.uniform(0.15, 0.85)  # stay off wall ends, where the cone misses
    return obs.x1 + t * (obs.x2 - obs.x1), obs.y1 + t * (obs.y2 - obs.y1)


def aimed_spawn(
    world: WorldSpec,
    rng: np.random.Generator,
    dist_range: Tuple[float, float] = (2.2, 3.4),
    min_clear: float = 1.6,
    heading_jitter: float = 0.25,
) -> Tuple[float, float, float, Tuple[float, float]]:
    """Pose aimed at a random obstacle anchor; returns (x, y, heading, anchor).

    Spawn clearance exceeds the default trigger distance, so every episode
    starts outside the override zone and records a clean approach.
    """
    if not world.obstacles:
        raise ValueError("aimed_spawn needs obstacles")
    for _ in range(500):
        obs = world.obstacles[int(rng.integers(len(world.obstacles)))]
        ax, ay = _anchor_point(obs, rng)
        ang = rng.uniform(-math.pi, math.pi)
        dist = rng.uniform(*dist_range)
        x, y = ax + dist * math.cos(ang), ay + dist * math.sin(ang)
        xmin, ymin, xmax, ymax = world.bounds
        if not (xmin + 0.6 <= x <= xmax - 0.6 and ymin + 0.6 <= y <= ymax - 0.6):
            continue
        if clearance(x, y, world) < min_clear:
            continue
        heading = math.atan2(ay - y, ax - x) + rng.uniform(-heading_jitter, heading_jitter)
        return x, y, heading, (ax, ay)
    raise RuntimeError(f"no valid spawn pose found in {world.name}")


def _episode_setup(
    world: WorldSpec,
    rng: np.random.Generator,
    speed: float,
) -> Tuple[VehicleState, List[Tuple[float, float]]]:
    if not world.obstacles:
        x, y = _sample_near(world, rng, 0.0, 0.0, 1e9, 0.5)
        heading = rng.uniform(-math.pi, math.pi)
        waypoints = [_sample_near(world, rng, x, y, 8.0, 0.5) for _ in range(3)]
        return VehicleState(x, y, heading, speed), waypoints
    x, y, heading, (ax, ay) = aimed_spawn(world, rng)
    dist = math.hypot(ax - x, ay - y)
    # first waypoint sits just past the anchor, so the desired path keeps
    # pulling the car back at the obstacle after each override
    beyond = (ax + (ax - x) / dist * 1.2, ay + (ay - y) / dist * 1.2)
    waypoints = [beyond] + [_sample_near(world, rng, x, y, 7.0, 0.8) for _ in range(2)]
    return VehicleState(x, y, heading, speed), waypoints


def generate_data(
    cfg: DataGenConfig,
    driver_cfg: Optional[DriverConfig] = None,
    rig: Optional[CameraRig] = None,
    params: Optional[VehicleParams] = None,
) -> List[Sample]:
    """Record cfg.n_frames samples, split evenly across the scenarios.

    The stored manual_label is the operator's exact per-frame judgement
    (override hold excluded), standing in for a careful human annotator;
    the override flag and corrected steering carry the held signal, so
    automatic labels inherit whatever hold corruption was configured.
    """
    driver_cfg = driver_cfg or DriverConfig(hold_extra_frames=cfg.hold_extra_frames)
    rig = rig or CameraRig()
    params = params or VehicleParams()
    worlds = [world_for(name) for name in cfg.scenarios]
    rng = np.random.default_rng(cfg.seed)
    dt = 1.0 / cfg.fps
    base, extra = divmod(cfg.n_frames, len(worlds))
    quotas = [base + (1 if i < extra else 0) for i in range(len(worlds))]

    samples: List[Sample] = []
    seq = 0
    for world, quota in zip(worlds, quotas):
        produced = 0
        while produced < quota:
            state, waypoints = _episode_setup(world, rng, cfg.speed_setpoint)
            driver = OracleDriver(world, driver_cfg, waypoints)
            for _ in range(cfg.episode_ticks):
                if produced >= quota:
                    break
                ts = int(round(seq * 1e6 / cfg.fps))
                frame = render_frame(
                    state, world, rig, params, dt,
                    q=cfg.quant_step, noise_amp=cfg.noise_amp, rng=rng,
                    seq=seq, timestamp_us=ts,
                )
                op, exact = driver.step(state)
                samples.append(Sample(
                    flow=frame,
                    desired_steer=op.desired_steer,
                    corrected_steer=op.corrected_steer,
                    override_active=op.override_active,
                    speed=state.speed,
                    manual_label=exact,
                    timestamp_us=ts,
                ))
                seq += 1
                produced += 1
                state = step_vehicle(state, op.corrected_steer, cfg.speed_setpoint, params, dt)
                if check_collision(state, world, params) is not None:
                    break
    return samples
