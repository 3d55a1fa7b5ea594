"""Vehicle kinematics, obstacle worlds, and a scripted operator.

The vehicle follows the kinematic bicycle model. Steering is normalized to
[0, 1]: 0 is full left, 0.5 straight, 1 full right, mapping linearly to a
front wheel angle delta = (2*steer - 1) * max_steer_angle. Headings are
counterclockwise-positive, so a right turn (steer > 0.5) decreases heading:

    x'     = v * cos(heading)
    y'     = v * sin(heading)
    theta' = -(v / wheelbase) * tan(delta)

Worlds are flat planes with circular obstacles (posts, spheres) and vertical
wall segments inside a bounding rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    steer: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.steer <= 1.0:
            raise ValueError(f"steer must be in [0,1], got {self.steer}")
        if self.speed < 0.0:
            raise ValueError("no reverse in scope: speed must be >= 0")


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.25
    max_steer_angle: float = 0.35
    body_radius: float = 0.15

    def __post_init__(self) -> None:
        if self.wheelbase <= 0:
            raise ValueError("wheelbase must be positive")
        if not 0.0 < self.max_steer_angle < math.pi / 2:
            raise ValueError("max_steer_angle must be in (0, pi/2)")

    def wheel_angle(self, steer: float) -> float:
        return (2.0 * steer - 1.0) * self.max_steer_angle


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise ValueError("circle radius must be positive")


@dataclass(frozen=True)
class Wall:
    x1: float
    y1: float
    x2: float
    y2: float
    height: float = 1.0

    def __post_init__(self) -> None:
        if self.x1 == self.x2 and self.y1 == self.y2:
            raise ValueError("degenerate wall segment")

    @property
    def length(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)


Obstacle = Union[Circle, Wall]


@dataclass(frozen=True)
class WorldSpec:
    name: str
    obstacles: Tuple[Obstacle, ...]
    bounds: Tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self) -> None:
        xmin, ymin, xmax, ymax = self.bounds
        if xmin >= xmax or ymin >= ymax:
            raise ValueError(f"empty bounds {self.bounds}")


@dataclass(frozen=True)
class Contact:
    obstacle_id: Union[int, str]  # index into obstacles, or "bounds"
    penetration: float


@dataclass(frozen=True)
class PIState:
    kp: float = 0.8
    ki: float = 2.0
    integral: float = 0.0
    integral_max: float = 2.0  # anti-windup clamp


@dataclass(frozen=True)
class OperatorOutput:
    desired_steer: float
    override_active: bool
    override_steer: float  # full deflection: 0.0 or 1.0 when active

    @property
    def corrected_steer(self) -> float:
        return self.override_steer if self.override_active else self.desired_steer


def step_vehicle(
    state: VehicleState,
    steer_cmd: float,
    speed_cmd: float,
    params: VehicleParams,
    dt: float,
) -> VehicleState:
    """Explicit-Euler step; steering and speed actuate instantaneously."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    steer_cmd = min(1.0, max(0.0, steer_cmd))
    speed_cmd = max(0.0, speed_cmd)
    delta = params.wheel_angle(steer_cmd)
    yaw_rate = -(state.speed / params.wheelbase) * math.tan(delta)
    return VehicleState(
        x=state.x + state.speed * math.cos(state.heading) * dt,
        y=state.y + state.speed * math.sin(state.heading) * dt,
        heading=state.heading + yaw_rate * dt,
        speed=speed_cmd,
        steer=steer_cmd,
    )


def yaw_rate_of(state: VehicleState, params: VehicleParams) -> float:
    """Instantaneous heading rate for the state's current steer and speed."""
    return -(state.speed / params.wheelbase) * math.tan(params.wheel_angle(state.steer))


def _point_segment_distance(px: float, py: float, w: Wall) -> float:
    vx, vy = w.x2 - w.x1, w.y2 - w.y1
    t = ((px - w.x1) * vx + (py - w.y1) * vy) / (vx * vx + vy * vy)
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (w.x1 + t * vx), py - (w.y1 + t * vy))


def clearance(x: float, y: float, world: WorldSpec) -> float:
    """Distance from a point to the nearest obstacle surface or boundary.

    Negative inside an obstacle or outside the bounds. Used for spawn-pose
    sampling; collision tests should use check_collision, which accounts for
    the body radius.
    """
    xmin, ymin, xmax, ymax = world.bounds
    best = min(x - xmin, xmax - x, y - ymin, ymax - y)
    for obs in world.obstacles:
        if isinstance(obs, Circle):
            d = math.hypot(x - obs.cx, y - obs.cy) - obs.r
        else:
            d = _point_segment_distance(x, y, obs)
        best = min(best, d)
    return best


def check_collision(
    state: VehicleState, world: WorldSpec, params: VehicleParams
) -> Optional[Contact]:
    """Deepest contact of the vehicle disc with obstacles or bounds, if any.

    Contact requires strict overlap: touching exactly at the boundary is
    not a collision.
    """
    best: Optional[Contact] = None
    for idx, obs in enumerate(world.obstacles):
        if isinstance(obs, Circle):
            dist = math.hypot(state.x - obs.cx, state.y - obs.cy)
            pen = (params.body_radius + obs.r) - dist
        else:
            pen = params.body_radius - _point_segment_distance(state.x, state.y, obs)
        if pen > 0 and (best is None or pen > best.penetration):
            best = Contact(idx, pen)
    xmin, ymin, xmax, ymax = world.bounds
    out = max(
        xmin + params.body_radius - state.x,
        state.x - (xmax - params.body_radius),
        ymin + params.body_radius - state.y,
        state.y - (ymax - params.body_radius),
    )
    if out > 0 and (best is None or out > best.penetration):
        best = Contact("bounds", out)
    return best


def pi_speed_update(
    pi: PIState, setpoint: float, measured: float, dt: float
) -> Tuple[PIState, float]:
    """One PI controller step; returns new state and throttle in [0, 1]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = setpoint - measured
    integral = pi.integral + e * dt
    integral = min(pi.integral_max, max(-pi.integral_max, integral))
    command = min(1.0, max(0.0, pi.kp * e + pi.ki * integral))
    return replace(pi, integral=integral), command


# -- scripted operator --------------------------------------------------------


@dataclass(frozen=True)
class DriverConfig:
    # Trigger distance tuned so a committed full-deflection arc still clears a
    # right-angle wall pocket entered on its bisector: the cone first sees such
    # a pocket at 0.75x the corner distance, and the arc needs the corner about
    # 1.9 m out, so 1.65 m triggers near 2.2 m with a few frames to spare.
    d_trig: float = 1.65  # obstacle surface distance that triggers an override, m
    hold_extra_frames: int = 0  # frames the override is held after the cone clears
    cone_half_angle: float = math.radians(25.0)
    steer_gain: float = 1.2  # desired-steer proportional gain, per rad of error
    waypoint_radius: float = 0.35  # capture distance, m

    def __post_init__(self) -> None:
        if self.d_trig <= 0:
            raise ValueError("d_trig must be positive")
        if self.hold_extra_frames < 0:
            raise ValueError("hold_extra_frames must be >= 0")


def bearing_to(state: VehicleState, px: float, py: float) -> float:
    """Bearing of a point relative to the heading; positive = left side."""
    return wrap_angle(math.atan2(py - state.y, px - state.x) - state.heading)


def _cone_candidates(
    state: VehicleState, world: WorldSpec, cfg: DriverConfig
) -> List[Tuple[float, float]]:
    """(surface distance, bearing) of every obstacle point inside the cone."""
    out: List[Tuple[float, float]] = []
    for obs in world.obstacles:
        if isinstance(obs, Circle):
            center_dist = math.hypot(obs.cx - state.x, obs.cy - state.y)
            if center_dist <= obs.r:
                out.append((0.0, 0.0))
            else:
                b = bearing_to(state, obs.cx, obs.cy)
                half_width = math.asin(min(1.0, obs.r / center_dist))
                if abs(b) <= cfg.cone_half_angle + half_width:
                    out.append((center_dist - obs.r, b))
        else:
            # walls are sampled; fine enough for a scripted operator
            n = max(2, int(obs.length / 0.05) + 1)
            for i in range(n):
                t = i / (n - 1)
                px = obs.x1 + t * (obs.x2 - obs.x1)
                py = obs.y1 + t * (obs.y2 - obs.y1)
                b = bearing_to(state, px, py)
                if abs(b) <= cfg.cone_half_angle:
                    out.append((math.hypot(px - state.x, py - state.y), b))
    return out


def cone_threat(
    state: VehicleState, world: WorldSpec, cfg: DriverConfig
) -> Optional[Tuple[float, float]]:
    """(surface distance, bearing) of the nearest obstacle inside the cone."""
    best: Optional[Tuple[float, float]] = None
    for dist, b in _cone_candidates(state, world, cfg):
        if dist < cfg.d_trig and (best is None or dist < best[0]):
            best = (dist, b)
    return best


def cone_sides(
    state: VehicleState, world: WorldSpec, cfg: DriverConfig
) -> Tuple[float, float]:
    """Nearest in-cone obstacle distance per side, (left, right), inf if clear.

    Dead-ahead points (bearing exactly 0) count as the right side, matching
    the operator convention that a dead-ahead threat is dodged to the left.
    """
    left = right = math.inf
    for dist, b in _cone_candidates(state, world, cfg):
        if b > 0:
            left = min(left, dist)
        else:
            right = min(right, dist)
    return left, right


def arc_clear_length(
    state: VehicleState,
    world: WorldSpec,
    params: VehicleParams,
    steer: float,
    margin: float = 0.05,
) -> float:
    """Travel distance a committed full-deflection arc stays collision-free.

    Walks the turning circle for the given side (steer < 0.5 = left) in two
    degree steps, up to 220 degrees, and returns the arc length before the
    body first comes within ``margin`` of an obstacle or the boundary. The
    margin absorbs the discrete-step drift off the ideal circle and the
    straightening tangent after the override releases. Worlds are static,
    so a dodge verified here stays safe for as long as the steering is held.
    """
    radius = params.wheelbase / math.tan(params.max_steer_angle)
    side = 1.0 if steer < 0.5 else -1.0  # left turn circles counterclockwise
    half_pi = 0.5 * math.pi
    cx = state.x + radius * math.cos(state.heading + side * half_pi)
    cy = state.y + radius * math.sin(state.heading + side * half_pi)
    theta0 = state.heading - side * half_pi  # center-to-car angle
    step = math.radians(2.0)
    cap = math.radians(220.0)
    phi = step
    while phi <= cap:
        a = theta0 + side * phi
        px = cx + radius * math.cos(a)
        py = cy + radius * math.sin(a)
        if clearance(px, py, world) <= params.body_radius + margin:
            return radius * (phi - step)
        phi += step
    return radius * cap


class OracleDriver:
    """Scripted operator: follows waypoints, overrides near obstacles.

    The override turns away from the more blocked side of the cone at full
    deflection (nearest threat on the left -> steer 1.0, on the right or
    dead ahead -> steer 0.0, ties broken left) and is held for
    ``hold_extra_frames`` frames after the trigger condition clears,
    imitating a human letting go late.

    Two refinements keep the dodge committed instead of dithering when
    obstacles bracket the heading, as in room corners where the pointwise
    nearest side flips every frame while the car drives into the pocket:
    when the two committed arcs differ in how far they stay collision-free,
    the fresh choice takes the longer one instead of the side convention,
    and the direction then stays latched until the override fully releases.
    ``step`` also returns the exact, unheld label for the frame.
    """

    ARC_TIE = 0.05  # m; arcs this close defer to the side convention

    def __init__(
        self,
        world: WorldSpec,
        cfg: DriverConfig,
        waypoints: Sequence[Tuple[float, float]],
        params: VehicleParams = VehicleParams(),
    ):
        if not waypoints:
            raise ValueError("need at least one waypoint")
        self.world = world
        self.cfg = cfg
        self.waypoints = list(waypoints)
        self.params = params
        self._wp_index = 0
        self._hold_left = 0
        self._held_steer = 0.0
        self._dodge: Optional[float] = None

    def _desired(self, state: VehicleState) -> float:
        wx, wy = self.waypoints[self._wp_index]
        if (
            math.hypot(wx - state.x, wy - state.y) < self.cfg.waypoint_radius
            and self._wp_index + 1 < len(self.waypoints)
        ):
            self._wp_index += 1
            wx, wy = self.waypoints[self._wp_index]
        err = bearing_to(state, wx, wy)
        # positive error = target on the left = steer below 0.5
        return min(1.0, max(0.0, 0.5 - self.cfg.steer_gain * err))

    def _choose_dodge(self, state: VehicleState, left_d: float, right_d: float) -> float:
        if self._dodge is None:
            clear_left = arc_clear_length(state, self.world, self.params, 0.0)
            clear_right = arc_clear_length(state, self.world, self.params, 1.0)
            if abs(clear_left - clear_right) <= self.ARC_TIE:
                steer = 1.0 if left_d < right_d else 0.0
            else:
                steer = 0.0 if clear_left > clear_right else 1.0
            self._dodge = steer
        return self._dodge

    def step(self, state: VehicleState) -> Tuple[OperatorOutput, str]:
        desired = self._desired(state)
        left_d, right_d = cone_sides(state, self.world, self.cfg)
        if min(left_d, right_d) < self.cfg.d_trig:
            steer = self._choose_dodge(state, left_d, right_d)
            self._hold_left = self.cfg.hold_extra_frames
            self._held_steer = steer
            exact = "right" if steer == 1.0 else "left"
            return OperatorOutput(desired, True, steer), exact
        if self._hold_left > 0:
            self._hold_left -= 1
            return OperatorOutput(desired, True, self._held_steer), "none"
        self._dodge = None
        return OperatorOutput(desired, False, 0.5), "none"


# -- scenario presets ----------------------------------------------------------


def _perimeter() -> WorldSpec:
    b = 3.5
    walls = (
        Wall(-b, -b, b, -b),
        Wall(b, -b, b, b),
        Wall(b, b, -b, b),
        Wall(-b, b, -b, -b),
    )
    return WorldSpec("perimeter", walls, (-b - 0.5, -b - 0.5, b + 0.5, b + 0.5))


def _frontal_wall() -> WorldSpec:
    return WorldSpec("frontal_wall", (Wall(3.0, -3.0, 3.0, 3.0),), (-12.0, -12.0, 12.0, 12.0))


def _spheres() -> WorldSpec:
    obstacles = (Circle(3.0, -1.0, 0.3), Circle(3.0, 1.0, 0.3))
    return WorldSpec("spheres", obstacles, (-20.0, -20.0, 20.0, 20.0))


def _pollers() -> WorldSpec:
    # 1.0 m clear gap between the posts
    obstacles = (Circle(3.0, -0.65, 0.15), Circle(3.0, 0.65, 0.15))
    return WorldSpec("pollers", obstacles, (-20.0, -20.0, 20.0, 20.0))


_SCENARIOS = {
    "perimeter": _perimeter,
    "frontal_wall": _frontal_wall,
    "spheres": _spheres,
    "pollers": _pollers,
}


def scenario(name: str) -> WorldSpec:
    """One of the four recording scenarios; raises KeyError otherwise."""
    try:
        return _SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(_SCENARIOS)}") from None


def scenario_names() -> List[str]:
    return sorted(_SCENARIOS)


def empty_world(extent: float = 50.0) -> WorldSpec:
    """Obstacle-free plane, for baseline runs and override-free recordings."""
    return WorldSpec("empty", (), (-extent, -extent, extent, extent))
