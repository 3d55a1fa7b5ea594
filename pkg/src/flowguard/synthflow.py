"""Synthetic macroblock motion vectors from simulated camera egomotion.

Stands in for the camera: raycast scene depth per macroblock center, apply
the perspective motion field for the vehicle's twist, quantize to integer
vectors. Camera frame is x right, y down, z forward (right-handed); pixel
offsets (x, y) are measured from the principal point. For camera linear
velocity T and angular velocity w (both in camera frame) and depth Z, the
instantaneous flow in px/s is

    u = (x*Tz - f*Tx)/Z + x*y*wx/f - (f + x^2/f)*wy + y*wz
    v = (y*Tz - f*Ty)/Z + (f + y^2/f)*wx - x*y*wy/f - x*wz

The sign conventions are anchored by two_frame_oracle, which projects world
points at two consecutive poses; the closed form must match it as dt -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .flowcore import FlowField
from .mvcodec import MACROBLOCK_PX, GridSpec, MotionVectorFrame, grid_for_resolution
from .simworld import Circle, VehicleParams, VehicleState, Wall, WorldSpec, yaw_rate_of

DEFAULT_SAD_HIT = 500


@dataclass(frozen=True)
class CameraRig:
    """Camera mounted at the vehicle position, facing along its heading."""

    height: float = 0.12  # m above ground
    pitch: float = 0.1  # rad, downward positive
    focal_px: float = 320.0
    image_w: int = 640
    image_h: int = 480
    cx: Optional[float] = None  # principal point; defaults to image center
    cy: Optional[float] = None

    def __post_init__(self) -> None:
        if self.focal_px <= 0:
            raise ValueError("focal_px must be positive")

    @property
    def principal(self) -> Tuple[float, float]:
        cx = self.image_w / 2.0 if self.cx is None else self.cx
        cy = self.image_h / 2.0 if self.cy is None else self.cy
        return cx, cy

    def grid(self) -> GridSpec:
        return grid_for_resolution(self.image_w, self.image_h)


@dataclass(frozen=True)
class CameraTwist:
    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    wx: float = 0.0
    wy: float = 0.0
    wz: float = 0.0

    @property
    def linear(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tz])

    @property
    def angular(self) -> np.ndarray:
        return np.array([self.wx, self.wy, self.wz])


@dataclass(frozen=True)
class DepthMap:
    """Per-macroblock depth along the optical axis; no-hit cells are sky."""

    depth: np.ndarray  # (rows, cols), inf where no hit
    hit: np.ndarray  # (rows, cols) bool

    def __post_init__(self) -> None:
        if self.depth.shape != self.hit.shape:
            raise ValueError("depth/hit shape mismatch")
        if np.any(self.depth[self.hit] <= 0):
            raise ValueError("hit depths must be positive")


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def _rotation(axis_angle: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrix for an axis-angle vector."""
    angle = float(np.linalg.norm(axis_angle))
    if angle < 1e-15:
        return np.eye(3)
    k = _skew(axis_angle / angle)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


@dataclass(frozen=True)
class CameraPose:
    """Position C (world) and rotation M whose rows are the camera axes,
    so camera coordinates are M @ (p_world - C)."""

    position: np.ndarray  # (3,)
    rotation: np.ndarray  # (3,3)

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        return (self.rotation @ (np.atleast_2d(points) - self.position).T).T

    def project(self, point: np.ndarray, focal_px: float) -> Tuple[float, float]:
        """Pixel offsets from the principal point; point must be in front."""
        X, Y, Z = self.to_camera(point)[0]
        if Z <= 0:
            raise ValueError(f"point behind camera (Z={Z:.4f})")
        return focal_px * X / Z, focal_px * Y / Z

    def advance(self, twist: CameraTwist, dt: float) -> "CameraPose":
        """Move by the twist for dt: first-order translation, exact rotation."""
        new_pos = self.position + self.rotation.T @ (twist.linear * dt)
        new_rot = _rotation(-twist.angular * dt) @ self.rotation
        return CameraPose(new_pos, new_rot)


def camera_pose(state: VehicleState, rig: CameraRig) -> CameraPose:
    """Camera pose for a vehicle state: at its position, height above ground,
    yawed to the heading and pitched down."""
    st, ct = math.sin(state.heading), math.cos(state.heading)
    sp, cp = math.sin(rig.pitch), math.cos(rig.pitch)
    x_cam = np.array([st, -ct, 0.0])  # image right = vehicle right
    y_cam = np.array([-sp * ct, -sp * st, -cp])  # image down
    z_cam = np.array([cp * ct, cp * st, -sp])  # optical axis
    rotation = np.stack([x_cam, y_cam, z_cam])
    return CameraPose(np.array([state.x, state.y, rig.height]), rotation)


def vehicle_twist(state: VehicleState, params: VehicleParams, rig: CameraRig) -> CameraTwist:
    """Camera-frame twist of a vehicle moving at its current speed and steer."""
    v = state.speed
    yaw = yaw_rate_of(state, params)
    sp, cp = math.sin(rig.pitch), math.cos(rig.pitch)
    return CameraTwist(tx=0.0, ty=-v * sp, tz=v * cp, wx=0.0, wy=-yaw * cp, wz=-yaw * sp)


def block_center_offsets(grid: GridSpec, rig: CameraRig) -> Tuple[np.ndarray, np.ndarray]:
    """Pixel offsets (x, y) of macroblock centers from the principal point."""
    cx, cy = rig.principal
    xs = (np.arange(grid.cols) + 0.5) * MACROBLOCK_PX - cx
    ys = (np.arange(grid.rows) + 0.5) * MACROBLOCK_PX - cy
    return np.meshgrid(xs, ys)


def raycast_depth(
    state: VehicleState, world: WorldSpec, rig: CameraRig, grid: Optional[GridSpec] = None
) -> DepthMap:
    """Optical-axis depth to the nearest surface per macroblock center ray.

    Surfaces: the ground plane, circles extruded to vertical cylinders, and
    walls as vertical rectangles. Cells whose ray escapes the scene are sky.
    """
    grid = grid or rig.grid()
    pose = camera_pose(state, rig)
    x, y = block_center_offsets(grid, rig)
    f = rig.focal_px
    # unnormalized camera-frame directions with unit z: the ray parameter t
    # is then exactly the optical-axis depth
    dirs_cam = np.stack([x / f, y / f, np.ones_like(x)], axis=-1)
    dirs = dirs_cam @ pose.rotation  # (rows, cols, 3) world directions
    ox, oy, oz = pose.position
    dx, dy, dz = dirs[..., 0], dirs[..., 1], dirs[..., 2]

    eps = 1e-9
    best = np.full(x.shape, np.inf)

    # ground plane z=0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(dz < -eps, -oz / dz, np.inf)
    best = np.minimum(best, t_ground)

    for obs in world.obstacles:
        if isinstance(obs, Circle):
            # vertical cylinder of height 1 m
            a = dx * dx + dy * dy
            fx, fy = ox - obs.cx, oy - obs.cy
            b = 2.0 * (fx * dx + fy * dy)
            c = fx * fx + fy * fy - obs.r * obs.r
            disc = b * b - 4.0 * a * c
            valid = (disc >= 0) & (a > eps)
            sq = np.sqrt(np.where(valid, disc, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = np.where(valid, (-b - sq) / (2 * a), np.inf)
                t2 = np.where(valid, (-b + sq) / (2 * a), np.inf)
            t = np.where(t1 > eps, t1, np.where(t2 > eps, t2, np.inf))
            with np.errstate(invalid="ignore"):  # inf * 0 on miss rays
                hz = oz + t * dz
                t = np.where((hz >= 0.0) & (hz <= 1.0), t, np.inf)
            best = np.minimum(best, t)
        else:
            wx, wy = obs.x2 - obs.x1, obs.y2 - obs.y1
            nx, ny = -wy, wx  # plane normal (xy)
            denom = dx * nx + dy * ny
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(
                    np.abs(denom) > eps,
                    ((obs.x1 - ox) * nx + (obs.y1 - oy) * ny) / denom,
                    np.inf,
                )
            t = np.where(t > eps, t, np.inf)
            with np.errstate(invalid="ignore"):  # inf * 0 on miss rays
                hx, hy, hz = ox + t * dx, oy + t * dy, oz + t * dz
                seg = ((hx - obs.x1) * wx + (hy - obs.y1) * wy) / (wx * wx + wy * wy)
                ok = (seg >= 0.0) & (seg <= 1.0) & (hz >= 0.0) & (hz <= obs.height)
            best = np.minimum(best, np.where(ok, t, np.inf))

    hit = np.isfinite(best)
    return DepthMap(np.where(hit, best, np.inf), hit)


def egomotion_flow(
    twist: CameraTwist, depth: DepthMap, rig: CameraRig, dt: float, grid: Optional[GridSpec] = None
) -> FlowField:
    """Closed-form flow in px/frame for one camera twist over one frame time.

    No-hit (sky) cells emit zero flow: the encoder cannot track unstructured
    regions.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = grid or rig.grid()
    if depth.depth.shape != (grid.rows, grid.cols):
        raise ValueError(f"depth shape {depth.depth.shape} != grid {(grid.rows, grid.cols)}")
    x, y = block_center_offsets(grid, rig)
    f = rig.focal_px
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_z = np.where(depth.hit, 1.0 / depth.depth, 0.0)
    tx, ty, tz = twist.tx, twist.ty, twist.tz
    wx, wy, wz = twist.wx, twist.wy, twist.wz
    u = (x * tz - f * tx) * inv_z + x * y * wx / f - (f + x * x / f) * wy + y * wz
    v = (y * tz - f * ty) * inv_z + (f + y * y / f) * wx - x * y * wy / f - x * wz
    u = np.where(depth.hit, u * dt, 0.0)
    v = np.where(depth.hit, v * dt, 0.0)
    return FlowField(u, v)


def two_frame_oracle(
    pose: CameraPose, twist: CameraTwist, dt: float, point: np.ndarray, focal_px: float
) -> Tuple[float, float]:
    """Ground-truth displacement: project a world point at the pose and at the
    pose advanced by the twist; return the pixel delta."""
    x0, y0 = pose.project(point, focal_px)
    x1, y1 = pose.advance(twist, dt).project(point, focal_px)
    return x1 - x0, y1 - y0


def quantize_flow(
    field: FlowField,
    q: float = 0.5,
    hit: Optional[np.ndarray] = None,
    grid: Optional[GridSpec] = None,
    sad_hit: int = DEFAULT_SAD_HIT,
    seq: int = 0,
    timestamp_us: int = 0,
) -> MotionVectorFrame:
    """Quantize flow to integer counts of q px, clamped to the signed-8 range.

    SAD is a structure proxy: sad_hit where the cell saw a surface, 0 where
    it saw sky (hit defaults to all-true).
    """
    if q <= 0:
        raise ValueError("q must be positive")
    grid = grid or GridSpec(cols=field.cols, rows=field.rows)
    if hit is None:
        hit = np.ones((field.rows, field.cols), bool)
    dx = np.clip(np.round(field.u / q), -128, 127).astype(np.int8)
    dy = np.clip(np.round(field.v / q), -128, 127).astype(np.int8)
    sad = np.where(hit, sad_hit, 0).astype(np.uint16)
    return MotionVectorFrame(grid, dx, dy, sad, seq=seq, timestamp_us=timestamp_us)


def render_frame(
    state: VehicleState,
    world: WorldSpec,
    rig: CameraRig,
    params: VehicleParams,
    dt: float,
    q: float = 0.5,
    noise_amp: int = 1,
    rng: Optional[np.random.Generator] = None,
    grid: Optional[GridSpec] = None,
    seq: int = 0,
    timestamp_us: int = 0,
) -> MotionVectorFrame:
    """One synthetic sensor frame for the state's current speed and steer.

    Integer noise of amplitude noise_amp counts (zero-mean, uniform) models
    encoder jitter; it only touches cells that saw a surface.
    """
    grid = grid or rig.grid()
    depth = raycast_depth(state, world, rig, grid)
    twist = vehicle_twist(state, params, rig)
    flow = egomotion_flow(twist, depth, rig, dt, grid)
    frame = quantize_flow(flow, q, hit=depth.hit, grid=grid, seq=seq, timestamp_us=timestamp_us)
    if noise_amp > 0:
        if rng is None:
            raise ValueError("noise_amp > 0 needs an rng")
        shape = (grid.rows, grid.cols)
        noise_dx = rng.integers(-noise_amp, noise_amp + 1, shape)
        noise_dy = rng.integers(-noise_amp, noise_amp + 1, shape)
        dx = np.clip(frame.dx.astype(np.int16) + np.where(depth.hit, noise_dx, 0), -128, 127)
        dy = np.clip(frame.dy.astype(np.int16) + np.where(depth.hit, noise_dy, 0), -128, 127)
        frame = MotionVectorFrame(
            grid, dx.astype(np.int8), dy.astype(np.int8), frame.sad,
            seq=seq, timestamp_us=timestamp_us,
        )
    return frame
