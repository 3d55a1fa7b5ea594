"""Flow-field processing: dequantization, input masks, HSV rendering.

A MotionVectorFrame carries integer displacements; the network consumes
real-valued flow. Masks select a rectangular crop with optional striding
(a pure gather, no interpolation), trading input size against coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mvcodec import MotionVectorFrame


@dataclass(frozen=True)
class FlowField:
    """Dense real-valued flow in px/frame, one vector per macroblock."""

    u: np.ndarray  # (rows, cols) horizontal
    v: np.ndarray  # (rows, cols) vertical

    def __post_init__(self) -> None:
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise ValueError(f"u/v shapes differ: {self.u.shape} vs {self.v.shape}")
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise ValueError("flow contains non-finite values")

    @property
    def rows(self) -> int:
        return self.u.shape[0]

    @property
    def cols(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class MaskSpec:
    """Crop + stride gather over a flow field, in macroblock units.

    Output shape is (ceil(row_count/row_stride), ceil(col_count/col_stride)).
    """

    row_start: int
    row_count: int
    row_stride: int
    col_start: int
    col_count: int
    col_stride: int

    def __post_init__(self) -> None:
        if min(self.row_count, self.col_count) < 1 or min(self.row_stride, self.col_stride) < 1:
            raise ValueError("counts and strides must be >= 1")
        if min(self.row_start, self.col_start) < 0:
            raise ValueError("start indices must be >= 0")

    @property
    def out_shape(self) -> tuple:
        return (
            -(-self.row_count // self.row_stride),
            -(-self.col_count // self.col_stride),
        )

    @classmethod
    def identity(cls, rows: int, cols: int) -> "MaskSpec":
        return cls(0, rows, 1, 0, cols, 1)


def mv_to_flowfield(frame: MotionVectorFrame, scale: float = 1.0) -> FlowField:
    """Dequantize vectors: u = dx * scale, v = dy * scale. SAD is dropped."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return FlowField(
        frame.dx.astype(np.float32) * scale,
        frame.dy.astype(np.float32) * scale,
    )


def apply_mask(field: FlowField, mask: MaskSpec) -> np.ndarray:
    """Gather the masked subset into an (h, w, 2) input tensor.

    Every output element equals exactly one input element.
    """
    if mask.row_start + mask.row_count > field.rows or mask.col_start + mask.col_count > field.cols:
        raise ValueError(
            f"mask {mask} exceeds field {field.rows}x{field.cols}"
        )
    rsel = slice(mask.row_start, mask.row_start + mask.row_count, mask.row_stride)
    csel = slice(mask.col_start, mask.col_start + mask.col_count, mask.col_stride)
    return np.stack([field.u[rsel, csel], field.v[rsel, csel]], axis=-1)


# Input crops for the 30x40 field. Geometry choices: vertical resolution can
# be halved without losing the near-field structure, and the decision-relevant
# region is the middle of the image, so the reference crop "best15x20" keeps
# every second row and the center 20 columns.
_PRESETS = {
    # name: (row_start, row_count, row_stride, col_start, col_count, col_stride)
    "full30x40": (0, 30, 1, 0, 40, 1),
    "center30x20": (0, 30, 1, 10, 20, 1),
    "rows15x40": (0, 30, 2, 0, 40, 1),
    "band15x40": (10, 15, 1, 0, 40, 1),
    "crop15x20": (10, 15, 1, 10, 20, 1),
    "best15x20": (0, 30, 2, 10, 20, 1),
    "band5x40": (12, 5, 1, 0, 40, 1),
    "low5x40": (20, 5, 1, 0, 40, 1),
    "band2x40": (13, 2, 1, 0, 40, 1),
    "sparse8x14": (0, 30, 4, 0, 40, 3),
    "sparse3x6": (2, 27, 10, 2, 36, 7),
}


def preset_mask(name: str) -> MaskSpec:
    """Named input crop; raises KeyError for unknown names."""
    try:
        return MaskSpec(*_PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown mask preset {name!r}; known: {sorted(_PRESETS)}") from None


def preset_mask_names() -> list:
    return sorted(_PRESETS)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV (h in degrees) to RGB bytes."""
    h = (h % 360.0) / 60.0
    i = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def render_hsv(field: FlowField, max_magnitude: float) -> bytes:
    """Render flow as a binary P6 PPM, one pixel per macroblock.

    Hue encodes flow direction, value encodes speed (saturating at
    max_magnitude); saturation is fixed at 1.
    """
    if max_magnitude <= 0:
        raise ValueError(f"max_magnitude must be positive, got {max_magnitude}")
    hue = np.degrees(np.arctan2(field.v, field.u)) % 360.0
    mag = np.hypot(field.u, field.v)
    value = np.minimum(mag / max_magnitude, 1.0)
    rgb = _hsv_to_rgb(hue, np.ones_like(hue), value)
    header = f"P6\n{field.cols} {field.rows}\n255\n".encode("ascii")
    return header + rgb.tobytes()


def hsv_pixel(u: float, v: float, max_magnitude: float) -> tuple:
    """RGB byte triple for a single flow vector (reference for other renderers)."""
    hue = math.degrees(math.atan2(v, u)) % 360.0
    value = min(math.hypot(u, v) / max_magnitude, 1.0)
    r, g, b = _hsv_to_rgb(np.array([hue]), np.array([1.0]), np.array([value]))[0]
    return int(r), int(g), int(b)
