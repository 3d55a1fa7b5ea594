"""Dataset recording, labeling, balancing, splitting, and tensor assembly.

A Sample is one recorded frame: the motion-vector field plus the operator
signals (desired steer, corrected steer, override flag), speed, and an
optional manual class label. Datasets persist in the "FGDS" binary format:

    header  "FGDS" | version u8 | cols u16le | rows u16le | count u32le
    sample  timestamp_us u64le | desired u16le | corrected u16le |
            override u8 | manual_label i8 | speed i16le (mm/s) |
            flow records rows*cols*{dx i8, dy i8, sad u16le}

Steering is fixed-point on the wire (0..10000 maps to [0,1]); values are
quantized on write. manual_label codes: -1 unlabeled, 0 left, 1 none,
2 right. The flow payload has no pad column; grids are normalized to
pad-free on write.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .flowcore import MaskSpec, apply_mask, mv_to_flowfield
from .mvcodec import REC_DTYPE, GridSpec, MotionVectorFrame

CLASSES = ("left", "none", "right")
STEER_SCALE = 10000
_LABEL_CODE = {"unlabeled": -1, "left": 0, "none": 1, "right": 2}
_LABEL_NAME = {v: k for k, v in _LABEL_CODE.items()}

_HEADER = struct.Struct("<4sBHHI")
_SAMPLE_FIXED = struct.Struct("<QHHBbh")
_MAGIC = b"FGDS"
_VERSION = 1


class DatasetFormatError(ValueError):
    """Dataset bytes violate the FGDS layout; message carries the offset."""


@dataclass(frozen=True)
class Sample:
    """One recorded frame with its control-signal context."""

    flow: MotionVectorFrame
    desired_steer: float
    corrected_steer: float
    override_active: bool
    speed: float  # m/s
    manual_label: str = "unlabeled"
    timestamp_us: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.desired_steer <= 1.0:
            raise ValueError(f"desired_steer {self.desired_steer} outside [0,1]")
        if not 0.0 <= self.corrected_steer <= 1.0:
            raise ValueError(f"corrected_steer {self.corrected_steer} outside [0,1]")
        if self.manual_label not in _LABEL_CODE:
            raise ValueError(f"bad manual_label {self.manual_label!r}")


@dataclass(frozen=True)
class DatasetFile:
    grid: GridSpec
    samples: Tuple[Sample, ...]

    def __len__(self) -> int:
        return len(self.samples)


def steer_to_u16(value: float) -> int:
    return int(round(min(max(value, 0.0), 1.0) * STEER_SCALE))


def u16_to_steer(raw: int) -> float:
    return raw / STEER_SCALE


def dump_dataset(samples: Sequence[Sample], grid: Optional[GridSpec] = None) -> bytes:
    """Serialize samples; grid defaults to the first sample's field shape."""
    samples = list(samples)
    if grid is None:
        if not samples:
            raise ValueError("empty dataset needs an explicit grid")
        g = samples[0].flow.grid
        grid = GridSpec(g.cols, g.rows, has_pad_column=False)
    else:
        grid = GridSpec(grid.cols, grid.rows, has_pad_column=False)
    out = [_HEADER.pack(_MAGIC, _VERSION, grid.cols, grid.rows, len(samples))]
    for i, s in enumerate(samples):
        f = s.flow
        if (f.grid.rows, f.grid.cols) != (grid.rows, grid.cols):
            raise ValueError(
                f"sample {i} grid {f.grid.rows}x{f.grid.cols} != dataset {grid.rows}x{grid.cols}"
            )
        speed_mm = int(round(s.speed * 1000))
        if not -32768 <= speed_mm <= 32767:
            raise ValueError(f"sample {i} speed {s.speed} m/s not representable")
        out.append(
            _SAMPLE_FIXED.pack(
                s.timestamp_us,
                steer_to_u16(s.desired_steer),
                steer_to_u16(s.corrected_steer),
                1 if s.override_active else 0,
                _LABEL_CODE[s.manual_label],
                speed_mm,
            )
        )
        rec = np.empty((grid.rows, grid.cols), REC_DTYPE)
        rec["dx"], rec["dy"], rec["sad"] = f.dx, f.dy, f.sad
        out.append(rec.tobytes())
    return b"".join(out)


def parse_dataset(data: bytes) -> DatasetFile:
    """Decode an FGDS byte string; errors carry byte offsets."""
    if len(data) < _HEADER.size:
        raise DatasetFormatError(f"header truncated at byte {len(data)}")
    magic, version, cols, rows, count = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r} at byte 0")
    if version != _VERSION:
        raise DatasetFormatError(f"unsupported version {version} at byte 4")
    if cols < 1 or rows < 1:
        raise DatasetFormatError(f"bad grid {rows}x{cols} at byte 5")
    grid = GridSpec(cols, rows, has_pad_column=False)
    payload = rows * cols * REC_DTYPE.itemsize
    sample_size = _SAMPLE_FIXED.size + payload
    pos = _HEADER.size
    samples: List[Sample] = []
    for i in range(count):
        if pos + sample_size > len(data):
            raise DatasetFormatError(f"truncated in sample {i} at byte {pos}")
        ts, desired, corrected, override, label, speed_mm = _SAMPLE_FIXED.unpack_from(data, pos)
        if desired > STEER_SCALE or corrected > STEER_SCALE:
            raise DatasetFormatError(f"steer out of range in sample {i} at byte {pos}")
        if label not in _LABEL_NAME:
            raise DatasetFormatError(f"bad manual label {label} in sample {i} at byte {pos}")
        rec = np.frombuffer(data, REC_DTYPE, count=rows * cols, offset=pos + _SAMPLE_FIXED.size)
        rec = rec.reshape(rows, cols)
        frame = MotionVectorFrame(
            grid,
            rec["dx"].copy(),
            rec["dy"].copy(),
            rec["sad"].copy(),
            seq=i,
            timestamp_us=ts,
        )
        samples.append(
            Sample(
                flow=frame,
                desired_steer=u16_to_steer(desired),
                corrected_steer=u16_to_steer(corrected),
                override_active=bool(override),
                speed=speed_mm / 1000.0,
                manual_label=_LABEL_NAME[label],
                timestamp_us=ts,
            )
        )
        pos += sample_size
    if pos != len(data):
        raise DatasetFormatError(f"{len(data) - pos} trailing bytes at byte {pos}")
    return DatasetFile(grid, tuple(samples))


def write_dataset(samples: Sequence[Sample], path, grid: Optional[GridSpec] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_dataset(samples, grid))


def read_dataset(path) -> DatasetFile:
    with open(path, "rb") as fh:
        return parse_dataset(fh.read())


# -- labeling --------------------------------------------------------------------


def auto_label(sample: Sample, deadband: float = 0.1) -> str:
    """Class from the override signals: no override means no correction."""
    if not 0.0 <= deadband < 0.5:
        raise ValueError(f"deadband {deadband} outside [0, 0.5)")
    if not sample.override_active:
        return "none"
    if sample.corrected_steer < 0.5 - deadband:
        return "left"
    if sample.corrected_steer > 0.5 + deadband:
        return "right"
    return "none"


def regression_label(sample: Sample) -> float:
    """Target steer: the correction when one was given, else the request."""
    return sample.corrected_steer if sample.override_active else sample.desired_steer


# -- labeled examples --------------------------------------------------------------


@dataclass(frozen=True)
class LabeledExample:
    """Masked input tensor with its training target.

    target is a one-hot 3-vector (classification) or a scalar steer
    (regression); side carries the desired-steer input for regression
    nets; group names the balancing class this example belongs to.
    """

    input: np.ndarray
    target: np.ndarray
    group: str
    side: Optional[float] = None


@dataclass(frozen=True)
class ExampleBuild:
    examples: Tuple[LabeledExample, ...]
    skipped: int = 0


def _one_hot(name: str) -> np.ndarray:
    vec = np.zeros(3, np.float32)
    vec[CLASSES.index(name)] = 1.0
    return vec


def frame_input(frame: MotionVectorFrame, mask: MaskSpec) -> np.ndarray:
    """Masked (h, w, 2) float32 network input for one flow frame.

    The one transform shared by training and serving: dequantize, crop,
    stack u over v. Anything else (normalization, augmentation) would have
    to be applied identically on both sides, so there is none.
    """
    return apply_mask(mv_to_flowfield(frame), mask).astype(np.float32)


def build_examples(
    dataset: DatasetFile,
    mask: MaskSpec,
    mode: str = "classification_auto",
    deadband: float = 0.1,
) -> ExampleBuild:
    """Assemble network inputs and targets from a recorded dataset.

    Modes: classification_auto labels from the override signals;
    classification_manual uses stored labels and skips unlabeled samples
    (count reported); regression targets the corrected-or-desired steer
    with the desired steer as side input.
    """
    if mode not in ("classification_auto", "classification_manual", "regression"):
        raise ValueError(f"unknown mode {mode!r}")
    examples: List[LabeledExample] = []
    skipped = 0
    for s in dataset.samples:
        x = frame_input(s.flow, mask)
        if mode == "classification_auto":
            name = auto_label(s, deadband)
            examples.append(LabeledExample(x, _one_hot(name), group=name))
        elif mode == "classification_manual":
            if s.manual_label == "unlabeled":
                skipped += 1
                continue
            examples.append(LabeledExample(x, _one_hot(s.manual_label), group=s.manual_label))
        else:
            target = np.array([regression_label(s)], np.float32)
            group = "corrected" if s.override_active else "pass"
            examples.append(LabeledExample(x, target, group=group, side=s.desired_steer))
    return ExampleBuild(tuple(examples), skipped)


def balance(examples: Sequence[LabeledExample], seed: int = 0) -> List[LabeledExample]:
    """Undersample every group to the smallest group count.

    Selection is uniform without replacement and deterministic per seed;
    surviving examples keep their original relative order.
    """
    examples = list(examples)
    if not examples:
        raise ValueError("empty example set")
    groups: dict = {}
    for i, ex in enumerate(examples):
        groups.setdefault(ex.group, []).append(i)
    target = min(len(v) for v in groups.values())
    rng = np.random.default_rng(seed)
    keep: List[int] = []
    for name in sorted(groups):
        idx = groups[name]
        if len(idx) > target:
            sel = rng.choice(len(idx), size=target, replace=False)
            keep.extend(idx[j] for j in sel)
        else:
            keep.extend(idx)
    return [examples[i] for i in sorted(keep)]


def class_weights(counts: Sequence[int]) -> Tuple[float, ...]:
    """Inverse-frequency weights w_c = N / (K * n_c)."""
    counts = list(counts)
    if any(c <= 0 for c in counts):
        raise ValueError(f"class counts must be positive, got {counts}")
    total = sum(counts)
    k = len(counts)
    return tuple(total / (k * c) for c in counts)


def split(
    examples: Sequence[LabeledExample], test_fraction: float, seed: int = 0
) -> Tuple[List[LabeledExample], List[LabeledExample]]:
    """Seeded shuffle partition into (train, test)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction {test_fraction} outside (0,1)")
    examples = list(examples)
    if not examples:
        raise ValueError("empty example set")
    perm = np.random.default_rng(seed).permutation(len(examples))
    n_test = int(test_fraction * len(examples) + 0.5)
    test = [examples[i] for i in perm[:n_test]]
    train = [examples[i] for i in perm[n_test:]]
    return train, test


def to_arrays(
    examples: Sequence[LabeledExample],
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Stack examples into (X, Y, side) training arrays."""
    if not examples:
        raise ValueError("empty example set")
    x = np.stack([ex.input for ex in examples]).astype(np.float32)
    y = np.stack([ex.target for ex in examples]).astype(np.float32)
    if all(ex.side is not None for ex in examples):
        side = np.array([[ex.side] for ex in examples], np.float32)
    else:
        side = None
    return x, y, side


def group_counts(examples: Sequence[LabeledExample]) -> dict:
    counts: dict = {}
    for ex in examples:
        counts[ex.group] = counts.get(ex.group, 0) + 1
    return counts
