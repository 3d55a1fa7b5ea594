"""Experiment runner: label-mode grid, layer variants, and input-mask studies.

Three studies share one train/evaluate engine:

  - label_mode_table: automatic vs manual labels, unbalanced vs balanced,
    on the base network over the full field.
  - layer_variant_table: eight single-change architecture variants of the
    base network, full field.
  - mask_table: input crops of the field, each trained on a trunk whose
    convolution padding and pooling rounding are chosen so the crop still
    fits through two pooling stages.

Every row reports the parameter count computed from the network that was
actually built and trained, never a configured constant. Reported epochs
are the 1-based epoch whose test loss the restored network achieved; the
stopping rule is this library's early stopping, not anything external.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from ..datapipe import (
    DatasetFile,
    balance,
    build_examples,
    read_dataset,
    split,
    to_arrays,
)
from ..flowcore import preset_mask
from ..tinynet import (
    ArchSpec,
    Conv,
    Dense,
    Flatten,
    Input,
    MaxPool,
    Network,
    TrainConfig,
    TrainReport,
    build_network,
    evaluate,
    preset_arch,
    train,
)

_MODES = {"auto": "classification_auto", "manual": "classification_manual"}


def _grid_arch(
    block1: Tuple[int, ...],
    block2: Tuple[int, ...],
    dense: Tuple[int, ...],
    padding: str = "valid",
    pool: str = "floor",
    shape: Tuple[int, int] = (30, 40),
) -> ArchSpec:
    layers: List = [Input(shape + (2,))]
    layers += [Conv(f, padding) for f in block1]
    layers.append(MaxPool(pool))
    layers += [Conv(f, padding) for f in block2]
    layers.append(MaxPool(pool))
    layers.append(Flatten())
    layers += [Dense(u) for u in dense]
    layers.append(Dense(3, "softmax"))
    return ArchSpec(tuple(layers))


def layer_variants() -> Dict[str, ArchSpec]:
    """The eight single-change variants of the base stack, in study order.

    All take the full 30x40 field. conv16_same_stack swaps the two-block
    trunk for one 16-filter convolution followed by the two 8-filter ones,
    with same padding and ceil pooling; conv1_8_only removes the second
    convolution block but keeps both pooling stages.
    """
    return {
        "base": _grid_arch((32,), (8, 8), (16, 16)),
        "conv1_three16": _grid_arch((16, 16, 16), (8, 8), (16, 16)),
        "conv2_five8": _grid_arch((32,), (8, 8, 8, 8, 8), (16, 16)),
        "dense1_32": _grid_arch((32,), (8, 8), (32, 16)),
        "dense2_32": _grid_arch((32,), (8, 8), (16, 32)),
        "conv16_same_stack": ArchSpec((
            Input((30, 40, 2)),
            Conv(16, "same"),
            MaxPool("ceil"),
            Conv(8, "same"),
            MaxPool("ceil"),
            Conv(8, "same"),
            Flatten(),
            Dense(16),
            Dense(16),
            Dense(3, "softmax"),
        )),
        "conv1_8": _grid_arch((8,), (8, 8), (16, 16)),
        "conv1_8_only": _grid_arch((8,), (), (16, 16)),
    }


@dataclass(frozen=True)
class MaskRow:
    """One input-crop study row: the crop and its trunk build modes."""

    mask: str
    padding: str
    pool: str


# valid/floor wherever the crop survives it; small crops need same padding
# and ceil pooling to keep a nonempty map through both pooling stages
_MASK_ROWS = (
    MaskRow("full30x40", "valid", "floor"),
    MaskRow("center30x20", "valid", "floor"),
    MaskRow("rows15x40", "valid", "floor"),
    MaskRow("band15x40", "valid", "floor"),
    MaskRow("crop15x20", "valid", "floor"),
    MaskRow("best15x20", "same", "ceil"),
    MaskRow("band5x40", "same", "floor"),
    MaskRow("low5x40", "same", "floor"),
    MaskRow("band2x40", "same", "ceil"),
    MaskRow("sparse8x14", "same", "ceil"),
    MaskRow("sparse3x6", "same", "ceil"),
)


def mask_rows() -> Tuple[MaskRow, ...]:
    return _MASK_ROWS


def mask_arch(mask_name: str) -> ArchSpec:
    """Trunk for an input-crop row, built on the crop's output shape."""
    for row in _MASK_ROWS:
        if row.mask == mask_name:
            shape = preset_mask(mask_name).out_shape
            return _grid_arch((32,), (8, 8), (16, 16), row.padding, row.pool, shape)
    raise ValueError(f"no mask study row named {mask_name!r}")


def arch_for(variant: str, mask_name: str) -> ArchSpec:
    """Resolve a variant id against an input mask, checking shapes agree.

    Ids: "final" (the deployed 15x20 stack), "mask" (the input-crop trunk
    for mask_name), or any layer_variants() key.
    """
    if variant == "final":
        arch = preset_arch("final")
    elif variant == "mask":
        arch = mask_arch(mask_name)
    else:
        variants = layer_variants()
        if variant not in variants:
            known = ["final", "mask"] + sorted(variants)
            raise ValueError(f"unknown variant {variant!r}; known: {known}")
        arch = variants[variant]
    expected = preset_mask(mask_name).out_shape
    got = arch.layers[0].shape[:2]
    if got != expected:
        raise ValueError(
            f"variant {variant!r} expects input {got}, mask {mask_name!r} yields {expected}"
        )
    return arch


@dataclass(frozen=True)
class ExperimentSpec:
    """One training configuration; repetitions vary only the seed."""

    datasets: Tuple[str, ...]
    label_mode: str = "auto"  # auto | manual
    balanced: bool = True
    mask: str = "best15x20"
    variant: str = "final"
    train: TrainConfig = field(default_factory=TrainConfig)
    repetitions: int = 1
    seed: int = 0
    deadband: float = 0.1
    test_fraction: float = 0.2

    def __post_init__(self) -> None:
        if not self.datasets:
            raise ValueError("need at least one dataset path")
        if self.label_mode not in _MODES:
            raise ValueError(f"label_mode must be one of {sorted(_MODES)}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        arch_for(self.variant, self.mask)  # raises on unknown ids or shape clash


@dataclass(frozen=True)
class ResultRow:
    """One table row: counts are computed, accuracies are held-out."""

    name: str
    params: int
    epochs: int
    overall: float
    per_class: Tuple[float, float, float]  # left, none, right
    n_train: int
    n_test: int
    seconds: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "epochs": self.epochs,
            "overall": self.overall,
            "left": self.per_class[0],
            "none": self.per_class[1],
            "right": self.per_class[2],
            "n_train": self.n_train,
            "n_test": self.n_test,
            "seconds": self.seconds,
        }


def load_datasets(paths: Sequence[str]) -> DatasetFile:
    """Read and concatenate dataset files; grids must agree."""
    parts = [read_dataset(p) for p in paths]
    grid = parts[0].grid
    for path, part in zip(paths, parts):
        if part.grid != grid:
            raise ValueError(f"{path}: grid {part.grid} differs from {grid}")
    samples = tuple(s for part in parts for s in part.samples)
    return DatasetFile(grid, samples)


def train_once(
    spec: ExperimentSpec,
    seed: int,
    name: str,
    dataset: Optional[DatasetFile] = None,
) -> Tuple[Network, ResultRow, TrainReport]:
    """Build examples, optionally balance, split, train, evaluate."""
    t0 = time.perf_counter()
    dataset = dataset or load_datasets(spec.datasets)
    mask = preset_mask(spec.mask)
    built = build_examples(dataset, mask, _MODES[spec.label_mode], spec.deadband)
    examples = list(built.examples)
    if spec.balanced:
        examples = balance(examples, seed=seed)
    train_set, test_set = split(examples, spec.test_fraction, seed=seed)
    if not train_set or not test_set:
        raise ValueError(f"split left an empty set: {len(train_set)}/{len(test_set)}")

    net = build_network(arch_for(spec.variant, spec.mask), seed=seed)
    cfg = replace(spec.train, seed=seed)
    xt, yt, st = to_arrays(train_set)
    xe, ye, se = to_arrays(test_set)
    train_data = (xt, yt, st) if st is not None else (xt, yt)
    test_data = (xe, ye, se) if se is not None else (xe, ye)
    best, report = train(net, train_data, test_data, cfg)
    scores = evaluate(best, test_data)
    row = ResultRow(
        name=name,
        params=best.param_count,
        epochs=report.best_epoch + 1,
        overall=scores["accuracy"],
        per_class=tuple(scores["per_class"]),
        n_train=len(train_set),
        n_test=len(test_set),
        seconds=time.perf_counter() - t0,
    )
    return best, row, report


def run_experiment(spec: ExperimentSpec, dataset: Optional[DatasetFile] = None) -> List[ResultRow]:
    """One row per repetition; repetition i uses seed spec.seed + i."""
    base = f"{spec.label_mode}/{'balanced' if spec.balanced else 'unbalanced'}"
    rows = []
    dataset = dataset or load_datasets(spec.datasets)
    for rep in range(spec.repetitions):
        name = base if spec.repetitions == 1 else f"{base}#{rep}"
        _, row, _ = train_once(spec, spec.seed + rep, name, dataset)
        rows.append(row)
    return rows


def label_mode_table(
    datasets: Sequence[str],
    train_cfg: TrainConfig,
    seed: int = 0,
    repetitions: int = 1,
    variant: str = "base",
    mask: str = "full30x40",
    deadband: float = 0.1,
) -> List[ResultRow]:
    """Label source x balancing grid, in the order auto/manual, raw/balanced."""
    rows: List[ResultRow] = []
    dataset = load_datasets(datasets)
    for mode in ("auto", "manual"):
        for balanced in (False, True):
            spec = ExperimentSpec(
                tuple(datasets), mode, balanced, mask, variant,
                train_cfg, repetitions, seed, deadband,
            )
            rows.extend(run_experiment(spec, dataset))
    return rows


def layer_variant_table(
    datasets: Sequence[str],
    train_cfg: TrainConfig,
    seed: int = 0,
    label_mode: str = "auto",
    balanced: bool = True,
    deadband: float = 0.1,
) -> List[ResultRow]:
    """One row per architecture variant, all on the full field."""
    rows: List[ResultRow] = []
    dataset = load_datasets(datasets)
    for name in layer_variants():
        spec = ExperimentSpec(
            tuple(datasets), label_mode, balanced, "full30x40", name,
            train_cfg, 1, seed, deadband,
        )
        _, row, _ = train_once(spec, seed, name, dataset)
        rows.append(row)
    return rows


def mask_table(
    datasets: Sequence[str],
    train_cfg: TrainConfig,
    seed: int = 0,
    label_mode: str = "auto",
    balanced: bool = True,
    deadband: float = 0.1,
) -> List[ResultRow]:
    """One row per input crop, trunk modes per mask_rows()."""
    rows: List[ResultRow] = []
    dataset = load_datasets(datasets)
    for mrow in _MASK_ROWS:
        spec = ExperimentSpec(
            tuple(datasets), label_mode, balanced, mrow.mask, "mask",
            train_cfg, 1, seed, deadband,
        )
        _, row, _ = train_once(spec, seed, mrow.mask, dataset)
        rows.append(row)
    return rows


def format_rows(title: str, rows: Sequence[ResultRow]) -> str:
    """Fixed-width text table."""
    header = f"{'row':<22} {'params':>7} {'epochs':>6} {'overall':>8} {'left':>7} {'none':>7} {'right':>7} {'train':>6} {'test':>6}"
    lines = [title, "-" * len(header), header]
    for r in rows:
        pc = [f"{100 * v:7.2f}" if v == v else f"{'-':>7}" for v in r.per_class]
        lines.append(
            f"{r.name:<22} {r.params:>7d} {r.epochs:>6d} {100 * r.overall:8.2f} "
            f"{pc[0]} {pc[1]} {pc[2]} {r.n_train:>6d} {r.n_test:>6d}"
        )
    return "\n".join(lines)


def rows_to_json(tables: Dict[str, Sequence[ResultRow]]) -> str:
    return json.dumps(
        {name: [r.as_dict() for r in rows] for name, rows in tables.items()},
        indent=2,
        allow_nan=True,
    )
