"""Command-line entry points.

Twelve subcommands cover the recording-to-deployment workflow: gen-data,
label-auto, balance, split (dataset files); train, eval, experiment
(networks and studies); closed-loop (scenario evaluation); drive,
serve-infer (services); parse, render (file inspection). Every subcommand
accepts --config FILE with key=value lines whose keys name the long
flags; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np

from ..datapipe import (
    CLASSES,
    auto_label,
    read_dataset,
    write_dataset,
)
from ..flowcore import mv_to_flowfield, preset_mask, preset_mask_names, render_hsv
from ..mvcodec import grid_for_resolution, stream_frames
from ..simworld import DriverConfig
from ..tinynet import TrainConfig, load_weights, save_weights
from .closedloop import (
    EvalConfig,
    OraclePolicy,
    PassthroughPolicy,
    ProxyPolicy,
    closed_loop_eval,
)
from .config import ConfigError, parse_with_config
from .datagen import DEFAULT_SCENARIOS, DataGenConfig, generate_data, world_names
from .driveservice import DriveService, ServiceConfig
from .experiments import (
    ExperimentSpec,
    format_rows,
    label_mode_table,
    layer_variant_table,
    load_datasets,
    mask_table,
    rows_to_json,
    train_once,
)
from .inferserver import serve_inference


def _add_config_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value file supplying flag defaults")


def _require(ns: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(ns, n.replace("-", "_")) is None]
    if missing:
        raise SystemExit(f"missing required option(s): {', '.join('--' + n for n in missing)}")


def _parse_address(text: str):
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def _train_config(ns: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        loss=ns.loss,
        optimizer=ns.optimizer,
        learning_rate=ns.lr,
        batch_size=ns.batch,
        max_epochs=ns.epochs,
        patience=ns.patience,
        seed=ns.seed,
    )


def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--loss", default="mse", choices=("mse", "cross_entropy"))
    sub.add_argument("--optimizer", default="adam", choices=("adam", "sgd"))
    sub.add_argument("--lr", type=float, default=1e-3)
    sub.add_argument("--batch", type=int, default=32)
    sub.add_argument("--epochs", type=int, default=100)
    sub.add_argument("--patience", type=int, default=10)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--deadband", type=float, default=0.1)
    sub.add_argument("--test-fraction", type=float, default=0.2)


def _dataset_labels(dataset, mode: str, deadband: float) -> List[Optional[str]]:
    """Per-sample class used by the file-level balance/split tools."""
    labels: List[Optional[str]] = []
    for s in dataset.samples:
        if mode == "auto":
            labels.append(auto_label(s, deadband))
        else:
            labels.append(None if s.manual_label == "unlabeled" else s.manual_label)
    return labels


def _print_label_histogram(labels: List[Optional[str]]) -> None:
    counts: Dict[str, int] = {}
    for name in labels:
        counts[name or "unlabeled"] = counts.get(name or "unlabeled", 0) + 1
    for name in ("left", "none", "right", "unlabeled"):
        if name in counts:
            print(f"  {name:<10} {counts[name]}")


# -- subcommand bodies -----------------------------------------------------


def _cmd_gen_data(ns) -> int:
    _require(ns, "out")
    cfg = DataGenConfig(
        scenarios=tuple(ns.scenarios.split(",")),
        n_frames=ns.frames,
        seed=ns.seed,
        fps=ns.fps,
        speed_setpoint=ns.speed,
        episode_ticks=ns.episode_ticks,
        hold_extra_frames=ns.hold_frames,
        quant_step=ns.quant,
        noise_amp=ns.noise,
    )
    samples = generate_data(cfg)
    write_dataset(samples, ns.out)
    overrides = sum(1 for s in samples if s.override_active)
    print(f"wrote {len(samples)} samples to {ns.out}")
    print(f"  override_active on {overrides} frames ({100 * overrides / len(samples):.1f}%)")
    _print_label_histogram([s.manual_label for s in samples])
    return 0


def _cmd_label_auto(ns) -> int:
    _require(ns, "inp", "out")
    dataset = read_dataset(ns.inp)
    samples = [replace(s, manual_label=auto_label(s, ns.deadband)) for s in dataset.samples]
    write_dataset(samples, ns.out)
    print(f"labeled {len(samples)} samples -> {ns.out}")
    _print_label_histogram([s.manual_label for s in samples])
    return 0


def _cmd_balance(ns) -> int:
    _require(ns, "inp", "out")
    dataset = read_dataset(ns.inp)
    labels = _dataset_labels(dataset, ns.label_mode, ns.deadband)
    groups: Dict[str, List[int]] = {}
    for i, name in enumerate(labels):
        if name is not None:
            groups.setdefault(name, []).append(i)
    if not groups:
        raise SystemExit("no labeled samples to balance")
    target = min(len(v) for v in groups.values())
    rng = np.random.default_rng(ns.seed)
    keep: List[int] = []
    for name in sorted(groups):
        idx = groups[name]
        if len(idx) == target:
            keep.extend(idx)
        else:
            chosen = rng.choice(len(idx), size=target, replace=False)
            keep.extend(idx[j] for j in chosen)
    keep.sort()
    samples = [dataset.samples[i] for i in keep]
    write_dataset(samples, ns.out)
    print(f"kept {len(samples)} of {len(dataset)} samples ({target} per class) -> {ns.out}")
    return 0


def _cmd_split(ns) -> int:
    _require(ns, "inp", "out_train", "out_test")
    if not 0.0 < ns.test_fraction < 1.0:
        raise SystemExit(f"test-fraction {ns.test_fraction} outside (0,1)")
    dataset = read_dataset(ns.inp)
    perm = np.random.default_rng(ns.seed).permutation(len(dataset))
    n_test = int(ns.test_fraction * len(dataset) + 0.5)
    test = [dataset.samples[i] for i in perm[:n_test]]
    train_part = [dataset.samples[i] for i in perm[n_test:]]
    write_dataset(train_part, ns.out_train)
    write_dataset(test, ns.out_test)
    print(f"split {len(dataset)} -> {len(train_part)} train / {len(test)} test")
    return 0


def _cmd_train(ns) -> int:
    _require(ns, "data", "out")
    spec = ExperimentSpec(
        datasets=tuple(ns.data.split(",")),
        label_mode=ns.label_mode,
        balanced=ns.balanced,
        mask=ns.mask,
        variant=ns.arch,
        train=_train_config(ns),
        seed=ns.seed,
        deadband=ns.deadband,
        test_fraction=ns.test_fraction,
    )
    net, row, report = train_once(spec, ns.seed, ns.arch)
    with open(ns.out, "wb") as fh:
        fh.write(save_weights(net))
    print(format_rows(f"train {ns.arch} on {ns.data}", [row]))
    print(f"stop: {report.stop_reason}; weights -> {ns.out}")
    if ns.json:
        with open(ns.json, "w", encoding="utf-8") as fh:
            fh.write(rows_to_json({"train": [row]}))
    return 0


def _cmd_eval(ns) -> int:
    _require(ns, "net", "data")
    from ..datapipe import build_examples, to_arrays
    from ..tinynet import evaluate

    with open(ns.net, "rb") as fh:
        net = load_weights(fh.read())
    dataset = load_datasets(ns.data.split(","))
    mode = "classification_auto" if ns.label_mode == "auto" else "classification_manual"
    built = build_examples(dataset, preset_mask(ns.mask), mode, ns.deadband)
    if not built.examples:
        raise SystemExit("no labeled examples to evaluate")
    x, y, side = to_arrays(built.examples)
    scores = evaluate(net, (x, y, side) if side is not None else (x, y))
    print(f"{ns.data}: {scores['count']} examples, accuracy {100 * scores['accuracy']:.2f}%")
    for name, acc in zip(CLASSES, scores["per_class"]):
        shown = f"{100 * acc:.2f}%" if acc == acc else "-"
        print(f"  {name:<6} {shown}")
    if ns.json:
        with open(ns.json, "w", encoding="utf-8") as fh:
            json.dump(scores, fh, indent=2)
    return 0


def _cmd_experiment(ns) -> int:
    _require(ns, "data")
    datasets = ns.data.split(",")
    cfg = _train_config(ns)
    tables = {}
    if ns.study in ("labels", "all"):
        tables["labels"] = label_mode_table(
            datasets, cfg, ns.seed, ns.reps, deadband=ns.deadband
        )
    if ns.study in ("layers", "all"):
        tables["layers"] = layer_variant_table(datasets, cfg, ns.seed, deadband=ns.deadband)
    if ns.study in ("masks", "all"):
        tables["masks"] = mask_table(datasets, cfg, ns.seed, deadband=ns.deadband)
    titles = {
        "labels": "label source x balancing",
        "layers": "architecture variants",
        "masks": "input masks",
    }
    for name, rows in tables.items():
        print(format_rows(titles[name], rows))
        print()
    if ns.json:
        with open(ns.json, "w", encoding="utf-8") as fh:
            fh.write(rows_to_json(tables))
        print(f"report -> {ns.json}")
    return 0


def _cmd_closedloop(ns) -> int:
    cfg = EvalConfig(
        runs=ns.runs,
        seed=ns.seed,
        fps=ns.fps,
        speed_setpoint=ns.speed,
        max_seconds=ns.max_seconds,
        desired_steer=ns.desired,
        noise_amp=ns.noise,
    )
    if ns.policy == "proxy":
        _require(ns, "net")
        with open(ns.net, "rb") as fh:
            net = load_weights(fh.read())
        policy = ProxyPolicy(net, preset_mask(ns.mask))
    elif ns.policy == "oracle":
        policy = OraclePolicy(DriverConfig())
    else:
        policy = PassthroughPolicy()
    report = closed_loop_eval(ns.scenario, policy, cfg)
    print(report.as_text())
    if ns.json:
        with open(ns.json, "w", encoding="utf-8") as fh:
            json.dump(report.__dict__, fh, indent=2)
    return 0


def _cmd_drive(ns) -> int:
    host, port = _parse_address(ns.listen)
    net = None
    if ns.net:
        with open(ns.net, "rb") as fh:
            net = load_weights(fh.read())
    cfg = ServiceConfig(
        scenario=ns.scenario,
        fps=ns.fps,
        mask=ns.mask,
        inference_min_interval=ns.infer_interval,
        noise_amp=ns.noise,
        session_out=ns.session_out,
        seed=ns.seed,
    )
    service = DriveService(cfg, net=net)
    host, port = service.start(host, port)
    print(f"drive service on ws://{host}:{port} scenario={ns.scenario} proxy={'yes' if net else 'no'}")
    try:
        import time

        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


def _cmd_serve_infer(ns) -> int:
    _require(ns, "net")
    with open(ns.net, "rb") as fh:
        net = load_weights(fh.read())
    host, port = _parse_address(ns.listen)
    print(f"inference service on udp://{host}:{port}")
    try:
        stats = serve_inference(net, preset_mask(ns.mask), (host, port), desired_steer=ns.desired)
    except KeyboardInterrupt:
        return 0
    print(stats.as_text())
    return 0


def _cmd_parse(ns) -> int:
    _require(ns, "inp")
    with open(ns.inp, "rb") as fh:
        head = fh.read(4)
    if head == b"FGDS":
        dataset = read_dataset(ns.inp)
        grid = dataset.grid
        print(f"FGDS dataset: {len(dataset)} samples, grid {grid.rows}x{grid.cols}")
        overrides = sum(1 for s in dataset.samples if s.override_active)
        if len(dataset):
            print(f"  override_active on {overrides} ({100 * overrides / len(dataset):.1f}%)")
            span = dataset.samples[-1].timestamp_us - dataset.samples[0].timestamp_us
            print(f"  time span {span / 1e6:.1f}s")
        _print_label_histogram([
            None if s.manual_label == "unlabeled" else s.manual_label for s in dataset.samples
        ])
    elif head == b"FGNN":
        with open(ns.inp, "rb") as fh:
            net = load_weights(fh.read())
        print(f"FGNN network: {net.param_count} parameters")
        for i, (layer, shape) in enumerate(zip(net.spec.layers, net.spec.shapes())):
            print(f"  {i}: {type(layer).__name__:<8} -> {shape}")
    elif head == b"FGMV":
        grid = grid_for_resolution(640, 480)
        count = 0
        first = last = None
        with open(ns.inp, "rb") as fh:
            for frame in stream_frames(fh, grid):
                first = frame.seq if first is None else first
                last = frame.seq
                count += 1
        print(f"FGMV stream: {count} frames, seq {first}..{last}")
    else:
        raise SystemExit(f"{ns.inp}: unknown magic {head!r}")
    return 0


def _cmd_render(ns) -> int:
    _require(ns, "inp", "out")
    dataset = read_dataset(ns.inp)
    if not 0 <= ns.index < len(dataset):
        raise SystemExit(f"index {ns.index} outside 0..{len(dataset) - 1}")
    frame = dataset.samples[ns.index].flow
    field = mv_to_flowfield(frame)
    ppm = render_hsv(field, ns.max_mag)  # complete P6 image, one px per block
    body = ppm.index(b"255\n") + 4
    rgb = np.frombuffer(ppm, np.uint8, offset=body).reshape(field.rows, field.cols, 3)
    rgb = np.repeat(np.repeat(rgb, ns.scale, axis=0), ns.scale, axis=1)
    with open(ns.out, "wb") as fh:
        fh.write(f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    print(f"wrote {rgb.shape[1]}x{rgb.shape[0]} PPM -> {ns.out}")
    return 0


# -- parser assembly ---------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flowguard",
        description="optical-flow collision avoidance: data, training, services",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: Dict[str, argparse.ArgumentParser] = {}

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        _add_config_flag(p)
        subparsers[name] = p
        return p

    p = add("gen-data", _cmd_gen_data, "record scripted-operator episodes to a dataset")
    p.add_argument("--out", help="output .fgds path")
    p.add_argument("--frames", type=int, default=20000)
    p.add_argument("--scenarios", default=",".join(DEFAULT_SCENARIOS),
                   help=f"comma list from {world_names()}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--speed", type=float, default=0.8)
    p.add_argument("--episode-ticks", type=int, default=450)
    p.add_argument("--hold-frames", type=int, default=0,
                   help="operator lets go this many frames late")
    p.add_argument("--quant", type=float, default=0.5)
    p.add_argument("--noise", type=int, default=1)

    p = add("label-auto", _cmd_label_auto, "write automatic labels into manual_label")
    p.add_argument("--in", dest="inp")
    p.add_argument("--out")
    p.add_argument("--deadband", type=float, default=0.1)

    p = add("balance", _cmd_balance, "undersample a dataset to equal class counts")
    p.add_argument("--in", dest="inp")
    p.add_argument("--out")
    p.add_argument("--label-mode", default="auto", choices=("auto", "manual"))
    p.add_argument("--deadband", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = add("split", _cmd_split, "shuffle-split a dataset into train and test files")
    p.add_argument("--in", dest="inp")
    p.add_argument("--out-train")
    p.add_argument("--out-test")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)

    p = add("train", _cmd_train, "train a network and save FGNN weights")
    p.add_argument("--data", help="comma list of .fgds paths")
    p.add_argument("--out", help="output .fgnn path")
    p.add_argument("--label-mode", default="auto", choices=("auto", "manual"))
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--mask", default="best15x20", choices=preset_mask_names())
    p.add_argument("--arch", default="final")
    p.add_argument("--json", help="machine-readable report path")
    _add_train_flags(p)

    p = add("eval", _cmd_eval, "evaluate saved weights on a dataset")
    p.add_argument("--net", help=".fgnn path")
    p.add_argument("--data", help="comma list of .fgds paths")
    p.add_argument("--label-mode", default="auto", choices=("auto", "manual"))
    p.add_argument("--mask", default="best15x20", choices=preset_mask_names())
    p.add_argument("--deadband", type=float, default=0.1)
    p.add_argument("--json")

    p = add("experiment", _cmd_experiment, "run the study tables")
    p.add_argument("--study", default="all", choices=("labels", "layers", "masks", "all"))
    p.add_argument("--data", help="comma list of .fgds paths")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--json")
    _add_train_flags(p)

    p = add("closed-loop", _cmd_closedloop, "drive a policy through a scenario")
    p.add_argument("--scenario", default="frontal_wall")
    p.add_argument("--policy", default="proxy", choices=("proxy", "oracle", "passthrough"))
    p.add_argument("--net", help=".fgnn path (proxy policy)")
    p.add_argument("--mask", default="best15x20", choices=preset_mask_names())
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--speed", type=float, default=0.8)
    p.add_argument("--max-seconds", type=float, default=10.0)
    p.add_argument("--desired", type=float, default=0.5)
    p.add_argument("--noise", type=int, default=1)
    p.add_argument("--json")

    p = add("drive", _cmd_drive, "interactive drive service (websocket)")
    p.add_argument("--scenario", default="perimeter")
    p.add_argument("--net", help="optional .fgnn for the proxy")
    p.add_argument("--listen", default="127.0.0.1:8765")
    p.add_argument("--mask", default="best15x20", choices=preset_mask_names())
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--infer-interval", type=float, default=0.0)
    p.add_argument("--noise", type=int, default=1)
    p.add_argument("--session-out", help="write the recorded session here")
    p.add_argument("--seed", type=int, default=0)

    p = add("serve-infer", _cmd_serve_infer, "datagram inference service")
    p.add_argument("--net", help=".fgnn path")
    p.add_argument("--mask", default="best15x20", choices=preset_mask_names())
    p.add_argument("--listen", default="127.0.0.1:8900")
    p.add_argument("--desired", type=float, default=0.5)

    p = add("parse", _cmd_parse, "summarize an FGDS/FGNN/FGMV file")
    p.add_argument("--in", dest="inp")

    p = add("render", _cmd_render, "render one dataset frame to a PPM image")
    p.add_argument("--in", dest="inp")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--max-mag", type=float, default=16.0)
    p.add_argument("--scale", type=int, default=8)

    return parser, subparsers


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    try:
        ns = parse_with_config(parser, subparsers, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
