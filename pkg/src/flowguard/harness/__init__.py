"""Workflow layer: data recording, studies, closed-loop runs, and services."""

from .closedloop import (
    ClosedLoopReport,
    EvalConfig,
    OraclePolicy,
    PassthroughPolicy,
    ProxyPolicy,
    closed_loop_eval,
)
from .config import ConfigError, read_config
from .datagen import DataGenConfig, aimed_spawn, generate_data, world_for, world_names
from .driveservice import DriveService, ServiceConfig
from .experiments import (
    ExperimentSpec,
    MaskRow,
    ResultRow,
    arch_for,
    format_rows,
    label_mode_table,
    layer_variant_table,
    layer_variants,
    load_datasets,
    mask_arch,
    mask_rows,
    mask_table,
    rows_to_json,
    run_experiment,
    train_once,
)
from .inferserver import InferenceStats, serve_inference
from .cli import main

__all__ = [
    "ClosedLoopReport",
    "ConfigError",
    "DataGenConfig",
    "DriveService",
    "EvalConfig",
    "ExperimentSpec",
    "InferenceStats",
    "MaskRow",
    "OraclePolicy",
    "PassthroughPolicy",
    "ProxyPolicy",
    "ResultRow",
    "ServiceConfig",
    "aimed_spawn",
    "arch_for",
    "closed_loop_eval",
    "format_rows",
    "generate_data",
    "label_mode_table",
    "layer_variant_table",
    "layer_variants",
    "load_datasets",
    "main",
    "mask_arch",
    "mask_rows",
    "mask_table",
    "read_config",
    "rows_to_json",
    "run_experiment",
    "serve_inference",
    "train_once",
    "world_for",
    "world_names",
]
