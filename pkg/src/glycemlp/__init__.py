"""Glycemic-control classifier: tabular pipeline, one-hidden-layer backprop
network, sequential and neuron-parallel CPU engines, and a benchmark harness.
"""

from .backend import BackendKind, LayerJob, parallel, run_layer_backward, run_layer_forward, sequential
from .bench import BenchReport, BenchSpec, emit_speedup_table, run_bench
from .dataset import (
    Dataset,
    NormStats,
    SplitPair,
    build_dataset,
    normalize_apply,
    normalize_fit,
    normalize_split,
    parse_csv,
    split_by_sex,
    synthetic_matrix,
    train_test_split,
    write_csv,
)
from .errors import (
    GlycemlpError,
    NumericError,
    ParseError,
    SchemaError,
    ShapeError,
    ValidationError,
)
from .network import (
    Activations,
    Network,
    NetworkConfig,
    backprop_update,
    forward,
    init_weights,
    load_checkpoint,
    predict,
    save_checkpoint,
    sigmoid,
)
from .schema import (
    GOOD,
    HBA1C_POOR_CUTOFF_PCT,
    POOR,
    ParticipantRecord,
    derive_features,
    label_from_hba1c,
)
from .synth import synth_dataset
from .trainer import TrainReport, TrainSpec, epoch_sweep, evaluate, format_percent, train

__version__ = "0.1.0"

__all__ = [
    "Activations",
    "BackendKind",
    "BenchReport",
    "BenchSpec",
    "Dataset",
    "GlycemlpError",
    "GOOD",
    "HBA1C_POOR_CUTOFF_PCT",
    "LayerJob",
    "Network",
    "NetworkConfig",
    "NormStats",
    "NumericError",
    "POOR",
    "ParseError",
    "ParticipantRecord",
    "SchemaError",
    "ShapeError",
    "SplitPair",
    "TrainReport",
    "TrainSpec",
    "ValidationError",
    "backprop_update",
    "build_dataset",
    "derive_features",
    "emit_speedup_table",
    "epoch_sweep",
    "evaluate",
    "format_percent",
    "forward",
    "init_weights",
    "label_from_hba1c",
    "load_checkpoint",
    "normalize_apply",
    "normalize_fit",
    "normalize_split",
    "parallel",
    "parse_csv",
    "predict",
    "run_bench",
    "run_layer_backward",
    "run_layer_forward",
    "save_checkpoint",
    "sequential",
    "sigmoid",
    "split_by_sex",
    "synth_dataset",
    "synthetic_matrix",
    "train",
    "train_test_split",
    "write_csv",
]
