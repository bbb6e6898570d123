"""Epoch-driven training loop with checkpointed accuracy evaluation.

The flow is preprocess -> split -> train N epochs -> test: one network is
trained straight through, and at each checkpoint epoch the current weights
are evaluated on the train and test partitions without mutating them, so a
checkpointed run finishes with exactly the weights of an uncheckpointed one.
Cumulative wall time covers the training segments only; evaluation and data
handling are excluded, and the timing columns are the one non-deterministic
part of a report.
"""

from __future__ import annotations

import copy
import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .backend import BackendKind, run_train_segment, sequential
from .dataset import Dataset, SplitPair
from .errors import ShapeError, ValidationError
from .kernels import eval_counts
from .network import (
    DEVIATION_FLAGS,
    Network,
    NetworkConfig,
    checkpoint_dict,
    init_weights,
    network_from_dict,
)

REPORT_FORMAT = "glycemlp-train-report-v1"

CURVE_HEADER = ("epoch", "train_accuracy", "test_accuracy", "cumulative_seconds")

_DECADE_GRID = (1, 10, 100, 1_000, 10_000, 100_000)


def default_checkpoints(epochs: int) -> tuple[int, ...]:
    """Decade grid capped at `epochs`, with the final epoch always included."""
    pts = [e for e in _DECADE_GRID if e <= epochs]
    if not pts or pts[-1] != epochs:
        pts.append(epochs)
    return tuple(pts)


@dataclass(frozen=True)
class TrainSpec:
    config: NetworkConfig
    epochs: int
    backend: BackendKind = None  # type: ignore[assignment]
    checkpoints: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.backend is None:
            object.__setattr__(self, "backend", sequential())
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.checkpoints is None:
            object.__setattr__(self, "checkpoints", default_checkpoints(self.epochs))
        cps = tuple(int(c) for c in self.checkpoints)
        object.__setattr__(self, "checkpoints", cps)
        if not cps:
            raise ValidationError("checkpoints must not be empty")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValidationError(f"checkpoints must be strictly increasing, got {cps}")
        if cps[0] < 1 or cps[-1] > self.epochs:
            raise ValidationError(f"checkpoints must lie in [1, {self.epochs}], got {cps}")


@dataclass(frozen=True)
class CheckpointRow:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    cumulative_seconds: float
    train_confusion: dict
    test_confusion: dict


@dataclass
class TrainReport:
    rows: tuple[CheckpointRow, ...]
    network: Network
    metadata: dict
    diverged: bool = False


def _confusion(net: Network, d: Dataset) -> tuple[float, dict]:
    tp, tn, fp, fn = eval_counts(net.w_ih2d, net.w_ho2d, d.matrix(), d.labels)
    acc = (int(tp) + int(tn)) / d.rows
    return acc, {"tp": int(tp), "tn": int(tn), "fp": int(fp), "fn": int(fn)}


def evaluate(net: Network, d: Dataset) -> float:
    """Fraction of rows whose prediction matches the label, at full precision."""
    if d.rows == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if d.columns != net.config.input_dim:
        raise ShapeError(f"dataset has {d.columns} columns, network expects {net.config.input_dim}")
    acc, _ = _confusion(net, d)
    return acc


def confusion(net: Network, d: Dataset) -> dict:
    """tp/tn/fp/fn counts with poor as the positive class."""
    if d.rows == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    _, counts = _confusion(net, d)
    return counts


def format_percent(accuracy: float) -> str:
    """Render an accuracy the way reports quote it, e.g. 0.9565 -> '95.65%'."""
    return f"{accuracy * 100.0:.2f}%"


def train(spec: TrainSpec, split: SplitPair, initial_net: Network | None = None) -> TrainReport:
    """Per-instance online SGD over the split, deterministic per (spec, split).

    Instances are visited in dataset order within each epoch with no
    reshuffling. If a weight goes non-finite, training aborts and the report
    carries the last finite checkpoint (``diverged`` set).
    """
    train_d, test_d = split.train, split.test
    if train_d.norm_stats is None or test_d.norm_stats is None:
        raise ValidationError("split must be normalized with train-fitted stats before training")
    if train_d.columns != spec.config.input_dim:
        raise ShapeError(
            f"split has {train_d.columns} feature columns, config.input_dim is "
            f"{spec.config.input_dim}"
        )
    overlap = set(train_d.row_ids) & set(test_d.row_ids)
    if overlap:
        raise ValidationError(f"train/test partitions share row ids: {sorted(overlap)[:5]}")

    net = initial_net.copy() if initial_net is not None else init_weights(spec.config)
    feats = train_d.matrix()
    targets = train_d.labels.astype(np.float32)
    lr = spec.config.learning_rate

    rows: list[CheckpointRow] = []
    last_good = net.copy()
    cum_seconds = 0.0
    prev_epoch = 0
    diverged = False
    for cp in spec.checkpoints:
        t0 = time.perf_counter()
        run_train_segment(net.w_ih2d, net.w_ho2d, feats, targets, cp - prev_epoch, lr, spec.backend)
        cum_seconds += time.perf_counter() - t0
        prev_epoch = cp
        if not net.weights_finite():
            diverged = True
            break
        tr_acc, tr_conf = _confusion(net, train_d)
        te_acc, te_conf = _confusion(net, test_d)
        rows.append(CheckpointRow(cp, tr_acc, te_acc, cum_seconds, tr_conf, te_conf))
        last_good = net.copy()
    if not diverged and prev_epoch < spec.epochs:
        t0 = time.perf_counter()
        run_train_segment(net.w_ih2d, net.w_ho2d, feats, targets, spec.epochs - prev_epoch, lr, spec.backend)
        cum_seconds += time.perf_counter() - t0
        if not net.weights_finite():
            diverged = True
        else:
            last_good = net.copy()

    final = last_good if diverged else net
    metadata = {
        "seed": spec.config.seed,
        "backend": spec.backend.name,
        "workers": spec.backend.effective_workers,
        "dataset_tag": train_d.subset_tag,
        "epochs": spec.epochs,
        "checkpoints": list(spec.checkpoints),
        "learning_rate": spec.config.learning_rate,
        "input_dim": spec.config.input_dim,
        "hidden_dim": spec.config.hidden_dim,
        "output_dim": spec.config.output_dim,
        "split": {
            "fraction": split.fraction,
            "seed": split.seed,
            "stratified": split.stratified,
            "train_rows": train_d.rows,
            "test_rows": test_d.rows,
        },
        "norm_stats": {
            "col_min": [float(v) for v in train_d.norm_stats.col_min],
            "col_max": [float(v) for v in train_d.norm_stats.col_max],
        },
        "deviation_flags": list(DEVIATION_FLAGS),
        "diverged": diverged,
    }
    return TrainReport(rows=tuple(rows), network=final, metadata=metadata, diverged=diverged)


def epoch_sweep(spec: TrainSpec, split: SplitPair) -> tuple[CheckpointRow, ...]:
    """Checkpoint rows from a single training run with interleaved evaluation."""
    return train(spec, split).rows


def write_curve_csv(rows: Iterable[CheckpointRow], dest: str | Path | IO[str]) -> None:
    """Plot-ready accuracy-vs-epochs table; one row per checkpoint."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for row in rows:
            writer.writerow([
                row.epoch,
                repr(row.train_accuracy),
                repr(row.test_accuracy),
                repr(row.cumulative_seconds),
            ])
    finally:
        if own:
            fh.close()


def read_curve_csv(source: str | Path) -> list[dict]:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CURVE_HEADER:
            raise ValidationError(f"unexpected curve header {header}")
        return [
            {
                "epoch": int(cells[0]),
                "train_accuracy": float(cells[1]),
                "test_accuracy": float(cells[2]),
                "cumulative_seconds": float(cells[3]),
            }
            for cells in reader
        ]


def report_to_dict(report: TrainReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "metadata": report.metadata,
        "rows": [
            {
                "epoch": r.epoch,
                "train_accuracy": r.train_accuracy,
                "test_accuracy": r.test_accuracy,
                "train_confusion": r.train_confusion,
                "test_confusion": r.test_confusion,
                "cumulative_seconds": r.cumulative_seconds,
            }
            for r in report.rows
        ],
        "checkpoint": checkpoint_dict(report.network),
    }


def save_report(report: TrainReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=1), encoding="utf-8")


def load_report(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != REPORT_FORMAT:
        raise ValidationError(f"unsupported report format {doc.get('format')!r}")
    return doc


def network_from_report(doc: dict) -> Network:
    return network_from_dict(doc["checkpoint"])


def strip_timing(doc: dict) -> dict:
    """Copy of a report document with the designated timing fields zeroed.

    Everything else in a report is deterministic for fixed seeds, so two
    stripped documents from identical invocations compare byte-equal.
    """
    out = copy.deepcopy(doc)
    for row in out.get("rows", ()):
        row["cumulative_seconds"] = 0.0
    return out
