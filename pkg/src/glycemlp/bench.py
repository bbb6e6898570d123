"""Wall-clock benchmark harness: sequential vs parallel training time.

Each cell times the training loop only; the network is re-initialized from
the same seed before every repetition, so both engines do identical work and
the numbers are median-of-N with a warm-up run excluded. The GPU reference
figure (50x for the original CUDA implementation on a GTX 660 vs an
i7-3630QM) is carried in every report as context; desk-scale CPU runs are
not expected to approach it.
"""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import statistics
import time
import traceback
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import BackendKind, max_workers, parallel, run_train_segment, sequential
from .dataset import Dataset, SplitPair, synthetic_matrix
from .errors import ValidationError
from .network import NetworkConfig, init_weights

BENCH_FORMAT = "glycemlp-bench-report-v1"

SPEEDUP_HEADER = ("epochs", "sequential_seconds", "parallel_seconds", "speedup")

GPU_REFERENCE_SPEEDUP = 50.0
GPU_REFERENCE_CONTEXT = (
    "reference GPU result: 50x speedup for the original CUDA implementation "
    "(GeForce GTX 660, 960 cores vs. i7-3630QM 2.40 GHz); a desk-scale CPU "
    "run is not expected to reach it"
)


@dataclass(frozen=True)
class BenchSpec:
    """Workload description: a synthetic rows x columns load or a real split."""

    config: NetworkConfig
    epochs_grid: tuple[int, ...]
    rows: int | None = None
    columns: int | None = None
    split: SplitPair | None = None
    data_seed: int = 0
    repetitions: int = 3
    backends: tuple[BackendKind, ...] = field(default_factory=lambda: (sequential(), parallel()))

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValidationError(f"repetitions must be >= 1, got {self.repetitions}")
        grid = tuple(int(e) for e in self.epochs_grid)
        object.__setattr__(self, "epochs_grid", grid)
        if not grid or any(e < 1 for e in grid):
            raise ValidationError(f"epochs grid must be non-empty positive ints, got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError(f"epochs grid must be ascending, got {grid}")
        if self.split is None and (self.rows is None or self.columns is None):
            raise ValidationError("either a split or (rows, columns) must be given")


@dataclass(frozen=True)
class BenchCell:
    epochs: int
    backend: str
    workers: int
    median_seconds: float
    min_seconds: float
    max_seconds: float
    repetitions: int
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class SpeedupRow:
    epochs: int
    sequential_seconds: float
    parallel_seconds: float

    @property
    def speedup(self) -> float:
        return self.sequential_seconds / self.parallel_seconds


@dataclass
class BenchReport:
    cells: tuple[BenchCell, ...]
    speedups: tuple[SpeedupRow, ...]
    environment: dict
    gpu_reference: dict


def _bench_data(spec: BenchSpec) -> Dataset:
    if spec.split is not None:
        return spec.split.train
    return synthetic_matrix(spec.rows, spec.columns, spec.data_seed, signal="random")


def environment_info(workers: int, repetitions: int) -> dict:
    import numba

    try:
        layer = str(numba.threading_layer())
    except ValueError:  # no parallel region has run yet
        layer = "uninitialized"
    return {
        "hardware_parallelism": max(1, int(os.cpu_count() or 1)),
        "worker_pool_limit": max_workers(),
        "workers": workers,
        "repetitions": repetitions,
        "python": platform.python_version(),
        "machine": platform.machine(),
        "kernel_jit": f"numba {numba.__version__}",
        "threading_layer": layer,
    }


def run_bench(spec: BenchSpec) -> BenchReport:
    """Time every (epochs, backend) cell; warm-up runs are excluded.

    A failing backend marks its cells failed without stopping the others.
    Cells never reuse a mutated network: weights are re-drawn from the seed
    before the warm-up and before every repetition.
    """
    data = _bench_data(spec)
    if data.columns != spec.config.input_dim:
        raise ValidationError(
            f"bench data has {data.columns} columns, config.input_dim is "
            f"{spec.config.input_dim}"
        )
    feats = data.matrix()
    targets = data.labels.astype(np.float32)
    lr = spec.config.learning_rate

    cells: list[BenchCell] = []
    warmed: set[str] = set()
    for kind in spec.backends:
        for epochs in spec.epochs_grid:
            times: list[float] = []
            failed = False
            err_text = ""
            try:
                if kind.name not in warmed:
                    # warm-up: JIT compilation and thread-pool spin-up
                    warm = init_weights(spec.config)
                    run_train_segment(warm.w_ih2d, warm.w_ho2d, feats, targets, 1, lr, kind)
                    warmed.add(kind.name)
                for _ in range(spec.repetitions):
                    net = init_weights(spec.config)
                    t0 = time.perf_counter()
                    run_train_segment(net.w_ih2d, net.w_ho2d, feats, targets, epochs, lr, kind)
                    times.append(time.perf_counter() - t0)
            except Exception:
                failed = True
                err_text = traceback.format_exc(limit=1)
            if failed:
                cells.append(BenchCell(epochs, kind.name, kind.effective_workers,
                                       0.0, 0.0, 0.0, spec.repetitions, True, err_text))
            else:
                cells.append(BenchCell(
                    epochs, kind.name, kind.effective_workers,
                    statistics.median(times), min(times), max(times),
                    spec.repetitions,
                ))

    speedups: list[SpeedupRow] = []
    for epochs in spec.epochs_grid:
        seq = next((c for c in cells if c.epochs == epochs and c.backend == "sequential" and not c.failed), None)
        par = next((c for c in cells if c.epochs == epochs and c.backend == "parallel" and not c.failed), None)
        if seq is not None and par is not None:
            speedups.append(SpeedupRow(epochs, seq.median_seconds, par.median_seconds))

    workers = next((k.effective_workers for k in spec.backends if k.name == "parallel"), 1)
    return BenchReport(
        cells=tuple(cells),
        speedups=tuple(speedups),
        environment=environment_info(workers, spec.repetitions),
        gpu_reference={"speedup": GPU_REFERENCE_SPEEDUP, "context": GPU_REFERENCE_CONTEXT},
    )


def emit_speedup_table(report: BenchReport, dest: str | Path | None = None) -> str:
    """Plot-ready CSV `epochs,sequential_seconds,parallel_seconds,speedup`.

    Epochs with a missing or failed cell are omitted with a warning; a report
    with no complete pair yields a header-only table and a warning.
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(SPEEDUP_HEADER)
    if not report.speedups:
        warnings.warn("no complete sequential/parallel pair; speedup table is empty", stacklevel=2)
    covered = {s.epochs for s in report.speedups}
    skipped = sorted({c.epochs for c in report.cells} - covered)
    if skipped:
        warnings.warn(f"epochs without a complete backend pair omitted: {skipped}", stacklevel=2)
    for s in report.speedups:
        writer.writerow([s.epochs, repr(s.sequential_seconds), repr(s.parallel_seconds), repr(s.speedup)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8")
    return text


def bench_report_to_dict(report: BenchReport) -> dict:
    return {
        "format": BENCH_FORMAT,
        "environment": report.environment,
        "gpu_reference": report.gpu_reference,
        "cells": [
            {
                "epochs": c.epochs,
                "backend": c.backend,
                "workers": c.workers,
                "median_seconds": c.median_seconds,
                "min_seconds": c.min_seconds,
                "max_seconds": c.max_seconds,
                "repetitions": c.repetitions,
                "failed": c.failed,
                "error": c.error,
            }
            for c in report.cells
        ],
        "speedups": [
            {
                "epochs": s.epochs,
                "sequential_seconds": s.sequential_seconds,
                "parallel_seconds": s.parallel_seconds,
                "speedup": s.speedup,
            }
            for s in report.speedups
        ],
    }


def save_bench_report(report: BenchReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bench_report_to_dict(report), indent=1), encoding="utf-8")
