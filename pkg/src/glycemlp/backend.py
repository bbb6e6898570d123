"""Interchangeable layer-execution engines with an exact-equivalence contract.

The sequential engine is the reference; the parallel engine assigns one
logical worker per neuron, mapped onto a bounded pool, with a barrier
between layer passes. Because both engines share the kernels' fixed
reduction and rounding rules, their outputs are bit-identical for any
worker count. The equivalence is bitwise, not tolerance-based.

``debug=True`` on the layer operations (and ``forward_pair_debug``) runs an
instrumented pure-Python worker pool instead: real threads claim neuron
indices from a shared counter, a shadow array counts writes per output slot
(each slot must be written exactly once), and generation stamps prove the
output layer never reads a hidden activation before it was produced. The
instrumented path exists to make the concurrency contract checkable; the
production path is the numba one.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass

import numpy as np
from numba import config as numba_config
from numba import set_num_threads

from . import kernels
from .errors import ShapeError, ValidationError

SEQUENTIAL = "sequential"
PARALLEL = "parallel"


def hardware_parallelism() -> int:
    return os.cpu_count() or 1


def max_workers() -> int:
    """Upper bound on pool size (the numba thread pool is sized at import)."""
    return int(numba_config.NUMBA_NUM_THREADS)


@dataclass(frozen=True)
class BackendKind:
    """Engine selector: `sequential`, or `parallel` with a worker-pool size."""

    name: str
    workers: int = 1

    def __post_init__(self) -> None:
        if self.name not in (SEQUENTIAL, PARALLEL):
            raise ValidationError(f"backend must be {SEQUENTIAL} or {PARALLEL}, got {self.name!r}")
        if self.workers < 1:
            raise ValidationError(f"worker_count must be >= 1, got {self.workers}")

    @property
    def effective_workers(self) -> int:
        """Pool size actually used; clamped to the numba thread-pool capacity."""
        if self.name == SEQUENTIAL:
            return 1
        return min(self.workers, max_workers())


def sequential() -> BackendKind:
    return BackendKind(SEQUENTIAL, 1)


def parallel(workers: int | None = None) -> BackendKind:
    return BackendKind(PARALLEL, hardware_parallelism() if workers is None else workers)


@dataclass
class LayerJob:
    """One dense layer pass: weights (n_neurons x (n_inputs+1)), inputs, outputs."""

    weights: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.weights.dtype != np.float32:
            raise ShapeError("weights must be a 2-D float32 array")
        if self.inputs.ndim != 1 or self.inputs.dtype != np.float32:
            raise ShapeError("inputs must be a 1-D float32 array")
        if self.weights.shape[1] != self.inputs.shape[0] + 1:
            raise ShapeError(
                f"weights row length {self.weights.shape[1]} != n_inputs+1 "
                f"({self.inputs.shape[0]}+1)"
            )
        if self.outputs.shape != (self.weights.shape[0],) or self.outputs.dtype != np.float32:
            raise ShapeError("outputs must be a float32 array with one slot per neuron")

    @classmethod
    def create(cls, weights: np.ndarray, inputs: np.ndarray) -> "LayerJob":
        w = np.ascontiguousarray(weights, dtype=np.float32)
        x = np.ascontiguousarray(inputs, dtype=np.float32)
        return cls(weights=w, inputs=x, outputs=np.empty(w.shape[0], dtype=np.float32))


def _pool_run(n_units: int, workers: int, work):
    """Logical worker pool: threads claim unit indices from a shared counter."""
    counter = {"next": 0}
    lock = threading.Lock()

    def run():
        while True:
            with lock:
                j = counter["next"]
                counter["next"] += 1
            if j >= n_units:
                return
            work(j)

    threads = [threading.Thread(target=run) for _ in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()


def _forward_debug(job: LayerJob, workers: int) -> np.ndarray:
    shadow = np.zeros(job.outputs.shape[0], dtype=np.int64)

    def work(j: int) -> None:
        job.outputs[j] = kernels.neuron_activation(job.weights, job.inputs, j)
        shadow[j] += 1

    _pool_run(job.outputs.shape[0], workers, work)
    if not (shadow == 1).all():
        bad = np.flatnonzero(shadow != 1)
        raise RuntimeError(f"output slots written != once: indices {bad.tolist()}")
    return job.outputs


def run_layer_forward(job: LayerJob, kind: BackendKind, debug: bool = False) -> np.ndarray:
    """outputs[j] = sigmoid(dot(weights row j, inputs) + bias_j), filled in place."""
    if debug and kind.name == PARALLEL:
        return _forward_debug(job, kind.effective_workers)
    if kind.name == SEQUENTIAL:
        kernels.layer_forward_seq(job.weights, job.inputs, job.outputs)
    else:
        nw = kind.effective_workers
        set_num_threads(nw)
        kernels.layer_forward_par(job.weights, job.inputs, job.outputs, nw)
    return job.outputs


def run_layer_backward(
    job: LayerJob,
    upstream_error: np.ndarray,
    kind: BackendKind,
    debug: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-neuron deltas and gradient rows for one layer.

    ``upstream_error[j]`` is dE/d(output_j); ``job.outputs`` must hold the
    layer's forward activations. Each worker owns one neuron's delta and its
    full gradient row (inputs..., bias last), so rows never overlap.
    """
    n = job.weights.shape[0]
    m = job.inputs.shape[0]
    err = np.ascontiguousarray(upstream_error, dtype=np.float64)
    if err.shape != (n,):
        raise ShapeError(f"upstream_error must have shape ({n},), got {err.shape}")
    deltas = np.empty(n, dtype=np.float64)
    grads = np.empty((n, m + 1), dtype=np.float64)
    if debug and kind.name == PARALLEL:
        shadow = np.zeros(n, dtype=np.int64)
        x64 = job.inputs.astype(np.float64)

        def work(j: int) -> None:
            d = kernels.neuron_delta(err[j], job.outputs[j])
            deltas[j] = d
            grads[j, :m] = d * x64
            grads[j, m] = d
            shadow[j] += 1

        _pool_run(n, kind.effective_workers, work)
        if not (shadow == 1).all():
            raise RuntimeError("gradient rows written != once")
        return deltas, grads
    if kind.name == SEQUENTIAL:
        kernels.layer_backward_seq(job.weights, job.inputs, job.outputs, err, deltas, grads)
    else:
        nw = kind.effective_workers
        set_num_threads(nw)
        kernels.layer_backward_par(job.weights, job.inputs, job.outputs, err, deltas, grads, nw)
    return deltas, grads


def backpropagate_error(weights: np.ndarray, deltas: np.ndarray, kind: BackendKind) -> np.ndarray:
    """Fold a layer's deltas back into upstream error terms (W^T @ delta, no bias)."""
    w = np.ascontiguousarray(weights, dtype=np.float32)
    d = np.ascontiguousarray(deltas, dtype=np.float64)
    if w.ndim != 2 or d.shape != (w.shape[0],):
        raise ShapeError("weights must be (n, m+1) and deltas length n")
    err_prev = np.empty(w.shape[1] - 1, dtype=np.float64)
    if kind.name == SEQUENTIAL:
        kernels.backprop_error_seq(w, d, err_prev)
    else:
        nw = kind.effective_workers
        set_num_threads(nw)
        kernels.backprop_error_par(w, d, err_prev, nw)
    return err_prev


def run_train_segment(
    w_ih2d: np.ndarray,
    w_ho2d: np.ndarray,
    feats2d: np.ndarray,
    targets: np.ndarray,
    epochs: int,
    lr: float,
    kind: BackendKind,
) -> None:
    """Run `epochs` of per-instance SGD in place under the chosen engine."""
    if feats2d.shape[1] != w_ih2d.shape[1] - 1:
        raise ShapeError(
            f"feature count {feats2d.shape[1]} != input_dim {w_ih2d.shape[1] - 1}"
        )
    if targets.shape[0] != feats2d.shape[0]:
        raise ShapeError("targets length must match feature rows")
    if kind.name == SEQUENTIAL:
        kernels.train_segment_seq(w_ih2d, w_ho2d, feats2d, targets, epochs, lr)
        return
    nw = kind.effective_workers
    nh = w_ih2d.shape[0]
    nb = (nh + kernels.BLOCK - 1) // kernels.BLOCK
    sync = np.zeros(8, dtype=np.int64)  # one cache line: [count, generation]
    h = np.empty(nh, dtype=np.float32)
    part = np.empty(nb + 1, dtype=np.float64)
    set_num_threads(nw)
    kernels.train_segment_par(w_ih2d, w_ho2d, feats2d, targets, epochs, lr, nw, sync, h, part)


def forward_pair_debug(
    w_ih2d: np.ndarray,
    w_ho2d: np.ndarray,
    instance: np.ndarray,
    workers: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """Instrumented two-layer forward proving the inter-layer barrier.

    Hidden workers stamp a generation counter per activation slot; after a
    real barrier, the output pass asserts every stamp belongs to the current
    generation, i.e. no hidden slot is read before it was written.
    """
    nh = w_ih2d.shape[0]
    x = np.ascontiguousarray(instance, dtype=np.float32)
    hidden = np.empty(nh, dtype=np.float32)
    stamps = np.zeros(nh, dtype=np.int64)
    generation = 1
    barrier = threading.Barrier(workers)
    out = np.empty(w_ho2d.shape[0], dtype=np.float32)
    errors: list[str] = []
    counter = {"next": 0}
    lock = threading.Lock()

    def run(worker_id: int) -> None:
        while True:
            with lock:
                j = counter["next"]
                counter["next"] += 1
            if j >= nh:
                break
            hidden[j] = kernels.neuron_activation(w_ih2d, x, j)
            stamps[j] = generation
        barrier.wait()  # layer boundary: hidden must be complete past here
        if worker_id == 0:
            stale = np.flatnonzero(stamps != generation)
            if stale.size:
                errors.append(f"hidden slots read before write: {stale.tolist()}")
            else:
                kernels.layer_forward_seq(w_ho2d, hidden, out)

    threads = [threading.Thread(target=run, args=(i,)) for i in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise RuntimeError(errors[0])
    return hidden, out
