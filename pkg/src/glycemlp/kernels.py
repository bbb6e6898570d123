"""Numba kernels shared by the sequential and parallel execution engines.

Bitwise equivalence between engines rests on two rules enforced here:

1. Every dot product accumulates in float64 over fixed-width blocks
   (``BLOCK`` inputs per partial, partials combined in index order, bias
   added last). The blocking depends only on the operand length, never on
   the worker count, so any schedule reproduces the same rounding.
2. Weight updates compute ``w - (lr*delta)*x`` in float64 and round once to
   float32 on store, with that exact association everywhere.

The parallel training kernel runs one persistent parallel region per call:
each worker owns a fixed, block-aligned slice of hidden neurons, so a slice's
activations, weight rows, and output-layer partial sums stay in one core's
cache. Workers meet at a spin barrier twice per instance (after the forward
partials, and after the updates); the output neuron is combined redundantly
by every worker from the published partials, which is cheaper than handing
it to one worker and re-synchronizing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange, types
from numba.core import cgutils
from numba.extending import intrinsic

# Fixed reduction block width (inputs per float64 partial sum).
BLOCK = 16

# sync array slots
_CNT = 0
_GEN = 1


# ---------------------------------------------------------------------------
# CPU atomics (LLVM atomicrmw / atomic load / atomic store on int64 arrays)
# ---------------------------------------------------------------------------

@intrinsic
def _atomic_add(typingctx, arr, idx, val):
    """arr[idx] += val atomically (acq_rel); returns the old value."""
    sig = types.int64(arr, types.intp, types.int64)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        ary = cgutils.create_struct_proxy(signature.args[0])(context, builder, value=arr_v)
        ptr = builder.gep(ary.data, [idx_v])
        return builder.atomic_rmw("add", ptr, val_v, ordering="acq_rel")

    return sig, codegen


@intrinsic
def _atomic_load(typingctx, arr, idx):
    sig = types.int64(arr, types.intp)

    def codegen(context, builder, signature, args):
        arr_v, idx_v = args
        ary = cgutils.create_struct_proxy(signature.args[0])(context, builder, value=arr_v)
        ptr = builder.gep(ary.data, [idx_v])
        return builder.load_atomic(ptr, ordering="acquire", align=8)

    return sig, codegen


@intrinsic
def _atomic_store(typingctx, arr, idx, val):
    sig = types.void(arr, types.intp, types.int64)

    def codegen(context, builder, signature, args):
        arr_v, idx_v, val_v = args
        ary = cgutils.create_struct_proxy(signature.args[0])(context, builder, value=arr_v)
        ptr = builder.gep(ary.data, [idx_v])
        builder.store_atomic(val_v, ptr, ordering="release", align=8)
        return context.get_dummy_value()

    return sig, codegen


@njit(cache=True, inline="always")
def _barrier(sync, nw):
    # Centralized generation barrier. The last arriver resets the count and
    # bumps the generation; everyone else spins on the generation word. The
    # acq_rel/acquire/release pairing publishes all writes made before
    # arrival to every worker that leaves.
    my_gen = _atomic_load(sync, _GEN)
    if _atomic_add(sync, _CNT, 1) == nw - 1:
        _atomic_store(sync, _CNT, 0)
        _atomic_store(sync, _GEN, my_gen + 1)
    else:
        while _atomic_load(sync, _GEN) == my_gen:
            pass


# ---------------------------------------------------------------------------
# Shared arithmetic helpers (the single definition of every rounding step)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _blocked_dot(w2d, j, x):
    # float64 partials over BLOCK-wide slices, combined in index order
    n = x.shape[0]
    acc = 0.0
    b0 = 0
    while b0 < n:
        b1 = min(b0 + BLOCK, n)
        part = 0.0
        for i in range(b0, b1):
            part += np.float64(w2d[j, i]) * np.float64(x[i])
        acc += part
        b0 = b1
    return acc


@njit(cache=True, inline="always")
def _activation(w2d, x, j):
    # sigmoid(blocked dot + bias), rounded to float32 on return
    z = _blocked_dot(w2d, j, x) + np.float64(w2d[j, x.shape[0]])
    return np.float32(1.0 / (1.0 + math.exp(-z)))


@njit(cache=True, inline="always")
def _delta_from_error(err, act):
    # d(loss)/d(pre-activation) = upstream error * sigmoid derivative
    a = np.float64(act)
    return err * a * (1.0 - a)


@njit(cache=True, inline="always")
def _update_row(w2d, j, x, step):
    # w -= step*x elementwise in float64, rounded to float32 per store;
    # bias occupies the trailing slot and uses the bare step
    n = x.shape[0]
    for i in range(n):
        w2d[j, i] = np.float32(np.float64(w2d[j, i]) - step * np.float64(x[i]))
    w2d[j, n] = np.float32(np.float64(w2d[j, n]) - step)


@njit(cache=True)
def sigmoid64(x):
    """Plain float64 logistic; saturates to 0.0/1.0 beyond ~|x| = 37."""
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True)
def neuron_activation(w2d, x, j):
    """Single neuron's activation; callable per-unit from the debug pool."""
    return _activation(w2d, x, j)


@njit(cache=True)
def neuron_delta(err, act):
    return _delta_from_error(err, act)


# ---------------------------------------------------------------------------
# Layer-level kernels (one neuron = one unit of work)
# ---------------------------------------------------------------------------

@njit(cache=True)
def layer_forward_seq(w2d, x, out):
    for j in range(w2d.shape[0]):
        out[j] = _activation(w2d, x, j)


@njit(cache=True, parallel=True)
def layer_forward_par(w2d, x, out, nw):
    n = w2d.shape[0]
    nb = (n + BLOCK - 1) // BLOCK
    for w in prange(nw):
        j_lo = (w * nb // nw) * BLOCK
        j_hi = min(((w + 1) * nb // nw) * BLOCK, n)
        for j in range(j_lo, j_hi):
            out[j] = _activation(w2d, x, j)


@njit(cache=True)
def layer_backward_seq(w2d, x, acts, err, deltas, grads):
    n = w2d.shape[0]
    m = x.shape[0]
    for j in range(n):
        d = _delta_from_error(err[j], acts[j])
        deltas[j] = d
        for i in range(m):
            grads[j, i] = d * np.float64(x[i])
        grads[j, m] = d


@njit(cache=True, parallel=True)
def layer_backward_par(w2d, x, acts, err, deltas, grads, nw):
    n = w2d.shape[0]
    m = x.shape[0]
    nb = (n + BLOCK - 1) // BLOCK
    for w in prange(nw):
        j_lo = (w * nb // nw) * BLOCK
        j_hi = min(((w + 1) * nb // nw) * BLOCK, n)
        for j in range(j_lo, j_hi):
            d = _delta_from_error(err[j], acts[j])
            deltas[j] = d
            for i in range(m):
                grads[j, i] = d * np.float64(x[i])
            grads[j, m] = d


@njit(cache=True)
def backprop_error_seq(w2d, deltas, err_prev):
    # err_prev[i] = sum_j w[j, i] * delta[j], blocked over j
    n = w2d.shape[0]
    for i in range(err_prev.shape[0]):
        acc = 0.0
        b0 = 0
        while b0 < n:
            b1 = min(b0 + BLOCK, n)
            part = 0.0
            for j in range(b0, b1):
                part += np.float64(w2d[j, i]) * deltas[j]
            acc += part
            b0 = b1
        err_prev[i] = acc


@njit(cache=True, parallel=True)
def backprop_error_par(w2d, deltas, err_prev, nw):
    n = w2d.shape[0]
    m = err_prev.shape[0]
    nb = (m + BLOCK - 1) // BLOCK
    for w in prange(nw):
        i_lo = (w * nb // nw) * BLOCK
        i_hi = min(((w + 1) * nb // nw) * BLOCK, m)
        for i in range(i_lo, i_hi):
            acc = 0.0
            b0 = 0
            while b0 < n:
                b1 = min(b0 + BLOCK, n)
                part = 0.0
                for j in range(b0, b1):
                    part += np.float64(w2d[j, i]) * deltas[j]
                acc += part
                b0 = b1
            err_prev[i] = acc


@njit(cache=True)
def layer_deltas_seq(acts, err, deltas):
    for j in range(acts.shape[0]):
        deltas[j] = _delta_from_error(err[j], acts[j])


@njit(cache=True)
def apply_deltas(w2d, x, deltas, lr):
    # per-row update used by the composed backprop path; identical
    # association to the fused trainer (step = lr*delta first)
    for j in range(w2d.shape[0]):
        _update_row(w2d, j, x, lr * deltas[j])


# ---------------------------------------------------------------------------
# Fused online-SGD training segment (both engines)
# ---------------------------------------------------------------------------

@njit(cache=True)
def train_segment_seq(w_ih, w_ho, feats, targets, epochs, lr):
    """Run `epochs` passes of per-instance SGD in dataset order, in place."""
    rows = feats.shape[0]
    nh = w_ih.shape[0]
    nb = (nh + BLOCK - 1) // BLOCK
    h = np.empty(nh, dtype=np.float32)
    part = np.empty(nb + 1, dtype=np.float64)
    for _ in range(epochs):
        for r in range(rows):
            x = feats[r]
            for j in range(nh):
                h[j] = _activation(w_ih, x, j)
            for b in range(nb):
                j1 = min((b + 1) * BLOCK, nh)
                p = 0.0
                for j in range(b * BLOCK, j1):
                    p += np.float64(w_ho[0, j]) * np.float64(h[j])
                part[b] = p
            part[nb] = np.float64(w_ho[0, nh])
            z = 0.0
            for b in range(nb + 1):
                z += part[b]
            o = np.float32(1.0 / (1.0 + math.exp(-z)))
            d_o = _delta_from_error(np.float64(o) - np.float64(targets[r]), o)
            step_o = lr * d_o
            for j in range(nh):
                d_h = _delta_from_error(np.float64(w_ho[0, j]) * d_o, h[j])
                _update_row(w_ih, j, x, lr * d_h)
            for j in range(nh):
                w_ho[0, j] = np.float32(np.float64(w_ho[0, j]) - step_o * np.float64(h[j]))
            w_ho[0, nh] = np.float32(np.float64(w_ho[0, nh]) - step_o)


@njit(cache=True, parallel=True)
def train_segment_par(w_ih, w_ho, feats, targets, epochs, lr, nw, sync, h, part):
    """Same math as train_segment_seq on a persistent worker pool.

    Phase layout per instance (B = spin barrier):
      P1: each worker computes its hidden slice and the output-dot partials
          for its blocks; worker 0 publishes the output bias as the last
          partial. B.
      P2: every worker redundantly combines the partials (identical float64
          sequence, so identical delta), then updates its own w_ih rows,
          reading the not-yet-updated w_ho slice it owns, and finally its
          own w_ho slice; worker 0 updates the output bias. B.

    Cross-worker data flows only through `part` and the barrier words; h and
    the weight slices stay core-local.
    """
    rows = feats.shape[0]
    nh = w_ih.shape[0]
    nb = (nh + BLOCK - 1) // BLOCK
    for w in prange(nw):
        j_lo = (w * nb // nw) * BLOCK
        j_hi = min(((w + 1) * nb // nw) * BLOCK, nh)
        b_lo = w * nb // nw
        b_hi = (w + 1) * nb // nw
        for _ in range(epochs):
            for r in range(rows):
                x = feats[r]
                for j in range(j_lo, j_hi):
                    h[j] = _activation(w_ih, x, j)
                for b in range(b_lo, b_hi):
                    j1 = min((b + 1) * BLOCK, nh)
                    p = 0.0
                    for j in range(b * BLOCK, j1):
                        p += np.float64(w_ho[0, j]) * np.float64(h[j])
                    part[b] = p
                if w == 0:
                    part[nb] = np.float64(w_ho[0, nh])
                _barrier(sync, nw)
                z = 0.0
                for b in range(nb + 1):
                    z += part[b]
                o = np.float32(1.0 / (1.0 + math.exp(-z)))
                d_o = _delta_from_error(np.float64(o) - np.float64(targets[r]), o)
                step_o = lr * d_o
                for j in range(j_lo, j_hi):
                    d_h = _delta_from_error(np.float64(w_ho[0, j]) * d_o, h[j])
                    _update_row(w_ih, j, x, lr * d_h)
                for j in range(j_lo, j_hi):
                    w_ho[0, j] = np.float32(np.float64(w_ho[0, j]) - step_o * np.float64(h[j]))
                if w == 0:
                    w_ho[0, nh] = np.float32(np.float64(w_ho[0, nh]) - step_o)
                _barrier(sync, nw)


@njit(cache=True)
def eval_counts(w_ih, w_ho, feats, labels):
    """Confusion counts (tp, tn, fp, fn); poor (label 1) is the positive class."""
    rows = feats.shape[0]
    nh = w_ih.shape[0]
    h = np.empty(nh, dtype=np.float32)
    tp = tn = fp = fn = 0
    for r in range(rows):
        x = feats[r]
        for j in range(nh):
            h[j] = _activation(w_ih, x, j)
        o = _activation(w_ho, h, 0)
        pred = 1 if o >= np.float32(0.5) else 0
        if pred == 1:
            if labels[r] == 1:
                tp += 1
            else:
                fp += 1
        else:
            if labels[r] == 1:
                fn += 1
            else:
                tn += 1
    return tp, tn, fp, fn
