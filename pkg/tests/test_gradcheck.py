"""Analytic backprop gradients vs central finite differences.

The oracle is an independent float64 forward pass (numpy matmul, no float32
storage, no blocked accumulation); the production gradients come from the
layer kernels. Agreement within 1e-4 relative error on every weight is the
gradient-correctness contract.
"""

import numpy as np

import glycemlp as g
from glycemlp.network import NetworkConfig, loss_gradients

FD_STEP = 1e-4
TOLERANCE = 1e-4


def oracle_loss(w_ih64, w_ho64, x64, target):
    hidden = 1.0 / (1.0 + np.exp(-(w_ih64[:, :-1] @ x64 + w_ih64[:, -1])))
    out = 1.0 / (1.0 + np.exp(-(w_ho64[:, :-1] @ hidden + w_ho64[:, -1])))
    return 0.5 * (target - out[0]) ** 2


def fd_gradients(net, x, target):
    w_ih64 = net.w_ih2d.astype(np.float64)
    w_ho64 = net.w_ho2d.astype(np.float64)
    x64 = np.asarray(x, dtype=np.float64)
    grads = []
    for w in (w_ih64, w_ho64):
        grad = np.empty_like(w)
        it = np.nditer(w, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            keep = w[idx]
            w[idx] = keep + FD_STEP
            up = oracle_loss(w_ih64, w_ho64, x64, target)
            w[idx] = keep - FD_STEP
            down = oracle_loss(w_ih64, w_ho64, x64, target)
            w[idx] = keep
            grad[idx] = (up - down) / (2.0 * FD_STEP)
        grads.append(grad)
    return grads


def max_relative_error(net, x, target):
    g_ih, g_ho, _ = loss_gradients(net, x, target)
    fd_ih, fd_ho = fd_gradients(net, x, target)
    worst = 0.0
    for analytic, numeric in ((g_ih, fd_ih), (g_ho, fd_ho)):
        denom = np.maximum(1.0, np.abs(analytic))
        worst = max(worst, float(np.max(np.abs(analytic - numeric) / denom)))
    return worst


def check_shape(input_dim, hidden_dim, seeds):
    worst = 0.0
    for seed in seeds:
        cfg = NetworkConfig(input_dim=input_dim, hidden_dim=hidden_dim, seed=seed)
        net = g.init_weights(cfg)
        rng = np.random.default_rng(1000 + seed)
        x = rng.random(input_dim, dtype=np.float32)
        target = float(rng.integers(2))
        worst = max(worst, max_relative_error(net, x, target))
    return worst


def test_small_shapes_match_finite_differences():
    assert check_shape(3, 2, range(3)) < TOLERANCE
    assert check_shape(5, 3, range(3)) < TOLERANCE


def test_gradients_zero_when_saturated_towards_target():
    # output driven hard toward the target makes every gradient tiny
    cfg = NetworkConfig(input_dim=2, hidden_dim=2, seed=0)
    net = g.init_weights(cfg)
    net.w_ho[:] = np.array([0.0, 0.0, 30.0], dtype=np.float32)
    g_ih, g_ho, err = loss_gradients(net, [0.5, 0.5], 1.0)
    assert err < 1e-12
    assert np.max(np.abs(g_ih)) < 1e-12
    assert np.max(np.abs(g_ho)) < 1e-12
