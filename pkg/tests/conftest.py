import numpy as np
import pytest

import glycemlp as g


def make_record_split(rows: int, seed: int, signal: str, fraction: float = 0.75):
    """Synth records -> dataset -> stratified split -> normalized pair."""
    records = g.synth_dataset(rows, seed, signal)
    data = g.build_dataset(records, "synthetic")
    return g.normalize_split(g.train_test_split(data, fraction, seed))


def make_matrix_split(rows: int, columns: int, seed: int, signal: str = "planted-linear",
                      fraction: float = 0.75):
    data = g.synthetic_matrix(rows, columns, seed, signal)
    return g.normalize_split(g.train_test_split(data, fraction, seed))


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile every jitted kernel once so timed assertions exclude JIT cost."""
    pair = make_matrix_split(8, 3, seed=0)
    cfg = g.NetworkConfig(input_dim=3, hidden_dim=2, seed=0)
    for kind in (g.sequential(), g.parallel(2)):
        spec = g.TrainSpec(config=cfg, epochs=2, backend=kind, checkpoints=(1, 2))
        g.train(spec, pair)
    net = g.init_weights(cfg)
    x = np.array([0.1, 0.2, 0.3], dtype=np.float32)
    g.forward(net, x)
    g.backprop_update(net, x, 1.0)
    from glycemlp.network import loss_gradients

    loss_gradients(net, x, 0.0)
    from glycemlp import backend as B

    job = B.LayerJob.create(net.w_ih2d, x)
    for kind in (g.sequential(), g.parallel(2)):
        B.run_layer_forward(job, kind)
        B.run_layer_backward(job, np.zeros(2), kind)
        B.backpropagate_error(net.w_ho2d, np.zeros(1), kind)
    return True
