"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Timed criteria rely on the session-scoped kernel warm-up fixture so
JIT compilation is never billed to the measured section.
"""

import io
import json
import time

import numpy as np

import glycemlp as g
from glycemlp import backend as B
from glycemlp.bench import BenchSpec
from glycemlp.network import checkpoint_dict, network_from_dict
from glycemlp.trainer import TrainSpec, report_to_dict, strip_timing, write_curve_csv

from conftest import make_record_split
from test_gradcheck import max_relative_error

GRAD_TOLERANCE = 1e-4


def report(number: int, ok: bool, detail: str) -> None:
    print(f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {number}: {detail}"


def test_criterion_1_gradient_correctness(warm_kernels):
    t0 = time.perf_counter()
    worst = 0.0
    for input_dim, hidden_dim in ((3, 2), (5, 3), (33, 33)):
        for seed in range(10):
            cfg = g.NetworkConfig(input_dim=input_dim, hidden_dim=hidden_dim, seed=seed)
            net = g.init_weights(cfg)
            rng = np.random.default_rng(500 + seed)
            x = rng.random(input_dim, dtype=np.float32)
            target = float(rng.integers(2))
            worst = max(worst, max_relative_error(net, x, target))
    elapsed = time.perf_counter() - t0
    ok = worst < GRAD_TOLERANCE and elapsed < 10.0
    report(1, ok, f"max relative gradient error {worst:.2e} (tol {GRAD_TOLERANCE}), "
                  f"{elapsed:.1f}s (< 10 s) over shapes 3-2-1/5-3-1/33-33-1, seeds 0-9")


def test_criterion_2_backend_bitwise_equivalence(warm_kernels):
    t0 = time.perf_counter()
    data = g.synthetic_matrix(120, 33, seed=7, signal="planted-linear")
    pair = g.normalize_split(g.train_test_split(data, 0.75, seed=7))
    cfg = g.NetworkConfig(input_dim=33, hidden_dim=33, seed=7)
    worker_counts = sorted({1, B.hardware_parallelism()})
    nets = []
    for kind in (g.sequential(), *(g.parallel(w) for w in worker_counts)):
        spec = TrainSpec(config=cfg, epochs=1_000, backend=kind, checkpoints=(1_000,))
        nets.append(g.train(spec, pair).network)
    seq = nets[0]
    bitwise = all(seq.w_ih.tobytes() == n.w_ih.tobytes()
                  and seq.w_ho.tobytes() == n.w_ho.tobytes() for n in nets[1:])
    preds = [[g.predict(n, row) for row in pair.test.matrix()] for n in nets]
    same_preds = all(p == preds[0] for p in preds[1:])
    elapsed = time.perf_counter() - t0
    ok = bitwise and same_preds and elapsed < 30.0
    report(2, ok, f"33-33-1, 1000 epochs, worker counts {worker_counts}: weights "
                  f"byte-identical={bitwise}, predictions identical={same_preds}, "
                  f"{elapsed:.1f}s (< 30 s)")


def test_criterion_3_protocol_shape():
    records = g.synth_dataset(120, seed=7, signal="planted-linear")
    male, female = g.split_by_sex(records)
    data = g.build_dataset(records, "synthetic")
    pair = g.train_test_split(data, 0.75, seed=0)
    ok = (len(male), len(female)) == (61, 59) and (pair.train.rows, pair.test.rows) == (90, 30)
    report(3, ok, f"sex partition {len(male)}/{len(female)} (want 61/59); "
                  f"120 rows at 0.75 -> {pair.train.rows}/{pair.test.rows} (want 90/30)")


def test_criterion_4_learnability_target(warm_kernels):
    t0 = time.perf_counter()
    passed = 0
    finals = []
    for seed in range(10):
        pair = make_record_split(61, seed=seed, signal="planted-linear")
        cfg = g.NetworkConfig(input_dim=pair.train.columns, seed=seed, learning_rate=0.1)
        spec = TrainSpec(config=cfg, epochs=100_000, backend=g.parallel(),
                         checkpoints=(100_000,))
        row = g.train(spec, pair).rows[-1]
        finals.append((round(row.train_accuracy, 3), round(row.test_accuracy, 3)))
        if row.train_accuracy >= 0.95 and row.test_accuracy >= 0.80:
            passed += 1
    elapsed = time.perf_counter() - t0
    ok = passed >= 8 and elapsed < 300.0
    report(4, ok, f"planted-linear 61 rows, 100k epochs: {passed}/10 seeds reached "
                  f"train>=0.95 & test>=0.80 (need >=8); {elapsed:.0f}s (< 300 s); "
                  f"(train, test) per seed: {finals}")


def test_criterion_5_overfitting_demonstration(warm_kernels):
    passed = 0
    finals = []
    for seed in range(10):
        pair = make_record_split(59, seed=seed, signal="random")
        cfg = g.NetworkConfig(input_dim=pair.train.columns, seed=seed, learning_rate=0.1)
        spec = TrainSpec(config=cfg, epochs=100_000, backend=g.sequential(),
                         checkpoints=(100_000,))
        row = g.train(spec, pair).rows[-1]
        finals.append((round(row.train_accuracy, 3), round(row.test_accuracy, 3)))
        if row.train_accuracy >= 0.90 and row.test_accuracy <= 0.75:
            passed += 1
    ok = passed >= 7
    report(5, ok, f"weak-signal 59 rows, 100k epochs: {passed}/10 seeds memorized "
                  f"(train>=0.90) without generalizing (test<=0.75), need >=7; "
                  f"(train, test) per seed: {finals}")


def test_criterion_6_speedup_harness_validity(warm_kernels):
    hw = B.hardware_parallelism()
    workers = min(hw, B.max_workers())
    cfg = g.NetworkConfig(input_dim=33, hidden_dim=512, seed=0)

    spec = BenchSpec(config=cfg, epochs_grid=(100,), rows=10_000, columns=33,
                     data_seed=0, repetitions=3,
                     backends=(g.sequential(), g.parallel(workers)))
    rep = g.run_bench(spec)
    seq_cell = next(c for c in rep.cells if c.backend == "sequential")
    speedup = rep.speedups[0].speedup

    spec1 = BenchSpec(config=cfg, epochs_grid=(100,), rows=10_000, columns=33,
                      data_seed=0, repetitions=3, backends=(g.parallel(1),))
    rep1 = g.run_bench(spec1)
    par1_cell = next(c for c in rep1.cells if c.backend == "parallel")
    ratio1 = par1_cell.median_seconds / seq_cell.median_seconds

    has_reference = rep.gpu_reference.get("speedup") == 50.0
    print(f"    measured speedup {speedup:.2f}x at workers={workers}; "
          f"workers=1 time ratio {ratio1:.2f}")
    print(f"    {rep.gpu_reference['context']}")

    ok = (0.5 <= ratio1 <= 1.5) and has_reference
    detail = (f"workers=1 ratio {ratio1:.2f} in [0.5, 1.5]; GPU reference figure "
              f"(50x) carried in report={has_reference}")
    if hw >= 4:
        ok = ok and speedup > 1.5
        detail += f"; speedup {speedup:.2f}x > 1.5 at {workers} workers"
    else:
        detail += (f"; >1.5x clause needs >=4 hardware workers, machine has {hw} "
                   f"(measured {speedup:.2f}x at {workers})")
    report(6, ok, detail)


def test_criterion_7_determinism_suite(warm_kernels):
    checks = {}

    data = g.build_dataset(g.synth_dataset(60, seed=3), "synthetic")
    split_a = g.train_test_split(data, 0.75, seed=5)
    split_b = g.train_test_split(data, 0.75, seed=5)
    checks["split"] = (split_a.train.features.tobytes() == split_b.train.features.tobytes()
                       and split_a.train.row_ids == split_b.train.row_ids)

    cfg = g.NetworkConfig(input_dim=30, seed=9)
    checks["init"] = (g.init_weights(cfg).w_ih.tobytes() == g.init_weights(cfg).w_ih.tobytes()
                      and g.init_weights(cfg).w_ho.tobytes() == g.init_weights(cfg).w_ho.tobytes())

    pair = make_record_split(40, seed=2, signal="planted-linear")
    spec = TrainSpec(config=g.NetworkConfig(input_dim=pair.train.columns, seed=2),
                     epochs=200, backend=g.parallel(), checkpoints=(1, 200))
    rep_a, rep_b = g.train(spec, pair), g.train(spec, pair)
    checks["train"] = (rep_a.network.w_ih.tobytes() == rep_b.network.w_ih.tobytes()
                       and json.dumps(strip_timing(report_to_dict(rep_a)))
                       == json.dumps(strip_timing(report_to_dict(rep_b))))

    def sweep_bytes():
        rows = g.epoch_sweep(spec, pair)
        buf = io.StringIO()
        write_curve_csv(rows, buf)
        # timing column is the designated non-deterministic field
        return "\n".join(",".join(line.split(",")[:3]) for line in buf.getvalue().splitlines())

    checks["sweep"] = sweep_bytes() == sweep_bytes()

    def synth_bytes():
        buf = io.StringIO()
        g.write_csv(g.synth_dataset(50, seed=4), buf)
        return buf.getvalue().encode()

    checks["synth"] = synth_bytes() == synth_bytes()

    ok = all(checks.values())
    report(7, ok, f"byte-reproducible under fixed seeds: {checks}")


def test_criterion_8_round_trip_suite(tmp_path):
    records = g.synth_dataset(120, seed=11, signal="planted-linear")
    buf = io.StringIO()
    g.write_csv(records, buf)
    parsed = g.parse_csv(buf.getvalue().encode())
    csv_ok = len(parsed) == len(records)
    for a, b in zip(records, parsed):
        csv_ok &= a.id == b.id and a.sex == b.sex and a.on_med == b.on_med
        for name in ("age_years", "height_m", "weight_kg", "waist_cm", "hip_cm",
                     "neck_cm", "wrist_right_cm", "wrist_left_cm", "ankle_cm",
                     "hba1c_pct"):
            av, bv = getattr(a, name), getattr(b, name)
            csv_ok &= abs(av - bv) <= 1e-9 * max(1.0, abs(av))
        for key, value in a.joint_angles_deg.items():
            csv_ok &= abs(value - b.joint_angles_deg[key]) <= 1e-9
    buf2 = io.StringIO()
    g.write_csv(parsed, buf2)
    csv_ok &= buf.getvalue() == buf2.getvalue()

    net = g.init_weights(g.NetworkConfig(input_dim=30, hidden_dim=17, seed=13))
    path = tmp_path / "net.json"
    g.save_checkpoint(net, path)
    loaded = g.load_checkpoint(path)
    ckpt_ok = (loaded.w_ih.tobytes() == net.w_ih.tobytes()
               and loaded.w_ho.tobytes() == net.w_ho.tobytes()
               and json.dumps(checkpoint_dict(network_from_dict(checkpoint_dict(net))))
               == json.dumps(checkpoint_dict(net)))

    ok = csv_ok and ckpt_ok
    report(8, ok, f"CSV round trip within 1e-9 (and byte-stable)={csv_ok}; "
                  f"checkpoint round trip exact={ckpt_ok}")
