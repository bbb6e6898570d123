"""Command-line entry point: synthesize, train, evaluate, sweep, benchmark.

`train` with only an input path runs the reference protocol: 75/25
label-stratified split, learning rate 0.1 with no momentum, hidden layer as
wide as the input, 100,000 epochs with accuracy checkpoints on a decade
grid. Exit codes: 0 success, 2 flag/input validation, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import backend as backend_mod
from . import bench as bench_mod
from . import trainer as trainer_mod
from .dataset import (
    NormStats,
    build_dataset,
    normalize_apply,
    normalize_split,
    parse_csv,
    split_by_sex,
    train_test_split,
    write_csv,
)
from .errors import GlycemlpError, ParseError, SchemaError, ValidationError
from .network import NetworkConfig, save_checkpoint
from .synth import synth_dataset

PROTOCOL_EPOCHS = 100_000
PROTOCOL_FRACTION = 0.75
PROTOCOL_LR = 0.1


def _positive_int(flag: str):
    def convert(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be an integer, got {text!r}") from None
        if value < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {value}")
        return value

    return convert


def _positive_float(flag: str):
    def convert(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be a number, got {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"{flag} must be positive, got {value}")
        return value

    return convert


def _fraction(flag: str):
    def convert(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} must be a number, got {text!r}") from None
        if not (0.0 < value < 1.0):
            raise argparse.ArgumentTypeError(f"{flag} must be in (0, 1), got {value}")
        return value

    return convert


def _int_list(flag: str):
    def convert(text: str) -> tuple[int, ...]:
        try:
            values = tuple(int(part) for part in text.split(",") if part.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"{flag} must be comma-separated integers, got {text!r}"
            ) from None
        if not values:
            raise argparse.ArgumentTypeError(f"{flag} must name at least one value")
        return values

    return convert


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="input CSV in the canonical schema")
    p.add_argument("--sex", required=True, choices=["male", "female", "all"],
                   help="subset to train on; the reference protocol trains per sex")
    p.add_argument("--epochs", type=_positive_int("--epochs"), default=PROTOCOL_EPOCHS,
                   help=f"training epochs (protocol default {PROTOCOL_EPOCHS})")
    p.add_argument("--backend", choices=["sequential", "parallel"], default="sequential",
                   help="execution engine (default sequential)")
    p.add_argument("--workers", type=_positive_int("--workers"), default=None,
                   help="parallel worker pool size (default: hardware parallelism)")
    p.add_argument("--hidden-dim", type=_positive_int("--hidden-dim"), default=None,
                   help="hidden layer width (protocol default: one neuron per feature)")
    p.add_argument("--learning-rate", type=_positive_float("--learning-rate"),
                   default=PROTOCOL_LR,
                   help=f"gradient-descent step (protocol default {PROTOCOL_LR}, no momentum)")
    p.add_argument("--seed", type=int, default=0, help="seed for the split and the weights")
    p.add_argument("--split-fraction", type=_fraction("--split-fraction"),
                   default=PROTOCOL_FRACTION,
                   help=f"training share of the data (protocol default {PROTOCOL_FRACTION})")
    p.add_argument("--checkpoints", type=_int_list("--checkpoints"), default=None,
                   help="comma-separated checkpoint epochs (default: decade grid)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glycemlp",
        description=(
            "Train and benchmark a one-hidden-layer backprop classifier that "
            "predicts glycemic control from joint-mobility and anthropometric "
            "markers."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a schema-faithful synthetic CSV")
    p_synth.add_argument("--rows", type=_positive_int("--rows"), default=120)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--signal", choices=["planted-linear", "random"],
                         default="planted-linear")
    p_synth.add_argument("--out", required=True, help="output CSV path")

    p_train = sub.add_parser("train", help="run the full pipeline and write reports")
    _add_train_flags(p_train)
    p_train.add_argument("--out", required=True, help="output directory for artifacts")

    p_eval = sub.add_parser("eval", help="evaluate a trained report's network on a CSV")
    p_eval.add_argument("--report", required=True, help="train report JSON (carries weights and normalization)")
    p_eval.add_argument("--input", required=True, help="CSV to classify")
    p_eval.add_argument("--sex", required=True, choices=["male", "female", "all"])

    p_sweep = sub.add_parser("sweep", help="accuracy-vs-epochs curve (train + curve CSV only)")
    _add_train_flags(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output path for the curve CSV")

    p_bench = sub.add_parser("bench", help="sequential-vs-parallel training-time benchmark")
    p_bench.add_argument("--rows", type=_positive_int("--rows"), default=10_000)
    p_bench.add_argument("--columns", type=_positive_int("--columns"), default=33)
    p_bench.add_argument("--hidden-dim", type=_positive_int("--hidden-dim"), default=512)
    p_bench.add_argument("--epochs-grid", type=_int_list("--epochs-grid"), default=(100,))
    p_bench.add_argument("--repetitions", type=_positive_int("--repetitions"), default=3)
    p_bench.add_argument("--workers", type=_positive_int("--workers"), default=None)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True, help="output directory for bench artifacts")

    return parser


def _load_records(path: str, sex: str):
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"--input file not found: {source}")
    records = parse_csv(source)
    if sex == "all":
        print("note: --sex all trains one combined model; the reference protocol "
              "trains separate per-sex models")
        return records, "all"
    male, female = split_by_sex(records)
    return (male if sex == "male" else female), sex


def _prepare_split(args) -> tuple:
    records, tag = _load_records(args.input, args.sex)
    if len(records) < 2:
        raise GlycemlpError(f"subset {tag!r} has {len(records)} rows; need at least 2")
    data = build_dataset(records, tag)
    pair = train_test_split(data, args.split_fraction, args.seed)
    return normalize_split(pair), data


def _make_spec(args, columns: int) -> trainer_mod.TrainSpec:
    config = NetworkConfig(
        input_dim=columns,
        hidden_dim=args.hidden_dim,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )
    if args.backend == "parallel":
        kind = backend_mod.parallel(args.workers)
    else:
        kind = backend_mod.sequential()
    return trainer_mod.TrainSpec(
        config=config,
        epochs=args.epochs,
        backend=kind,
        checkpoints=args.checkpoints,
    )


def _cmd_synth(args) -> int:
    records = synth_dataset(args.rows, args.seed, args.signal)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(records, out)
    print(f"wrote {len(records)} rows to {out}")
    return 0


def _cmd_train(args) -> int:
    split, _ = _prepare_split(args)
    spec = _make_spec(args, split.train.columns)
    report = trainer_mod.train(spec, split)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    trainer_mod.save_report(report, outdir / "train_report.json")
    trainer_mod.write_curve_csv(report.rows, outdir / "curve.csv")
    save_checkpoint(report.network, outdir / "checkpoint.json")
    if report.diverged:
        print("training diverged; artifacts carry the last finite checkpoint")
        return 1
    last = report.rows[-1]
    print(f"epoch {last.epoch}: train {trainer_mod.format_percent(last.train_accuracy)}, "
          f"test {trainer_mod.format_percent(last.test_accuracy)} "
          f"({report.metadata['backend']}, workers={report.metadata['workers']})")
    print(f"artifacts written to {outdir}")
    return 0


def _cmd_eval(args) -> int:
    report_path = Path(args.report)
    if not report_path.exists():
        raise FileNotFoundError(f"--report file not found: {report_path}")
    doc = trainer_mod.load_report(report_path)
    net = trainer_mod.network_from_report(doc)
    stats_doc = doc["metadata"]["norm_stats"]
    stats = NormStats(
        col_min=np.array(stats_doc["col_min"], dtype=np.float32),
        col_max=np.array(stats_doc["col_max"], dtype=np.float32),
    )
    records, tag = _load_records(args.input, args.sex)
    if not records:
        raise GlycemlpError(f"subset {tag!r} is empty")
    data = normalize_apply(build_dataset(records, tag), stats)
    acc = trainer_mod.evaluate(net, data)
    counts = trainer_mod.confusion(net, data)
    print(f"accuracy {acc!r} ({trainer_mod.format_percent(acc)}) on {data.rows} rows")
    print(f"confusion tp={counts['tp']} tn={counts['tn']} fp={counts['fp']} fn={counts['fn']}")
    return 0


def _cmd_sweep(args) -> int:
    split, _ = _prepare_split(args)
    spec = _make_spec(args, split.train.columns)
    rows = trainer_mod.epoch_sweep(spec, split)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    trainer_mod.write_curve_csv(rows, out)
    for row in rows:
        print(f"epoch {row.epoch}: train {trainer_mod.format_percent(row.train_accuracy)}, "
              f"test {trainer_mod.format_percent(row.test_accuracy)}")
    print(f"curve written to {out}")
    return 0


def _cmd_bench(args) -> int:
    config = NetworkConfig(input_dim=args.columns, hidden_dim=args.hidden_dim, seed=args.seed)
    spec = bench_mod.BenchSpec(
        config=config,
        epochs_grid=args.epochs_grid,
        rows=args.rows,
        columns=args.columns,
        data_seed=args.seed,
        repetitions=args.repetitions,
        backends=(backend_mod.sequential(), backend_mod.parallel(args.workers)),
    )
    report = bench_mod.run_bench(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    bench_mod.save_bench_report(report, outdir / "bench_report.json")
    table = bench_mod.emit_speedup_table(report, outdir / "speedup.csv")
    print(table.rstrip())
    for s in report.speedups:
        print(f"epochs {s.epochs}: measured speedup {s.speedup:.2f}x "
              f"(workers={report.environment['workers']})")
    print(report.gpu_reference["context"])
    print(f"artifacts written to {outdir}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on flag errors
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, SchemaError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GlycemlpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
