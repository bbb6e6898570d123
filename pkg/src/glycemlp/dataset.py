"""Tabular pipeline: CSV ingestion, feature matrices, splits, normalization.

Feature matrices are flat row-major float32 arrays. The label source column
(hba1c) is never part of the matrix, and sex is a split key rather than a
feature, so per-sex models see 30 predictors.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import ParseError, SchemaError, ShapeError, ValidationError
from .schema import (
    FEMALE,
    JOINT_KEYS,
    MALE,
    POOR,
    ParticipantRecord,
    derive_features,
    label_from_hba1c,
    validate_record,
)

# Canonical CSV header. Raw columns only; derived features are recomputed on
# parse so a round-tripped file stays self-consistent.
CSV_COLUMNS = (
    "id", "sex", "age", "height_m", "weight_kg",
    "waist_cm", "hip_cm", "neck_cm", "wrist_right_cm", "wrist_left_cm", "ankle_cm",
    *JOINT_KEYS,
    "on_med", "hba1c_pct",
)

# Feature matrix column order: raw numerics, angles, medication, then derived.
FEATURE_COLUMNS = (
    "age", "height_m", "weight_kg",
    "waist_cm", "hip_cm", "neck_cm", "wrist_right_cm", "wrist_left_cm", "ankle_cm",
    *JOINT_KEYS,
    "on_med",
    "bmi", "waist_hip_ratio",
    "wrist_right_waist_ratio", "wrist_left_waist_ratio",
    "wrist_right_hip_ratio", "wrist_left_hip_ratio",
)
N_FEATURES = len(FEATURE_COLUMNS)

LABEL_GOOD = 0
LABEL_POOR = 1

SUBSET_TAGS = ("male", "female", "all", "synthetic")

_CLAMP_LO = np.float32(-0.5)
_CLAMP_HI = np.float32(1.5)


@dataclass(frozen=True)
class NormStats:
    """Per-column (min, max) fitted on a training partition."""

    col_min: np.ndarray  # float32, one per column
    col_max: np.ndarray

    def __post_init__(self) -> None:
        if self.col_min.shape != self.col_max.shape or self.col_min.ndim != 1:
            raise ShapeError("col_min and col_max must be 1-D arrays of equal length")

    @property
    def columns(self) -> int:
        return int(self.col_min.shape[0])


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus labels and provenance.

    ``features`` is the flat row-major float32 array of length rows*columns.
    """

    features: np.ndarray
    labels: np.ndarray  # uint8, LABEL_GOOD / LABEL_POOR
    rows: int
    columns: int
    subset_tag: str
    row_ids: tuple[str, ...]
    norm_stats: NormStats | None = None

    def __post_init__(self) -> None:
        if self.subset_tag not in SUBSET_TAGS:
            raise ValidationError(f"subset_tag must be one of {SUBSET_TAGS}, got {self.subset_tag!r}")
        if self.features.dtype != np.float32 or self.features.ndim != 1:
            raise ShapeError("features must be a flat float32 array")
        if self.features.shape[0] != self.rows * self.columns:
            raise ShapeError(
                f"features length {self.features.shape[0]} != rows*columns "
                f"({self.rows}*{self.columns})"
            )
        if self.labels.shape[0] != self.rows:
            raise ShapeError(f"labels length {self.labels.shape[0]} != rows {self.rows}")
        if len(self.row_ids) != self.rows:
            raise ShapeError(f"row_ids length {len(self.row_ids)} != rows {self.rows}")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    def matrix(self) -> np.ndarray:
        """(rows, columns) view of the flat feature array."""
        return self.features.reshape(self.rows, self.columns)


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    fraction: float
    stratified: bool = True


def _open_text(source: str | Path | bytes | IO[bytes]) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def parse_csv(source: str | Path | bytes | IO[bytes]) -> list[ParticipantRecord]:
    """Parse a canonical-schema CSV into validated records, derived fields filled.

    Row order is preserved. Header must carry exactly the canonical column
    names (any order). Missing or non-numeric cells are rejected.
    """
    fh = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty input: no header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
        unexpected = [c for c in header if c not in CSV_COLUMNS]
        if unexpected:
            raise SchemaError(f"unexpected column(s): {', '.join(unexpected)}")
        col = {name: header.index(name) for name in CSV_COLUMNS}

        def number(cells: list[str], name: str, row: int) -> float:
            raw = cells[col[name]].strip()
            if raw == "":
                raise ParseError(f"row {row}: empty cell in column {name!r}")
            try:
                return float(raw)
            except ValueError:
                raise ParseError(f"row {row}: non-numeric value {raw!r} in column {name!r}") from None

        records: list[ParticipantRecord] = []
        for row_no, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise ParseError(f"row {row_no}: expected {len(header)} cells, got {len(cells)}")
            sex_code = cells[col["sex"]].strip()
            if sex_code not in ("M", "F"):
                raise ParseError(f"row {row_no}: sex must be M or F, got {sex_code!r}")
            med_code = cells[col["on_med"]].strip()
            if med_code not in ("0", "1"):
                raise ParseError(f"row {row_no}: on_med must be 0 or 1, got {med_code!r}")
            rec = ParticipantRecord(
                id=cells[col["id"]].strip(),
                sex=MALE if sex_code == "M" else FEMALE,
                age_years=number(cells, "age", row_no),
                height_m=number(cells, "height_m", row_no),
                weight_kg=number(cells, "weight_kg", row_no),
                waist_cm=number(cells, "waist_cm", row_no),
                hip_cm=number(cells, "hip_cm", row_no),
                neck_cm=number(cells, "neck_cm", row_no),
                wrist_right_cm=number(cells, "wrist_right_cm", row_no),
                wrist_left_cm=number(cells, "wrist_left_cm", row_no),
                ankle_cm=number(cells, "ankle_cm", row_no),
                joint_angles_deg={k: number(cells, k, row_no) for k in JOINT_KEYS},
                on_med=med_code == "1",
                hba1c_pct=number(cells, "hba1c_pct", row_no),
            )
            rec = derive_features(rec)
            validate_record(rec)
            records.append(rec)
        return records
    finally:
        fh.close()


def write_csv(records: Iterable[ParticipantRecord], dest: str | Path | IO[str]) -> None:
    """Write records in the canonical CSV format (raw columns only)."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([
                rec.id,
                "M" if rec.sex == MALE else "F",
                repr(rec.age_years), repr(rec.height_m), repr(rec.weight_kg),
                repr(rec.waist_cm), repr(rec.hip_cm), repr(rec.neck_cm),
                repr(rec.wrist_right_cm), repr(rec.wrist_left_cm), repr(rec.ankle_cm),
                *(repr(rec.joint_angles_deg[k]) for k in JOINT_KEYS),
                "1" if rec.on_med else "0",
                repr(rec.hba1c_pct),
            ])
    finally:
        if own:
            fh.close()


def split_by_sex(records: list[ParticipantRecord]) -> tuple[list[ParticipantRecord], list[ParticipantRecord]]:
    """Disjoint (male, female) partition preserving input order."""
    male = [r for r in records if r.sex == MALE]
    female = [r for r in records if r.sex == FEMALE]
    return male, female


def _feature_vector(rec: ParticipantRecord) -> list[float]:
    if rec.derived is None:
        raise ValidationError(f"record {rec.id}: derived features missing; call derive_features first")
    d = rec.derived
    return [
        rec.age_years, rec.height_m, rec.weight_kg,
        rec.waist_cm, rec.hip_cm, rec.neck_cm,
        rec.wrist_right_cm, rec.wrist_left_cm, rec.ankle_cm,
        *(rec.joint_angles_deg[k] for k in JOINT_KEYS),
        1.0 if rec.on_med else 0.0,
        d.bmi, d.waist_hip_ratio,
        d.wrist_right_waist_ratio, d.wrist_left_waist_ratio,
        d.wrist_right_hip_ratio, d.wrist_left_hip_ratio,
    ]


def build_dataset(records: list[ParticipantRecord], subset_tag: str) -> Dataset:
    """Assemble the flat float32 feature matrix and label vector."""
    rows = len(records)
    feats = np.empty((rows, N_FEATURES), dtype=np.float32)
    labels = np.empty(rows, dtype=np.uint8)
    for i, rec in enumerate(records):
        feats[i, :] = _feature_vector(rec)
        labels[i] = LABEL_POOR if label_from_hba1c(rec.hba1c_pct) == POOR else LABEL_GOOD
    return Dataset(
        features=feats.reshape(-1),
        labels=labels,
        rows=rows,
        columns=N_FEATURES,
        subset_tag=subset_tag,
        row_ids=tuple(rec.id for rec in records),
    )


def synthetic_matrix(rows: int, columns: int, seed: int, signal: str = "random") -> Dataset:
    """Direct synthetic feature matrix for benchmark loads and shape tests.

    ``planted-linear`` labels by a random hyperplane over five columns so the
    task is learnable; ``random`` labels are independent of the features.
    """
    if rows < 2:
        raise ValueError(f"rows must be >= 2, got {rows}")
    if columns < 1:
        raise ValueError(f"columns must be >= 1, got {columns}")
    if signal not in ("planted-linear", "random"):
        raise ValueError(f"signal must be planted-linear or random, got {signal!r}")
    rng = np.random.default_rng(seed)
    feats = rng.random((rows, columns), dtype=np.float32)
    if signal == "planted-linear":
        k = min(5, columns)
        cols = rng.choice(columns, size=k, replace=False)
        weights = rng.normal(0.0, 1.0, size=k)
        score = feats[:, cols].astype(np.float64) @ weights
        labels = (score >= np.median(score)).astype(np.uint8)
    else:
        labels = (rng.random(rows) < 0.5).astype(np.uint8)
    return Dataset(
        features=feats.reshape(-1),
        labels=labels,
        rows=rows,
        columns=columns,
        subset_tag="synthetic",
        row_ids=tuple(f"m{i:05d}" for i in range(rows)),
    )


def _take_rows(d: Dataset, idx: np.ndarray) -> Dataset:
    m = d.matrix()[idx, :]
    return Dataset(
        features=np.ascontiguousarray(m, dtype=np.float32).reshape(-1),
        labels=d.labels[idx].copy(),
        rows=int(idx.shape[0]),
        columns=d.columns,
        subset_tag=d.subset_tag,
        row_ids=tuple(d.row_ids[i] for i in idx),
        norm_stats=d.norm_stats,
    )


def train_test_split(d: Dataset, fraction: float, seed: int) -> SplitPair:
    """Deterministic label-stratified split; train gets round(fraction*rows).

    Per-class train quotas come from a largest-remainder apportionment, so
    each partition's class mix stays within one row of the exact proportion.
    A class with fewer than 2 members cannot be stratified; the split falls
    back to a plain shuffle and records that in the pair.
    """
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    if d.rows < 2:
        raise ValueError(f"dataset must have >= 2 rows, got {d.rows}")
    target = round(fraction * d.rows)
    target = min(max(target, 1), d.rows - 1)  # both partitions stay non-empty

    rng = np.random.default_rng(seed)
    classes = [np.flatnonzero(d.labels == c) for c in (LABEL_GOOD, LABEL_POOR)]
    counts = [idx.shape[0] for idx in classes]
    stratified = all(c == 0 or c >= 2 for c in counts) and sum(c > 0 for c in counts) == 2

    if stratified:
        quotas = [fraction * c for c in counts]
        base = [int(np.floor(q)) for q in quotas]
        remaining = target - sum(base)
        order = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - base[i]), i))
        take = list(base)
        for i in order:
            if remaining <= 0:
                break
            if take[i] < counts[i]:
                take[i] += 1
                remaining -= 1
        # spill any leftover seats to classes that still have capacity
        while remaining > 0:
            for i in order:
                if remaining > 0 and take[i] < counts[i]:
                    take[i] += 1
                    remaining -= 1
        train_idx_parts = []
        for idx, n_take in zip(classes, take):
            perm = rng.permutation(idx)
            train_idx_parts.append(perm[:n_take])
        train_idx = np.sort(np.concatenate(train_idx_parts)).astype(np.intp)
    else:
        warnings.warn(
            "a label class has fewer than 2 members; falling back to an "
            "unstratified split",
            stacklevel=2,
        )
        perm = rng.permutation(d.rows)
        train_idx = np.sort(perm[:target]).astype(np.intp)

    mask = np.zeros(d.rows, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask).astype(np.intp)
    return SplitPair(
        train=_take_rows(d, train_idx),
        test=_take_rows(d, test_idx),
        seed=seed,
        fraction=fraction,
        stratified=stratified,
    )


def normalize_fit(train: Dataset) -> NormStats:
    """Fit per-column min/max on the training partition only."""
    m = train.matrix()
    return NormStats(col_min=m.min(axis=0).copy(), col_max=m.max(axis=0).copy())


def normalize_apply(d: Dataset, stats: NormStats) -> Dataset:
    """Min-max scale with train-fitted stats; out-of-range values clamp to [-0.5, 1.5].

    Constant columns map to 0.0. Training values land in [0, 1] exactly; the
    clamp only bites on test rows outside the fitted range, keeping the
    sigmoid inputs bounded.
    """
    if stats.columns != d.columns:
        raise ShapeError(f"stats have {stats.columns} columns, dataset has {d.columns}")
    m = d.matrix()
    span = stats.col_max - stats.col_min
    out = np.zeros_like(m)
    nonconst = span != 0
    out[:, nonconst] = (m[:, nonconst] - stats.col_min[nonconst]) / span[nonconst]
    np.clip(out, _CLAMP_LO, _CLAMP_HI, out=out)
    return Dataset(
        features=np.ascontiguousarray(out, dtype=np.float32).reshape(-1),
        labels=d.labels.copy(),
        rows=d.rows,
        columns=d.columns,
        subset_tag=d.subset_tag,
        row_ids=d.row_ids,
        norm_stats=stats,
    )


def normalize_split(pair: SplitPair) -> SplitPair:
    """Fit stats on the train partition and apply them to both sides."""
    stats = normalize_fit(pair.train)
    return SplitPair(
        train=normalize_apply(pair.train, stats),
        test=normalize_apply(pair.test, stats),
        seed=pair.seed,
        fraction=pair.fraction,
        stratified=pair.stratified,
    )
