"""Clinical record schema: raw fields, derived ratios, and HbA1c labeling.

One record is one participant: anthropometrics, 14 finger-joint flexion
angles, medication status, and the HbA1c percentage the label is cut from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ValidationError

MALE = "male"
FEMALE = "female"
SEXES = (MALE, FEMALE)

GOOD = "good"
POOR = "poor"

# Glycemic control cutoff: 6.5% HbA1c (48 mmol/mol). Values at or above the
# threshold are labeled poor so the clinical boundary itself is flagged.
HBA1C_POOR_CUTOFF_PCT = 6.5

# Finger X1..X5 (thumb = X5, which has an IP joint instead of PIP/DIP).
JOINT_KEYS = (
    "X1MCP", "X1PIP", "X1DIP",
    "X2MCP", "X2PIP", "X2DIP",
    "X3MCP", "X3PIP", "X3DIP",
    "X4MCP", "X4PIP", "X4DIP",
    "X5MCP", "X5IP",
)

ANGLE_MIN_DEG = -90.0  # hyper-extension limit
ANGLE_MAX_DEG = 180.0  # flexion contracture limit


@dataclass(frozen=True)
class DerivedFeatures:
    """Ratios and BMI recomputable from the raw anthropometrics."""

    bmi: float
    waist_hip_ratio: float
    wrist_right_waist_ratio: float
    wrist_left_waist_ratio: float
    wrist_right_hip_ratio: float
    wrist_left_hip_ratio: float


@dataclass(frozen=True)
class ParticipantRecord:
    id: str
    sex: str
    age_years: float
    height_m: float
    weight_kg: float
    waist_cm: float
    hip_cm: float
    neck_cm: float
    wrist_right_cm: float
    wrist_left_cm: float
    ankle_cm: float
    joint_angles_deg: dict[str, float]
    on_med: bool
    hba1c_pct: float
    derived: DerivedFeatures | None = None


def validate_record(rec: ParticipantRecord) -> None:
    """Check all domain invariants; raise ValidationError naming the field."""
    if rec.sex not in SEXES:
        raise ValidationError(f"record {rec.id}: sex must be one of {SEXES}, got {rec.sex!r}")
    if rec.age_years < 0:
        raise ValidationError(f"record {rec.id}: age_years must be non-negative")
    for name in ("height_m", "weight_kg", "waist_cm", "hip_cm", "neck_cm",
                 "wrist_right_cm", "wrist_left_cm", "ankle_cm", "hba1c_pct"):
        value = getattr(rec, name)
        if not (value > 0) or not math.isfinite(value):
            raise ValidationError(f"record {rec.id}: {name} must be positive, got {value}")
    missing = [k for k in JOINT_KEYS if k not in rec.joint_angles_deg]
    if missing or len(rec.joint_angles_deg) != len(JOINT_KEYS):
        raise ValidationError(
            f"record {rec.id}: joint_angles_deg must have exactly the 14 canonical "
            f"keys; missing {missing}, got {sorted(rec.joint_angles_deg)}"
        )
    for key in JOINT_KEYS:
        angle = rec.joint_angles_deg[key]
        if not (ANGLE_MIN_DEG <= angle <= ANGLE_MAX_DEG):
            raise ValidationError(
                f"record {rec.id}: angle {key}={angle} outside "
                f"[{ANGLE_MIN_DEG}, {ANGLE_MAX_DEG}] degrees"
            )


def derive_features(rec: ParticipantRecord) -> ParticipantRecord:
    """Return a copy of ``rec`` with the derived ratio features filled in.

    BMI = weight / height^2; the five ratios divide wrist/waist measurements
    by waist or hip girth. Any non-positive denominator is rejected.
    """
    for name in ("height_m", "waist_cm", "hip_cm", "wrist_right_cm", "wrist_left_cm"):
        if not (getattr(rec, name) > 0):
            raise ValidationError(
                f"record {rec.id}: {name} must be positive to derive features, "
                f"got {getattr(rec, name)}"
            )
    derived = DerivedFeatures(
        bmi=rec.weight_kg / (rec.height_m * rec.height_m),
        waist_hip_ratio=rec.waist_cm / rec.hip_cm,
        wrist_right_waist_ratio=rec.wrist_right_cm / rec.waist_cm,
        wrist_left_waist_ratio=rec.wrist_left_cm / rec.waist_cm,
        wrist_right_hip_ratio=rec.wrist_right_cm / rec.hip_cm,
        wrist_left_hip_ratio=rec.wrist_left_cm / rec.hip_cm,
    )
    return replace(rec, derived=derived)


def label_from_hba1c(hba1c_pct: float) -> str:
    """Binarize glycemic control: >= 6.5% is poor, below is good."""
    if not (hba1c_pct > 0):
        raise ValidationError(f"hba1c_pct must be positive, got {hba1c_pct}")
    return POOR if hba1c_pct >= HBA1C_POOR_CUTOFF_PCT else GOOD
