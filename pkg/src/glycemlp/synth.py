"""Schema-faithful synthetic participant generator.

The real clinical table is not distributable, so desk-scale runs and tests
use generated records with plausible anthropometrics and joint angles. Two
signal modes:

- ``planted-linear``: hba1c is an affine function of five features (BMI,
  waist/hip ratio, mean index-finger flexion, age, medication) plus bounded
  noise, so the induced labels are learnably separable.
- ``random``: hba1c is drawn independently of every feature, so labels carry
  no signal and a long training run can only memorize.
"""

from __future__ import annotations

import numpy as np

from .schema import FEMALE, JOINT_KEYS, MALE, ParticipantRecord, derive_features, validate_record

# 120 participants split 61/59 male/female; keep that ratio for other sizes.
_MALE_SHARE = 61.0 / 120.0

_SIGNAL_GAIN = 1.4
_NOISE_HALF_WIDTH = 0.15


def _male_count(rows: int) -> int:
    return int(round(rows * _MALE_SHARE))


def synth_dataset(rows: int, seed: int, signal: str = "planted-linear") -> list[ParticipantRecord]:
    """Generate ``rows`` validated records, deterministic per (rows, seed, signal)."""
    if rows < 2:
        raise ValueError(f"rows must be >= 2, got {rows}")
    if signal not in ("planted-linear", "random"):
        raise ValueError(f"signal must be planted-linear or random, got {signal!r}")

    rng = np.random.default_rng(seed)
    n_male = _male_count(rows)
    sexes = [MALE] * n_male + [FEMALE] * (rows - n_male)
    order = rng.permutation(rows)

    records: list[ParticipantRecord] = []
    for i in range(rows):
        sex = sexes[int(order[i])]
        male = sex == MALE
        age = float(np.clip(rng.normal(48.0, 14.0), 20.0, 85.0))
        height = float(np.clip(rng.normal(1.74 if male else 1.61, 0.07), 1.45, 2.02))
        bmi = float(np.clip(rng.normal(27.5, 4.5), 17.0, 45.0))
        weight = bmi * height * height
        waist = float(np.clip(rng.normal(56.0 + 1.55 * bmi + (4.0 if male else 0.0), 5.0), 58.0, 145.0))
        hip = float(np.clip(rng.normal(68.0 + 1.35 * bmi + (0.0 if male else 5.0), 5.0), 72.0, 150.0))
        neck = float(np.clip(rng.normal(39.0 if male else 34.5, 2.5), 28.0, 50.0))
        wrist_r = float(np.clip(rng.normal(17.2 if male else 15.4, 0.9), 13.0, 21.0))
        wrist_l = float(np.clip(wrist_r + rng.normal(0.0, 0.35), 13.0, 21.0))
        ankle = float(np.clip(rng.normal(23.5 if male else 22.0, 1.6), 18.0, 30.0))

        # one stiffness latent drives all 14 angles; hyper-extension allowed
        stiffness = float(rng.normal(0.0, 1.0))
        angles = {
            key: float(np.clip(10.0 + 9.0 * stiffness + rng.normal(0.0, 6.0), -30.0, 110.0))
            for key in JOINT_KEYS
        }
        on_med = bool(rng.random() < 0.35)

        if signal == "planted-linear":
            whr = waist / hip
            mean_x2 = (angles["X2MCP"] + angles["X2PIP"] + angles["X2DIP"]) / 3.0
            score = (
                0.9 * (bmi - 27.5) / 4.5
                + 0.7 * (whr - 0.92) / 0.07
                + 1.1 * (mean_x2 - 10.0) / 11.0
                + 0.5 * (age - 48.0) / 14.0
                + 0.8 * (1.0 if on_med else -1.0)
            )
            noise = float(rng.uniform(-_NOISE_HALF_WIDTH, _NOISE_HALF_WIDTH))
            hba1c = 6.5 + _SIGNAL_GAIN * score + noise
        else:
            hba1c = float(rng.normal(6.55, 1.5))
        hba1c = float(np.clip(hba1c, 4.0, 14.0))

        rec = ParticipantRecord(
            id=f"syn{i:04d}",
            sex=sex,
            age_years=age,
            height_m=height,
            weight_kg=weight,
            waist_cm=waist,
            hip_cm=hip,
            neck_cm=neck,
            wrist_right_cm=wrist_r,
            wrist_left_cm=wrist_l,
            ankle_cm=ankle,
            joint_angles_deg=angles,
            on_med=on_med,
            hba1c_pct=hba1c,
        )
        rec = derive_features(rec)
        validate_record(rec)
        records.append(rec)
    return records
