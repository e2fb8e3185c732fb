"""Epoch-level inter-burst summary features.

Reduces one epoch's inter-burst intervals to the pair of numbers the
grader consumes: the inter-burst percentage and the spread between the
longest and shortest inter-burst interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from neoburst.signal_model import BinaryMask, IntervalList, mask_to_intervals


@dataclass(frozen=True)
class IbiFeatureVector:
    """Summary features of one subject epoch."""

    subject_id: str
    ibi_percent: float
    max_ibi_s: float
    true_grade: int | None = None

    def __post_init__(self):
        # builtin scalars so repr-based CSV stays clean
        object.__setattr__(self, "ibi_percent", float(self.ibi_percent))
        object.__setattr__(self, "max_ibi_s", float(self.max_ibi_s))
        if self.true_grade is not None:
            object.__setattr__(self, "true_grade", int(self.true_grade))
        if not 0.0 <= self.ibi_percent <= 100.0:
            raise ValueError(f"ibi_percent out of [0, 100]: {self.ibi_percent}")
        if self.max_ibi_s < 0.0:
            raise ValueError(f"max_ibi_s must be non-negative: {self.max_ibi_s}")
        if self.true_grade is not None and self.true_grade not in (1, 2, 3, 4):
            raise ValueError(f"true_grade must be 1..4 or None: {self.true_grade}")


def ibi_percentage(il: IntervalList) -> float:
    """Percent of the epoch spent in inter-burst intervals:
    100 * sum(duration_i) / L."""
    return 100.0 * float(np.sum(il.durations_s)) / il.epoch_length_s


def max_ibi(il: IntervalList, plain_max: bool = False) -> float:
    """Spread of inter-burst durations, max_i - min_i; 0 when fewer than
    two intervals exist.

    plain_max switches to the literal longest interval instead of the
    spread (same degenerate values).
    """
    if il.n_intervals == 0:
        return 0.0
    durations = il.durations_s
    if plain_max:
        return float(np.max(durations))
    return float(np.max(durations) - np.min(durations))


def log_feature(x_s: float) -> float:
    """Natural log of a duration in seconds, for plot-axis emission."""
    if x_s <= 0:
        raise ValueError(f"log_feature needs a positive duration, got {x_s}")
    return math.log(x_s)


def summarize_mask(mask: BinaryMask, subject_id: str = "",
                   true_grade: int | None = None,
                   plain_max: bool = False) -> IbiFeatureVector:
    """Features of one fused summary mask."""
    il = mask_to_intervals(mask)
    return IbiFeatureVector(subject_id, ibi_percentage(il), max_ibi(il, plain_max),
                            true_grade)


def feature_table_to_csv(rows: list[IbiFeatureVector]) -> str:
    """Serialize feature vectors as the interchange table."""
    lines = ["subject_id,ibi_percent,max_ibi_s,true_grade"]
    for r in rows:
        grade = "" if r.true_grade is None else str(r.true_grade)
        lines.append(f"{r.subject_id},{r.ibi_percent!r},{r.max_ibi_s!r},{grade}")
    return "\n".join(lines) + "\n"


def feature_table_from_csv(text: str) -> list[IbiFeatureVector]:
    """Parse a feature table written by feature_table_to_csv."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "subject_id,ibi_percent,max_ibi_s,true_grade":
        raise ValueError(
            "feature CSV must start with header "
            "'subject_id,ibi_percent,max_ibi_s,true_grade'"
        )
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ValueError(f"row {i}: expected 4 fields, got {len(parts)}")
        try:
            grade = int(parts[3]) if parts[3] else None
            rows.append(IbiFeatureVector(parts[0], float(parts[1]), float(parts[2]), grade))
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    return rows
