"""Burst suppression analysis for multi-channel neonatal EEG.

Detects inter-burst intervals with a multi-feature linear support vector
machine, summarizes each recording epoch by its inter-burst percentage
and maximum inter-burst interval, and grades severity on a 1..4 scale
with a small neural network (or a threshold rule).
"""

from neoburst.signal_model import (
    BURST,
    DEFAULT_MONTAGE_PAIRS,
    ELECTRODE_LABELS,
    INTERBURST,
    BinaryMask,
    EegRecording,
    IntervalList,
    MontageSpec,
    derive_montage,
    intervals_to_mask,
    majority_vote,
    mask_to_intervals,
)

__version__ = "0.1.0"

__all__ = [
    "BURST",
    "INTERBURST",
    "ELECTRODE_LABELS",
    "DEFAULT_MONTAGE_PAIRS",
    "BinaryMask",
    "EegRecording",
    "IntervalList",
    "MontageSpec",
    "derive_montage",
    "intervals_to_mask",
    "majority_vote",
    "mask_to_intervals",
    "__version__",
]
