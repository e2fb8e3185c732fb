"""Core EEG data types and mask algebra.

Holds the multi-channel recording container, bipolar montage derivation,
the per-sample burst/inter-burst mask, interval-list conversions and the
majority-vote fusion of per-channel masks into one summary mask.

All values are treated as immutable after construction; every operation
returns a new object, so instances are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Mask label values.
BURST = 0
INTERBURST = 1

#: Referential electrodes of the standard 9-electrode NICU setup.
ELECTRODE_LABELS = ("T4", "T3", "O1", "O2", "F4", "F3", "C4", "C3", "Cz")

#: Default 8-pair bipolar derivation used throughout the pipeline.
DEFAULT_MONTAGE_PAIRS = (
    ("F4", "C4"),
    ("C4", "O2"),
    ("F3", "C3"),
    ("C3", "O1"),
    ("T4", "C4"),
    ("C4", "Cz"),
    ("Cz", "C3"),
    ("C3", "T3"),
)


@dataclass(frozen=True)
class EegRecording:
    """Multi-channel sampled voltage signal in microvolts.

    samples has shape (n_channels, n_samples); labels gives one unique
    name per row.
    """

    sample_rate_hz: float
    labels: tuple[str, ...]
    samples: np.ndarray
    start_offset_s: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"samples must be 2-D (channels x samples), got ndim={arr.ndim}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.start_offset_s < 0:
            raise ValueError(f"start_offset_s must be non-negative, got {self.start_offset_s}")
        if len(self.labels) != arr.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {arr.shape[0]} channel rows"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("channel labels must be unique")

    @classmethod
    def from_channels(cls, sample_rate_hz, channels, start_offset_s=0.0):
        """Build from an ordered iterable of (label, samples) pairs.

        Rejects channels of unequal length rather than truncating.
        """
        labels = []
        rows = []
        for label, samples in channels:
            labels.append(str(label))
            rows.append(np.asarray(samples, dtype=np.float64))
        if not rows:
            raise ValueError("recording needs at least one channel")
        lengths = {r.shape[0] for r in rows}
        if len(lengths) != 1:
            raise ValueError(f"channels have unequal lengths: {sorted(lengths)}")
        return cls(sample_rate_hz, tuple(labels), np.vstack(rows), start_offset_s)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def channel(self, label: str) -> np.ndarray:
        """Return the sample row for one channel label."""
        try:
            idx = self.labels.index(label)
        except ValueError:
            raise ValueError(f"recording has no channel '{label}'") from None
        return self.samples[idx]


@dataclass(frozen=True)
class MontageSpec:
    """Ordered anode/cathode label pairs for a bipolar derivation."""

    pairs: tuple[tuple[str, str], ...] = DEFAULT_MONTAGE_PAIRS

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(a), str(c)) for a, c in self.pairs))
        if not self.pairs:
            raise ValueError("montage needs at least one pair")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"{a}-{c}" for a, c in self.pairs)


@dataclass(frozen=True)
class BinaryMask:
    """Per-sample burst (0) / inter-burst (1) annotation for one channel."""

    rate_hz: float
    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 1:
            raise ValueError("mask labels must be 1-D")
        if arr.size and not np.all((arr == BURST) | (arr == INTERBURST)):
            bad = arr[(arr != BURST) & (arr != INTERBURST)][0]
            raise ValueError(f"mask labels must be 0/1, found {bad!r}")
        object.__setattr__(self, "labels", arr.astype(np.uint8))
        if self.rate_hz <= 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")

    @property
    def n_samples(self) -> int:
        return self.labels.size

    @property
    def duration_s(self) -> float:
        return self.labels.size / self.rate_hz

    def interburst_fraction(self) -> float:
        return float(np.count_nonzero(self.labels)) / self.labels.size


@dataclass(frozen=True)
class IntervalList:
    """Inter-burst intervals of one epoch as (start_s, duration_s) rows.

    intervals is an (n, 2) array, sorted by start, non-overlapping
    (touching ends allowed), every interval inside [0, epoch_length_s].
    """

    epoch_length_s: float
    intervals: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.intervals, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("intervals must be an (n, 2) array of (start_s, duration_s)")
        object.__setattr__(self, "intervals", arr)
        if self.epoch_length_s <= 0:
            raise ValueError(f"epoch_length_s must be positive, got {self.epoch_length_s}")
        starts, durs = arr[:, 0], arr[:, 1]
        eps = 1e-9 * max(1.0, self.epoch_length_s)
        if np.any(durs <= 0):
            raise ValueError("interval durations must be positive")
        if np.any(starts < -eps) or np.any(starts + durs > self.epoch_length_s + eps):
            raise ValueError("intervals must lie within [0, epoch_length_s]")
        if np.any(np.diff(starts) < 0):
            raise ValueError("intervals must be sorted by start time")
        if np.any(starts[1:] - (starts[:-1] + durs[:-1]) < -eps):
            raise ValueError("intervals must not overlap")

    @property
    def n_intervals(self) -> int:
        return self.intervals.shape[0]

    @property
    def starts_s(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def durations_s(self) -> np.ndarray:
        return self.intervals[:, 1]


def derive_montage(rec: EegRecording, spec: MontageSpec | None = None) -> EegRecording:
    """Derive a bipolar recording: channel i = anode minus cathode of pair i.

    Raises ValueError naming the missing electrode if a pair references a
    label absent from the recording.
    """
    spec = spec if spec is not None else MontageSpec()
    index = {label: i for i, label in enumerate(rec.labels)}
    rows = np.empty((len(spec.pairs), rec.n_samples), dtype=np.float64)
    for i, (anode, cathode) in enumerate(spec.pairs):
        for electrode in (anode, cathode):
            if electrode not in index:
                raise ValueError(
                    f"montage references unknown electrode '{electrode}'; "
                    f"recording has {list(rec.labels)}"
                )
        rows[i] = rec.samples[index[anode]] - rec.samples[index[cathode]]
    return EegRecording(rec.sample_rate_hz, spec.labels, rows, rec.start_offset_s)


def _runs(labels: np.ndarray) -> list[tuple[int, int, int]]:
    """Maximal constant runs of a 1-D label array as (value, start, stop)."""
    if labels.size == 0:
        return []
    change = np.flatnonzero(np.diff(labels)) + 1
    bounds = np.concatenate(([0], change, [labels.size]))
    return [
        (int(labels[bounds[i]]), int(bounds[i]), int(bounds[i + 1]))
        for i in range(bounds.size - 1)
    ]


def mask_to_intervals(mask: BinaryMask) -> IntervalList:
    """Extract one interval per maximal INTERBURST run of a mask."""
    if mask.n_samples == 0:
        raise ValueError("cannot extract intervals from an empty mask")
    rate = mask.rate_hz
    rows = [
        (start / rate, (stop - start) / rate)
        for value, start, stop in _runs(mask.labels)
        if value == INTERBURST
    ]
    return IntervalList(mask.n_samples / rate, np.array(rows, dtype=np.float64).reshape(-1, 2))


def intervals_to_mask(il: IntervalList, rate_hz: float) -> BinaryMask:
    """Rasterize an interval list to a mask; exact inverse of
    mask_to_intervals when boundaries are sample-aligned."""
    if rate_hz <= 0:
        raise ValueError(f"rate_hz must be positive, got {rate_hz}")
    n = int(round(il.epoch_length_s * rate_hz))
    labels = np.zeros(n, dtype=np.uint8)
    for start_s, dur_s in il.intervals:
        i0 = int(round(start_s * rate_hz))
        i1 = int(round((start_s + dur_s) * rate_hz))
        labels[max(i0, 0) : min(i1, n)] = INTERBURST
    return BinaryMask(rate_hz, labels)


def majority_vote(masks: list[BinaryMask]) -> BinaryMask:
    """Fuse per-channel masks: INTERBURST where a strict majority agrees.

    Ties (possible for even channel counts) resolve to BURST.
    """
    if not masks:
        raise ValueError("majority_vote needs at least one mask")
    rate = masks[0].rate_hz
    n = masks[0].n_samples
    for k, m in enumerate(masks):
        if m.rate_hz != rate:
            raise ValueError(f"mask {k} rate {m.rate_hz} != {rate}")
        if m.n_samples != n:
            raise ValueError(f"mask {k} length {m.n_samples} != {n}")
    votes = np.sum([m.labels for m in masks], axis=0)
    return BinaryMask(rate, (votes * 2 > len(masks)).astype(np.uint8))


def mask_to_csv_text(mask: BinaryMask, start_offset_s: float = 0.0) -> str:
    """Serialize a mask as `time_s,mask` CSV rows (LF line endings)."""
    times = start_offset_s + np.arange(mask.n_samples) / mask.rate_hz
    lines = ["time_s,mask"]
    lines.extend(f"{float(t)!r},{v:d}" for t, v in zip(times, mask.labels))
    return "\n".join(lines) + "\n"


def mask_from_csv_text(text: str) -> BinaryMask:
    """Parse a `time_s,mask` CSV produced by mask_to_csv_text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "time_s,mask":
        raise ValueError("mask CSV must start with header 'time_s,mask'")
    if len(lines) < 3:
        raise ValueError("mask CSV needs at least two samples to infer the rate")
    times = np.empty(len(lines) - 1)
    values = np.empty(len(lines) - 1, dtype=np.int64)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {i}: expected 2 fields, got {len(parts)}")
        try:
            times[i - 2] = float(parts[0])
            values[i - 2] = int(parts[1])
        except ValueError:
            raise ValueError(f"line {i}: non-numeric field in {line!r}") from None
    dt = times[1] - times[0]
    if dt <= 0:
        raise ValueError("mask CSV timestamps must be strictly increasing")
    expected = times[0] + np.arange(times.size) * dt
    if np.max(np.abs(times - expected)) > 1e-6:
        raise ValueError("mask CSV timestamps are not uniform within 1e-6 s")
    return BinaryMask(1.0 / dt, values)
