"""Synthetic burst-suppression EEG with ground-truth masks.

Subjects are built as alternating burst / inter-burst segments whose
durations, amplitudes and overall inter-burst percentage are drawn from
per-grade profiles.  Segment boundaries are shared by all nine
electrodes (the graded injury is global) while the noise within each
channel is independent.  Boundaries snap to the 64 Hz mask grid, so the
emitted truth masks reproduce the planned durations exactly.

Burst content is 1/f-weighted noise band-limited to 0.5-12 Hz, scaled
per segment to an exact peak-to-peak amplitude; inter-burst content is a
white-plus-1/f mixture scaled to an exact RMS.  Everything is a pure
function of (grade, duration, fs, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from neoburst.edf import write_edf, write_recording_csv
from neoburst.signal_model import (
    ELECTRODE_LABELS,
    BinaryMask,
    EegRecording,
    MontageSpec,
    mask_to_csv_text,
)

#: Grid the truth masks live on; also the detector's processing rate.
MASK_RATE_HZ = 64.0

#: Peak-to-peak amplitude of the flat (inactive) grade-4 variant, in µV.
FLAT_P2P_UV = 8.0


@dataclass(frozen=True)
class GradeProfile:
    """Generation parameters of one severity grade."""

    grade: int
    ibi_duration_range_s: tuple[float, float]
    burst_duration_range_s: tuple[float, float]
    target_ibi_percent_range: tuple[float, float]
    burst_amplitude_uv: tuple[float, float]
    interburst_amplitude_uv: tuple[float, float] = (2.0, 6.0)
    flat_background: bool = False

    def __post_init__(self):
        if self.grade not in (1, 2, 3, 4):
            raise ValueError(f"grade must be 1..4, got {self.grade}")
        for name in ("ibi_duration_range_s", "burst_duration_range_s",
                     "target_ibi_percent_range", "burst_amplitude_uv",
                     "interburst_amplitude_uv"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must be an ordered non-negative range")
        if self.burst_amplitude_uv[0] <= 0 or self.interburst_amplitude_uv[0] <= 0:
            raise ValueError("amplitude ranges must be positive")
        if self.interburst_amplitude_uv[1] >= self.burst_amplitude_uv[0]:
            raise ValueError("inter-burst amplitude must stay below burst amplitude")


def default_profiles() -> dict[int, GradeProfile]:
    """Per-grade generation profiles.

    Duration ranges respect the clinical thresholds (grade 2 inter-burst
    intervals below 10 s, grade 3 within 10-60 s, grade 4 above 60 s)
    with deliberate margins; the exact sub-ranges, burst durations and
    amplitudes are tuning values, not clinical claims.
    """
    return {
        1: GradeProfile(1, (0.5, 3.0), (30.0, 60.0), (0.0, 5.0), (30.0, 50.0)),
        2: GradeProfile(2, (2.0, 8.0), (5.0, 15.0), (20.0, 50.0), (30.0, 100.0)),
        3: GradeProfile(3, (15.0, 50.0), (10.0, 30.0), (40.0, 80.0), (30.0, 100.0)),
        4: GradeProfile(4, (70.0, 160.0), (3.0, 8.0), (90.0, 100.0), (30.0, 100.0)),
    }


@dataclass(frozen=True)
class SyntheticSubject:
    """One generated subject with its ground truth."""

    subject_id: str
    recording: EegRecording
    truth_masks: tuple[BinaryMask, ...]
    true_grade: int
    seed: int
    flat: bool = False

    def __post_init__(self):
        for m in self.truth_masks:
            if abs(m.duration_s - self.recording.duration_s) > 1e-9:
                raise ValueError("truth mask duration differs from recording")

    @property
    def truth_mask(self) -> BinaryMask:
        """Shared-boundary truth (identical across bipolar channels)."""
        return self.truth_masks[0]


def _segment_plan(rng: np.random.Generator, profile: GradeProfile,
                  duration_s: float) -> list[tuple[bool, int]]:
    """Alternating (is_interburst, n_mask_samples) segments starting with
    a burst.  A tail that cannot hold a legal inter-burst interval is
    filled with burst, so every emitted interval respects the profile's
    duration range."""
    grid = MASK_RATE_HZ
    total = int(round(duration_s * grid))
    min_tail = int(grid)  # keep every segment at least a second from the end
    segs: list[tuple[bool, int]] = []
    acc = 0
    next_is_ibi = False
    while acc < total:
        lo, hi = (profile.ibi_duration_range_s if next_is_ibi
                  else profile.burst_duration_range_s)
        dur = max(int(round(rng.uniform(lo, hi) * grid)), 1)
        remaining = total - acc
        if dur >= remaining:
            # truncate into the end; a truncated interval must still be a
            # legal interval, otherwise burst-fill
            if next_is_ibi and remaining < math.ceil(lo * grid):
                segs.append((False, remaining))
            else:
                segs.append((next_is_ibi, remaining))
            acc = total
        elif remaining - dur < min_tail:
            # the leftover sliver is too short for any segment type
            segs.append((False, remaining))
            acc = total
        else:
            segs.append((next_is_ibi, dur))
            acc += dur
        next_is_ibi = not next_is_ibi
    return segs


def _plan_ibi_percent(segs: list[tuple[bool, int]]) -> float:
    total = sum(n for _, n in segs)
    ibi = sum(n for is_ibi, n in segs if is_ibi)
    return 100.0 * ibi / total


def _shaped_noise(rng: np.random.Generator, n: int, fs: float,
                  f_lo: float, f_hi: float, exponent: float = 1.0) -> np.ndarray:
    """Band-limited noise with a 1/f^exponent amplitude envelope."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    weight = np.zeros_like(freqs)
    band = (freqs >= f_lo) & (freqs <= f_hi)
    weight[band] = 1.0 / np.maximum(freqs[band], f_lo) ** exponent
    return np.fft.irfft(spec * weight, n)


def _burst_segment(rng, n, fs, p2p_uv):
    x = _shaped_noise(rng, n, fs, 0.5, 12.0)
    span = np.ptp(x)
    while span == 0:  # degenerate draw; cannot persist for n >= 2
        x = rng.standard_normal(n)
        span = np.ptp(x)
    return x * (p2p_uv / span)


def _interburst_segment(rng, n, fs, rms_uv):
    x = rng.standard_normal(n) + _shaped_noise(rng, n, fs, 0.5, 30.0)
    rms = np.sqrt(np.mean(x**2))
    while rms == 0:
        x = rng.standard_normal(n)
        rms = np.sqrt(np.mean(x**2))
    return x * (rms_uv / rms)


def _flat_segment(rng, n, fs, p2p_uv):
    return _burst_segment(rng, n, fs, p2p_uv)


def generate_subject(grade: int, duration_s: float = 3600.0, fs: float = 64.0,
                     seed: int = 0, flat: bool = False,
                     subject_id: str | None = None,
                     profiles: dict[int, GradeProfile] | None = None,
                     max_retries: int = 100) -> SyntheticSubject:
    """Generate one subject's 9-channel recording and truth masks."""
    profiles = profiles or default_profiles()
    if grade not in profiles:
        raise ValueError(f"no profile for grade {grade}")
    profile = profiles[grade]
    if flat and grade != 4:
        raise ValueError("flat background is a grade-4 variant only")
    if fs < MASK_RATE_HZ or abs(fs / MASK_RATE_HZ - round(fs / MASK_RATE_HZ)) > 1e-9:
        raise ValueError(f"fs must be a positive multiple of {MASK_RATE_HZ} Hz, got {fs}")
    min_dur = min(600.0, 10.0 * profile.ibi_duration_range_s[1])
    if duration_s < min_dur:
        raise ValueError(f"duration_s must be at least {min_dur} s for grade {grade}")

    rng = np.random.default_rng(seed)

    if flat:
        total = int(round(duration_s * MASK_RATE_HZ))
        segs = [(True, total)]
    else:
        lo, hi = profile.target_ibi_percent_range
        for _ in range(max_retries):
            segs = _segment_plan(rng, profile, duration_s)
            if lo <= _plan_ibi_percent(segs) <= hi:
                break
        else:
            raise RuntimeError(
                f"grade {grade}: no segment plan hit IBI% target ({lo}, {hi}) "
                f"in {max_retries} attempts"
            )

    upsample = int(round(fs / MASK_RATE_HZ))
    n_channels = len(ELECTRODE_LABELS)
    n_total = sum(n for _, n in segs) * upsample
    samples = np.empty((n_channels, n_total))
    mask = np.empty(sum(n for _, n in segs), dtype=np.uint8)

    pos = 0  # mask-grid sample position
    for is_ibi, n_mask in segs:
        n_sig = n_mask * upsample
        at = pos * upsample
        if flat:
            for ch in range(n_channels):
                samples[ch, at : at + n_sig] = _flat_segment(rng, n_sig, fs, FLAT_P2P_UV)
        elif is_ibi:
            rms = rng.uniform(*profile.interburst_amplitude_uv)
            for ch in range(n_channels):
                samples[ch, at : at + n_sig] = _interburst_segment(rng, n_sig, fs, rms)
        else:
            amp = rng.uniform(*profile.burst_amplitude_uv)
            for ch in range(n_channels):
                samples[ch, at : at + n_sig] = _burst_segment(rng, n_sig, fs, amp)
        mask[pos : pos + n_mask] = 1 if is_ibi else 0
        pos += n_mask

    recording = EegRecording(fs, ELECTRODE_LABELS, samples)
    truth = BinaryMask(MASK_RATE_HZ, mask)
    montage_labels = MontageSpec().labels
    sid = subject_id if subject_id is not None else f"g{grade}-seed{seed}"
    return SyntheticSubject(sid, recording, tuple(truth for _ in montage_labels),
                            grade, seed, flat)


def _corpus_spec(n, grade_counts):
    if len(grade_counts) != 4:
        raise ValueError("grade_counts needs one entry per grade")
    if sum(grade_counts) != n:
        raise ValueError(f"grade_counts {tuple(grade_counts)} sum to "
                         f"{sum(grade_counts)}, not n={n}")
    plan = []
    for grade, count in zip((1, 2, 3, 4), grade_counts):
        for local in range(count):
            # every sixth grade-4 subject is the flat variant
            plan.append((grade, grade == 4 and local % 6 == 5))
    return plan


def iter_corpus(n: int = 54, grade_counts=(22, 14, 12, 6), epoch_s: float = 3600.0,
                fs: float = 64.0, seed: int = 0):
    """Yield corpus subjects one at a time (subject seed = seed + index)."""
    plan = _corpus_spec(n, grade_counts)
    for index, (grade, flat) in enumerate(plan):
        yield generate_subject(grade, epoch_s, fs, seed + index, flat=flat,
                               subject_id=f"s{index + 1:02d}")


def generate_corpus(n: int = 54, grade_counts=(22, 14, 12, 6), epoch_s: float = 3600.0,
                    fs: float = 64.0, seed: int = 0) -> list[SyntheticSubject]:
    """Whole corpus as a list; for hour-long default epochs prefer
    iter_corpus, which avoids holding ~1 GB of samples at once."""
    return list(iter_corpus(n, grade_counts, epoch_s, fs, seed))


def export_corpus(out_dir, subjects, fmt: str = "csv") -> Path:
    """Write recordings, truth masks and the manifest; returns the
    manifest path.  subjects may be any iterable (including iter_corpus)
    and is consumed lazily."""
    if fmt not in ("csv", "edf"):
        raise ValueError(f"fmt must be 'csv' or 'edf', got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_lines = ["subject_id,grade,seed,file"]
    for subject in subjects:
        name = f"{subject.subject_id}.{fmt}"
        if fmt == "csv":
            (out / name).write_text(write_recording_csv(subject.recording),
                                    encoding="utf-8")
        else:
            write_edf(out / name, subject.recording)
        for label, m in zip(MontageSpec().labels, subject.truth_masks):
            mask_path = out / f"{subject.subject_id}_truth_{label}.csv"
            mask_path.write_text(mask_to_csv_text(m), encoding="utf-8")
        manifest_lines.append(
            f"{subject.subject_id},{subject.true_grade},{subject.seed},{name}"
        )
    manifest = out / "manifest.csv"
    manifest.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path) -> list[dict]:
    """Rows of a corpus manifest as dicts."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "subject_id,grade,seed,file":
        raise ValueError("manifest must start with header 'subject_id,grade,seed,file'")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"manifest row {i}: expected 4 fields")
        rows.append({"subject_id": parts[0], "grade": int(parts[1]),
                     "seed": int(parts[2]), "file": parts[3]})
    return rows
