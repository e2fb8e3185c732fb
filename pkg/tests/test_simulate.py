"""Synthetic corpus generation: plans, amplitudes, truth masks."""

import numpy as np
import pytest

from neoburst.edf import read_edf, read_recording_csv
from neoburst.features import ibi_percentage
from neoburst.signal_model import mask_from_csv_text, mask_to_intervals
from neoburst.simulate import (
    GradeProfile,
    _corpus_spec,
    default_profiles,
    export_corpus,
    generate_corpus,
    generate_subject,
    iter_corpus,
    read_manifest,
)


class TestProfiles:
    def test_grade2_upper_duration_bound(self):
        assert default_profiles()[2].ibi_duration_range_s[1] <= 10.0

    def test_grade3_duration_window(self):
        lo, hi = default_profiles()[3].ibi_duration_range_s
        assert lo >= 10.0 and hi <= 60.0

    def test_grade4_lower_duration_bound(self):
        assert default_profiles()[4].ibi_duration_range_s[0] >= 60.0

    def test_amplitude_separation_enforced(self):
        with pytest.raises(ValueError, match="below burst"):
            GradeProfile(1, (0.5, 3.0), (30.0, 60.0), (0.0, 5.0),
                         burst_amplitude_uv=(5.0, 10.0),
                         interburst_amplitude_uv=(2.0, 6.0))

    def test_unordered_range_rejected(self):
        with pytest.raises(ValueError, match="ordered"):
            GradeProfile(1, (3.0, 0.5), (30.0, 60.0), (0.0, 5.0), (30.0, 50.0))


class TestGenerateSubject:
    def test_deterministic(self):
        a = generate_subject(2, 600.0, 64.0, seed=7)
        b = generate_subject(2, 600.0, 64.0, seed=7)
        assert np.array_equal(a.recording.samples, b.recording.samples)
        assert np.array_equal(a.truth_mask.labels, b.truth_mask.labels)

    def test_different_seeds_differ(self):
        a = generate_subject(2, 600.0, 64.0, seed=7)
        b = generate_subject(2, 600.0, 64.0, seed=8)
        assert not np.array_equal(a.recording.samples, b.recording.samples)

    def test_grade1_low_ibi_percent(self):
        for seed in (0, 1, 2):
            s = generate_subject(1, 600.0, 64.0, seed=seed)
            assert ibi_percentage(mask_to_intervals(s.truth_mask)) <= 5.0

    def test_grade2_all_ibis_within_bound(self):
        for seed in (0, 5):
            s = generate_subject(2, 600.0, 64.0, seed=seed)
            il = mask_to_intervals(s.truth_mask)
            assert il.n_intervals > 0
            assert np.all(il.durations_s <= 10.0)

    def test_grade3_ibis_in_window(self):
        s = generate_subject(3, 900.0, 64.0, seed=3)
        il = mask_to_intervals(s.truth_mask)
        assert np.all((il.durations_s >= 10.0) & (il.durations_s <= 60.0))

    def test_grade4_contains_long_ibi(self):
        for seed in (0, 11):
            s = generate_subject(4, 600.0, 64.0, seed=seed)
            il = mask_to_intervals(s.truth_mask)
            assert np.max(il.durations_s) >= 60.0

    def test_realized_percent_in_target(self):
        profiles = default_profiles()
        for grade in (1, 2, 3, 4):
            lo, hi = profiles[grade].target_ibi_percent_range
            s = generate_subject(grade, 600.0, 64.0, seed=grade)
            pct = ibi_percentage(mask_to_intervals(s.truth_mask))
            assert lo <= pct <= hi

    def test_segment_amplitudes(self):
        s = generate_subject(2, 600.0, 64.0, seed=9)
        labels = s.truth_mask.labels
        edges = np.flatnonzero(np.diff(labels)) + 1
        bounds = np.concatenate(([0], edges, [labels.size]))
        for k in range(bounds.size - 1):
            seg = slice(bounds[k], bounds[k + 1])
            for ch in range(9):
                chunk = s.recording.samples[ch, seg]
                if labels[bounds[k]] == 1:
                    assert np.sqrt(np.mean(chunk**2)) < 10.0
                else:
                    assert np.ptp(chunk) > 25.0

    def test_flat_variant(self):
        s = generate_subject(4, 600.0, 64.0, seed=1, flat=True)
        assert s.flat
        assert np.all(s.truth_mask.labels == 1)
        assert np.max(np.ptp(s.recording.samples, axis=1)) <= 10.0

    def test_flat_only_grade4(self):
        with pytest.raises(ValueError, match="grade-4"):
            generate_subject(2, 600.0, 64.0, seed=0, flat=True)

    def test_higher_rate_generation(self):
        s = generate_subject(2, 600.0, 128.0, seed=2)
        assert s.recording.sample_rate_hz == 128.0
        assert s.recording.n_samples == 600 * 128
        assert s.truth_mask.n_samples == 600 * 64

    def test_non_multiple_rate_rejected(self):
        with pytest.raises(ValueError, match="multiple"):
            generate_subject(2, 600.0, 100.0, seed=0)

    def test_too_short_epoch_rejected(self):
        with pytest.raises(ValueError, match="duration_s"):
            generate_subject(1, 20.0, 64.0, seed=0)

    def test_masks_per_bipolar_channel(self):
        s = generate_subject(1, 600.0, 64.0, seed=0)
        assert len(s.truth_masks) == 8
        for m in s.truth_masks:
            assert np.array_equal(m.labels, s.truth_mask.labels)


class TestCorpus:
    def test_default_plan_counts_and_flats(self):
        plan = _corpus_spec(54, (22, 14, 12, 6))
        grades = [g for g, _ in plan]
        assert [grades.count(g) for g in (1, 2, 3, 4)] == [22, 14, 12, 6]
        flats = [(g, f) for g, f in plan if f]
        assert flats == [(4, True)]  # exactly one flat grade-4 subject

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="sum"):
            list(iter_corpus(5, (3, 1, 0, 0), 600.0, 64.0, 0))

    def test_small_corpus(self):
        subjects = generate_corpus(4, (1, 1, 1, 1), 600.0, 64.0, seed=50)
        assert [s.true_grade for s in subjects] == [1, 2, 3, 4]
        assert [s.subject_id for s in subjects] == ["s01", "s02", "s03", "s04"]
        assert [s.seed for s in subjects] == [50, 51, 52, 53]

    def test_iter_matches_list(self):
        a = [s.subject_id for s in iter_corpus(3, (1, 1, 1, 0), 600.0, 64.0, 5)]
        b = [s.subject_id for s in generate_corpus(3, (1, 1, 1, 0), 600.0, 64.0, 5)]
        assert a == b


class TestExport:
    def test_csv_export_round_trip(self, tmp_path):
        subjects = generate_corpus(2, (1, 1, 0, 0), 600.0, 64.0, seed=20)
        manifest = export_corpus(tmp_path, subjects, fmt="csv")
        rows = read_manifest(manifest)
        assert [r["subject_id"] for r in rows] == ["s01", "s02"]
        assert rows[0]["grade"] == 1 and rows[1]["grade"] == 2
        back = read_recording_csv((tmp_path / rows[0]["file"]).read_text())
        assert np.array_equal(back.samples, subjects[0].recording.samples)
        mask = mask_from_csv_text(
            (tmp_path / "s01_truth_F4-C4.csv").read_text()
        )
        assert np.array_equal(mask.labels, subjects[0].truth_mask.labels)

    def test_edf_export_readable(self, tmp_path):
        subjects = generate_corpus(1, (0, 1, 0, 0), 600.0, 64.0, seed=30)
        export_corpus(tmp_path, subjects, fmt="edf")
        rec = read_edf(tmp_path / "s01.edf")
        assert rec.sample_rate_hz == 64.0
        assert rec.n_channels == 9
        span = np.max(np.abs(rec.samples - subjects[0].recording.samples))
        assert span < 0.01  # within EDF quantization

    def test_bad_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="fmt"):
            export_corpus(tmp_path, [], fmt="hdf")
