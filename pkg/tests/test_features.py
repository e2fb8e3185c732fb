"""Inter-burst percentage, interval spread, and the feature table."""

import math

import numpy as np
import pytest

from neoburst.features import (
    IbiFeatureVector,
    feature_table_from_csv,
    feature_table_to_csv,
    ibi_percentage,
    log_feature,
    max_ibi,
    summarize_mask,
)
from neoburst.signal_model import BinaryMask, IntervalList, mask_to_intervals


def _il(epoch, rows):
    return IntervalList(epoch, np.array(rows, dtype=float).reshape(-1, 2))


class TestIbiPercentage:
    def test_no_intervals(self):
        assert ibi_percentage(_il(3600.0, [])) == 0.0

    def test_full_epoch(self):
        assert ibi_percentage(_il(3600.0, [[0.0, 3600.0]])) == 100.0

    def test_direct_sum(self):
        assert ibi_percentage(_il(100.0, [[0, 10], [50, 20]])) == 30.0

    def test_additive_over_disjoint_union(self):
        a = _il(200.0, [[0, 5], [20, 15]])
        b = _il(200.0, [[50, 30]])
        union = _il(200.0, [[0, 5], [20, 15], [50, 30]])
        assert ibi_percentage(union) == ibi_percentage(a) + ibi_percentage(b)

    def test_time_rescaling_invariance(self):
        base = _il(100.0, [[0, 10], [50, 20]])
        scaled = _il(700.0, [[0, 70], [350, 140]])
        assert ibi_percentage(scaled) == ibi_percentage(base)

    def test_matches_mask_count_exactly(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            rate = float(rng.choice([1, 2, 4, 8, 16, 32, 64]))
            labels = (rng.random(int(rng.integers(10, 500))) < 0.5).astype(np.uint8)
            mask = BinaryMask(rate, labels)
            pct = ibi_percentage(mask_to_intervals(mask))
            assert pct == 100.0 * np.count_nonzero(labels) / labels.size


class TestMaxIbi:
    def test_spread_of_two(self):
        assert max_ibi(_il(100.0, [[0, 10], [50, 20]])) == 10.0

    def test_single_interval_is_zero(self):
        assert max_ibi(_il(100.0, [[5, 15]])) == 0.0

    def test_empty_is_zero(self):
        assert max_ibi(_il(100.0, [])) == 0.0

    def test_plain_max_variant(self):
        il = _il(100.0, [[0, 10], [50, 20]])
        assert max_ibi(il, plain_max=True) == 20.0
        assert max_ibi(_il(100.0, []), plain_max=True) == 0.0

    def test_translation_invariance(self):
        a = _il(100.0, [[0, 10], [30, 25]])
        b = _il(100.0, [[5, 10], [60, 25]])
        assert max_ibi(a) == max_ibi(b)

    def test_time_rescaling_covariance(self):
        a = _il(100.0, [[0, 10], [50, 22]])
        b = _il(300.0, [[0, 30], [150, 66]])
        assert max_ibi(b) == 3.0 * max_ibi(a)


class TestLogFeature:
    def test_ten_seconds(self):
        assert log_feature(10.0) == pytest.approx(2.3026, abs=5e-5)

    def test_sixty_seconds(self):
        assert log_feature(60.0) == pytest.approx(4.0943, abs=5e-5)

    def test_one_second(self):
        assert log_feature(1.0) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            log_feature(0.0)
        with pytest.raises(ValueError):
            log_feature(-3.0)

    def test_is_natural_log(self):
        assert log_feature(math.e) == pytest.approx(1.0)


class TestFeatureVector:
    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            IbiFeatureVector("s", 101.0, 0.0)
        with pytest.raises(ValueError):
            IbiFeatureVector("s", 50.0, -1.0)
        with pytest.raises(ValueError):
            IbiFeatureVector("s", 50.0, 1.0, true_grade=5)

    def test_summarize_mask(self):
        labels = np.zeros(100, dtype=np.uint8)
        labels[10:30] = 1  # 20 samples
        labels[60:65] = 1  # 5 samples
        fv = summarize_mask(BinaryMask(1.0, labels), "s01", 2)
        assert fv.ibi_percent == 25.0
        assert fv.max_ibi_s == 15.0
        assert fv.true_grade == 2


class TestFeatureTable:
    def test_round_trip(self):
        rows = [
            IbiFeatureVector("s01", 12.5, 3.25, 1),
            IbiFeatureVector("s02", 99.0, 80.125, 4),
            IbiFeatureVector("s03", 0.0, 0.0, None),
        ]
        back = feature_table_from_csv(feature_table_to_csv(rows))
        assert back == rows

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            feature_table_from_csv("a,b,c,d\nx,1,2,3\n")

    def test_rejects_ragged_row(self):
        text = "subject_id,ibi_percent,max_ibi_s,true_grade\ns01,1.0,2.0\n"
        with pytest.raises(ValueError, match="row 2"):
            feature_table_from_csv(text)
