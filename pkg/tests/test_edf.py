"""EDF subset parsing, scaling, and the CSV interchange format."""

import numpy as np
import pytest

from neoburst.edf import (
    EdfFormatError,
    normalize_label,
    read_edf,
    read_edf_header,
    read_recording_csv,
    write_edf,
    write_recording_csv,
)
from neoburst.signal_model import ELECTRODE_LABELS, EegRecording


def _make_edf_bytes(
    labels=("F4",),
    n_records=2,
    record_duration=1,
    rate=4,
    phys=(-100.0, 100.0),
    dig=(-32768, 32767),
    digital_rows=None,
    version="0",
    reserved="",
    header_length=None,
):
    """Hand-rolled EDF byte builder independent of write_edf."""
    ns = len(labels)
    if header_length is None:
        header_length = 256 + 256 * ns
    head = (
        f"{version:<8}" + "X".ljust(80) + "X".ljust(80)
        + "01.01.00" + "00.00.00"
        + f"{header_length:<8}" + f"{reserved:<44}"
        + f"{n_records:<8}" + f"{record_duration:<8}" + f"{ns:<4}"
    )
    head += "".join(f"{l:<16}" for l in labels)
    head += "".join(" " * 80 for _ in labels)
    head += "".join(f"{'uV':<8}" for _ in labels)
    head += "".join(f"{phys[0]:<8}" for _ in labels)
    head += "".join(f"{phys[1]:<8}" for _ in labels)
    head += "".join(f"{dig[0]:<8}" for _ in labels)
    head += "".join(f"{dig[1]:<8}" for _ in labels)
    head += "".join(" " * 80 for _ in labels)
    head += "".join(f"{rate:<8}" for _ in labels)
    head += "".join(" " * 32 for _ in labels)
    body = b""
    if digital_rows is None:
        digital_rows = np.zeros((ns, n_records * rate), dtype=np.int16)
    digital_rows = np.asarray(digital_rows, dtype="<i2")
    for rec_i in range(n_records):
        for ch in range(ns):
            body += digital_rows[ch, rec_i * rate : (rec_i + 1) * rate].tobytes()
    return head.encode("ascii") + body


class TestHeaderParsing:
    def test_basic_fields(self):
        hdr = read_edf_header(_make_edf_bytes(labels=("F4", "C4"), rate=8))
        assert hdr.n_signals == 2
        assert hdr.n_records == 2
        assert hdr.record_duration_s == 1.0
        assert hdr.signals[0].samples_per_record == 8
        assert hdr.signals[1].label == "C4"

    def test_rejects_bad_version(self):
        with pytest.raises(EdfFormatError, match="version"):
            read_edf_header(_make_edf_bytes(version="7"))

    def test_rejects_truncated_header(self):
        # cut inside recording_id (bytes 88..168)
        data = _make_edf_bytes()[:100]
        with pytest.raises(EdfFormatError, match="byte 88.*recording_id"):
            read_edf_header(data)

    def test_rejects_non_numeric_field(self):
        data = bytearray(_make_edf_bytes())
        data[236:244] = b"oops    "  # n_records field
        with pytest.raises(EdfFormatError, match="n_records.*byte 236"):
            read_edf_header(bytes(data))

    def test_rejects_wrong_header_length(self):
        with pytest.raises(EdfFormatError, match="header_length"):
            read_edf_header(_make_edf_bytes(header_length=9999))

    def test_rejects_discontinuous(self):
        with pytest.raises(EdfFormatError, match="EDF\\+D"):
            read_edf_header(_make_edf_bytes(reserved="EDF+D"))

    def test_rejects_equal_physical_bounds(self):
        with pytest.raises(EdfFormatError, match="physical_max"):
            read_edf_header(_make_edf_bytes(phys=(5.0, 5.0)))

    def test_rejects_inverted_digital_bounds(self):
        with pytest.raises(EdfFormatError, match="digital_max"):
            read_edf_header(_make_edf_bytes(dig=(100, -100)))


class TestScaling:
    def test_endpoints_map_to_physical_bounds(self, tmp_path):
        # digital extremes must land exactly on the physical extremes
        dig = np.array([[-32768, 32767, 0, 0, -32768, 32767, 0, 0]], dtype=np.int16)
        data = _make_edf_bytes(digital_rows=dig, phys=(-200.0, 200.0))
        p = tmp_path / "a.edf"
        p.write_bytes(data)
        rec = read_edf(p)
        assert rec.samples[0, 0] == pytest.approx(-200.0)
        assert rec.samples[0, 1] == pytest.approx(200.0)

    def test_scaling_is_affine_monotone(self, tmp_path):
        dig = np.arange(-4000, 4000, 1000, dtype=np.int16).reshape(1, 8)
        p = tmp_path / "b.edf"
        p.write_bytes(_make_edf_bytes(digital_rows=dig))
        rec = read_edf(p)
        assert np.all(np.diff(rec.samples[0]) > 0)
        steps = np.diff(rec.samples[0])
        assert np.allclose(steps, steps[0])

    def test_sample_rate_from_record_duration(self, tmp_path):
        p = tmp_path / "c.edf"
        p.write_bytes(_make_edf_bytes(rate=128, n_records=1))
        assert read_edf(p).sample_rate_hz == 128.0


class TestRoundTrip:
    def test_write_then_read_within_half_step(self, tmp_path):
        rng = np.random.default_rng(42)
        rec = EegRecording(
            64.0, ELECTRODE_LABELS, rng.normal(scale=40.0, size=(9, 64 * 5))
        )
        p = tmp_path / "nine.edf"
        write_edf(p, rec)
        back = read_edf(p, labels=ELECTRODE_LABELS)
        assert back.sample_rate_hz == 64.0
        assert back.labels == ELECTRODE_LABELS
        for i in range(9):
            span = rec.samples[i].max() - rec.samples[i].min()
            step = 1.02 * span / 65535  # physical range padded 1% each side
            err = np.max(np.abs(back.samples[i] - rec.samples[i]))
            assert err <= step / 2 + 1e-12

    def test_writer_rejects_fractional_rate(self, tmp_path):
        rec = EegRecording(62.5, ("a",), np.zeros((1, 125)))
        with pytest.raises(ValueError, match="integer sampling rate"):
            write_edf(tmp_path / "x.edf", rec)

    def test_writer_rejects_partial_seconds(self, tmp_path):
        rec = EegRecording(64.0, ("a",), np.zeros((1, 100)))
        with pytest.raises(ValueError, match="divisible"):
            write_edf(tmp_path / "x.edf", rec)


class TestChannelSelection:
    def test_label_normalization(self):
        assert normalize_label(" EEG F4-REF ") == "F4"
        assert normalize_label("EEG Cz-Ref") == "Cz"
        assert normalize_label("C3") == "C3"

    def test_select_and_reorder(self, tmp_path):
        rng = np.random.default_rng(0)
        rec = EegRecording(32.0, ("T4", "C4", "F4"), rng.normal(size=(3, 64)))
        p = tmp_path / "sel.edf"
        write_edf(p, rec)
        sub = read_edf(p, labels=("F4", "T4"))
        assert sub.labels == ("F4", "T4")
        assert np.allclose(sub.samples[0], rec.samples[2], atol=1e-2)

    def test_missing_channel_named(self, tmp_path):
        p = tmp_path / "m.edf"
        p.write_bytes(_make_edf_bytes(labels=("F4",)))
        with pytest.raises(EdfFormatError, match="'O2'"):
            read_edf(p, labels=("O2",))

    def test_mixed_rates_rejected(self, tmp_path):
        ns = 2
        head = _make_edf_bytes(labels=("a", "b"), rate=4, n_records=1)
        data = bytearray(head)
        # second signal's samples_per_record field
        off = 256 + ns * (16 + 80 + 8 + 8 + 8 + 8 + 8 + 80) + 8
        data[off : off + 8] = b"8       "  # second signal now claims 8 Hz
        p = tmp_path / "mix.edf"
        p.write_bytes(bytes(data[: 256 + 256 * ns]) + b"\x00" * 2 * 12)
        with pytest.raises(EdfFormatError, match="mixed sampling rates"):
            read_edf(p)


class TestRecordingCsv:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(5)
        rec = EegRecording(64.0, ("F4-C4", "C4-O2"), rng.normal(size=(2, 3)))
        back = read_recording_csv(write_recording_csv(rec))
        assert back.labels == rec.labels
        assert back.sample_rate_hz == pytest.approx(64.0, abs=1e-9)
        assert np.array_equal(back.samples, rec.samples)

    def test_longer_round_trip_error_bound(self):
        rng = np.random.default_rng(6)
        rec = EegRecording(16.0, ("x",), rng.normal(scale=100.0, size=(1, 200)))
        back = read_recording_csv(write_recording_csv(rec))
        assert np.max(np.abs(back.samples - rec.samples)) < 1e-6

    def test_empty_data_errors(self):
        with pytest.raises(ValueError, match="no samples"):
            read_recording_csv("time_s,a\n")

    def test_jittered_timestamp_rejected(self):
        text = "time_s,a\n0.0,1.0\n1.0,2.0\n2.001,3.0\n"
        with pytest.raises(ValueError, match="row 4"):
            read_recording_csv(text)

    def test_ragged_row_rejected(self):
        text = "time_s,a,b\n0.0,1.0,2.0\n1.0,1.0\n2.0,1.0,2.0\n"
        with pytest.raises(ValueError, match="row 3"):
            read_recording_csv(text)
