"""Minimal EDF (European Data Format) reader and writer.

Supports the classic continuous-recording subset: ASCII headers, int16
little-endian data records, one sampling rate shared by the channels of
interest.  Annotation signals and EDF+ discontinuities are out of scope;
an ``EDF+D`` reserved field is rejected rather than silently misread.

Parse errors carry the byte offset and field name of the offending
header entry so malformed exports from acquisition software can be
diagnosed without a hex editor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from neoburst.signal_model import EegRecording

HEADER_BYTES = 256
PER_SIGNAL_BYTES = 256


class EdfFormatError(ValueError):
    """Raised when a file violates the EDF header or record layout."""


@dataclass(frozen=True)
class EdfSignalHeader:
    """Per-signal header fields in file order."""

    label: str
    transducer: str
    physical_dimension: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    prefiltering: str
    samples_per_record: int


@dataclass(frozen=True)
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    header_length: int
    reserved: str
    n_records: int
    record_duration_s: float
    signals: tuple[EdfSignalHeader, ...]

    @property
    def n_signals(self) -> int:
        return len(self.signals)


class _FieldReader:
    """Sequential ASCII field reader that remembers where it is."""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, field: str) -> str:
        chunk = self.data[self.offset : self.offset + n]
        if len(chunk) < n:
            raise EdfFormatError(
                f"file truncated at byte {self.offset} while reading field '{field}'"
            )
        self.offset += n
        try:
            return chunk.decode("ascii").strip()
        except UnicodeDecodeError:
            raise EdfFormatError(
                f"field '{field}' at byte {self.offset - n} is not ASCII"
            ) from None

    def take_int(self, n: int, field: str) -> int:
        at = self.offset
        text = self.take(n, field)
        try:
            return int(text)
        except ValueError:
            raise EdfFormatError(
                f"field '{field}' at byte {at} is not an integer: {text!r}"
            ) from None

    def take_float(self, n: int, field: str) -> float:
        at = self.offset
        text = self.take(n, field)
        try:
            return float(text)
        except ValueError:
            raise EdfFormatError(
                f"field '{field}' at byte {at} is not a number: {text!r}"
            ) from None


def read_edf_header(data: bytes) -> EdfHeader:
    """Parse the fixed 256-byte header plus all per-signal blocks."""
    r = _FieldReader(data)
    version = r.take(8, "version")
    if version != "0":
        raise EdfFormatError(f"unsupported EDF version {version!r} (expected '0')")
    patient_id = r.take(80, "patient_id")
    recording_id = r.take(80, "recording_id")
    start_date = r.take(8, "start_date")
    start_time = r.take(8, "start_time")
    header_length = r.take_int(8, "header_length")
    reserved = r.take(44, "reserved")
    if reserved.startswith("EDF+D"):
        raise EdfFormatError("discontinuous EDF+D recordings are not supported")
    n_records = r.take_int(8, "n_records")
    record_duration_s = r.take_float(8, "record_duration_s")
    n_signals = r.take_int(4, "n_signals")
    if n_signals <= 0:
        raise EdfFormatError(f"n_signals must be positive, got {n_signals}")
    if record_duration_s <= 0:
        raise EdfFormatError(f"record_duration_s must be positive, got {record_duration_s}")
    expected_len = HEADER_BYTES + PER_SIGNAL_BYTES * n_signals
    if header_length != expected_len:
        raise EdfFormatError(
            f"header_length field says {header_length} but {n_signals} signals "
            f"imply {expected_len}"
        )
    if len(data) < expected_len:
        raise EdfFormatError(
            f"file truncated at byte {len(data)}: header needs {expected_len} bytes"
        )

    # Per-signal fields are stored column-wise: all labels, then all
    # transducers, and so on.
    labels = [r.take(16, f"label[{i}]") for i in range(n_signals)]
    transducers = [r.take(80, f"transducer[{i}]") for i in range(n_signals)]
    dims = [r.take(8, f"physical_dimension[{i}]") for i in range(n_signals)]
    phys_min = [r.take_float(8, f"physical_min[{i}]") for i in range(n_signals)]
    phys_max = [r.take_float(8, f"physical_max[{i}]") for i in range(n_signals)]
    dig_min = [r.take_int(8, f"digital_min[{i}]") for i in range(n_signals)]
    dig_max = [r.take_int(8, f"digital_max[{i}]") for i in range(n_signals)]
    prefilter = [r.take(80, f"prefiltering[{i}]") for i in range(n_signals)]
    spr = [r.take_int(8, f"samples_per_record[{i}]") for i in range(n_signals)]
    for i in range(n_signals):
        r.take(32, f"signal_reserved[{i}]")

    signals = []
    for i in range(n_signals):
        if dig_max[i] <= dig_min[i]:
            raise EdfFormatError(
                f"signal {i} ({labels[i]!r}): digital_max {dig_max[i]} must exceed "
                f"digital_min {dig_min[i]}"
            )
        if phys_max[i] == phys_min[i]:
            raise EdfFormatError(
                f"signal {i} ({labels[i]!r}): physical_max equals physical_min "
                f"({phys_max[i]}), scaling undefined"
            )
        if spr[i] <= 0:
            raise EdfFormatError(
                f"signal {i} ({labels[i]!r}): samples_per_record must be positive, "
                f"got {spr[i]}"
            )
        signals.append(
            EdfSignalHeader(
                labels[i], transducers[i], dims[i], phys_min[i], phys_max[i],
                dig_min[i], dig_max[i], prefilter[i], spr[i],
            )
        )
    return EdfHeader(
        version, patient_id, recording_id, start_date, start_time,
        header_length, reserved, n_records, record_duration_s, tuple(signals),
    )


def normalize_label(label: str) -> str:
    """Map acquisition-style signal labels onto bare electrode names.

    Strips an ``EEG`` prefix and a reference suffix such as ``-REF`` so
    that ``"EEG F4-Ref"`` matches a request for ``"F4"``.
    """
    text = label.strip()
    text = re.sub(r"^EEG[\s_]+", "", text, flags=re.IGNORECASE)
    text = re.sub(r"[-\s](REF|Ref|ref|A1|A2|AVG)$", "", text)
    return text


def read_edf(path, labels=None) -> EegRecording:
    """Read an EDF file into an EegRecording, in file order or a
    requested label order.

    labels, when given, selects channels by normalized name and fixes
    the output row order; a missing label raises EdfFormatError naming
    it.  All selected channels must share one sampling rate.
    """
    with open(path, "rb") as f:
        data = f.read()
    header = read_edf_header(data)
    if header.n_records < 0:
        raise EdfFormatError("n_records is -1 (unknown length); finalize the file first")

    norm = [normalize_label(s.label) for s in header.signals]
    if labels is None:
        picks = list(range(header.n_signals))
        out_labels = tuple(norm)
    else:
        by_name: dict[str, int] = {}
        for i, name in enumerate(norm):
            by_name.setdefault(name, i)
        picks = []
        for want in labels:
            if want not in by_name:
                raise EdfFormatError(
                    f"requested channel {want!r} not in file "
                    f"(signals: {', '.join(norm)})"
                )
            picks.append(by_name[want])
        out_labels = tuple(labels)

    rates = {header.signals[i].samples_per_record / header.record_duration_s for i in picks}
    if len(rates) != 1:
        raise EdfFormatError(
            f"selected channels have mixed sampling rates: {sorted(rates)} Hz"
        )
    rate = rates.pop()

    record_samples = sum(s.samples_per_record for s in header.signals)
    body = np.frombuffer(data, dtype="<i2", offset=header.header_length)
    if body.size < header.n_records * record_samples:
        raise EdfFormatError(
            f"data area holds {body.size} samples, header promises "
            f"{header.n_records * record_samples}"
        )
    body = body[: header.n_records * record_samples].reshape(
        header.n_records, record_samples
    )

    starts = np.cumsum([0] + [s.samples_per_record for s in header.signals])
    rows = np.empty((len(picks), header.n_records * header.signals[picks[0]].samples_per_record))
    for row, i in enumerate(picks):
        sig = header.signals[i]
        digital = body[:, starts[i] : starts[i + 1]].reshape(-1).astype(np.float64)
        gain = (sig.physical_max - sig.physical_min) / (sig.digital_max - sig.digital_min)
        rows[row] = (digital - sig.digital_min) * gain + sig.physical_min
    return EegRecording(rate, out_labels, rows)


def write_recording_csv(rec: EegRecording) -> str:
    """Serialize a recording as `time_s,<label>,...` CSV text.

    Values use repr formatting (17 significant digits), so read ∘ write
    reproduces the samples exactly.
    """
    header = "time_s," + ",".join(rec.labels)
    times = rec.start_offset_s + np.arange(rec.n_samples) / rec.sample_rate_hz
    lines = [header]
    cols = rec.samples.T
    for t, row in zip(times, cols):
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def read_recording_csv(text: str) -> EegRecording:
    """Parse CSV text produced by write_recording_csv (or any uniform
    `time_s,...` table) into an EegRecording."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("recording CSV is empty")
    header = lines[0].split(",")
    if header[0].strip() != "time_s" or len(header) < 2:
        raise ValueError("recording CSV must start with header 'time_s,<label>,...'")
    labels = tuple(h.strip() for h in header[1:])
    if len(lines) < 3:
        raise ValueError("recording CSV has no samples (need at least two rows)")
    n = len(lines) - 1
    times = np.empty(n)
    samples = np.empty((len(labels), n))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(
                f"row {i}: expected {len(header)} fields, got {len(parts)}"
            )
        try:
            times[i - 2] = float(parts[0])
            samples[:, i - 2] = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"row {i}: non-numeric field") from None
    dt = times[1] - times[0]
    if dt <= 0:
        raise ValueError("recording CSV timestamps must be strictly increasing")
    expected = times[0] + np.arange(n) * dt
    drift = np.abs(times - expected)
    if np.max(drift) > 1e-6:
        bad = int(np.argmax(drift)) + 2
        raise ValueError(f"row {bad}: timestamps not uniform within 1e-6 s")
    return EegRecording(1.0 / dt, labels, samples, start_offset_s=float(times[0]))


def write_edf(path, rec: EegRecording, physical_dimension: str = "uV",
              patient_id: str = "X", recording_id: str = "X") -> None:
    """Write a recording as EDF with one-second data records.

    Requires an integer sampling rate and a sample count divisible by
    it; the quantization step spans the observed per-channel amplitude
    range over the full int16 grid.
    """
    rate = rec.sample_rate_hz
    if rate != int(rate) or int(rate) <= 0:
        raise ValueError(f"EDF writer needs an integer sampling rate, got {rate}")
    rate = int(rate)
    if rec.n_samples % rate != 0:
        raise ValueError(
            f"{rec.n_samples} samples not divisible by rate {rate}; "
            "pad or trim to whole seconds"
        )
    n_records = rec.n_samples // rate
    n_signals = rec.n_channels

    dig_min, dig_max = -32768, 32767
    phys_min = np.empty(n_signals)
    phys_max = np.empty(n_signals)
    for i in range(n_signals):
        lo = float(np.min(rec.samples[i]))
        hi = float(np.max(rec.samples[i]))
        if hi == lo:
            hi = lo + 1.0
        # pad 1% so extremes do not clip under round-off, then snap to
        # what the 8-char ASCII field will actually carry so encoder and
        # decoder share one affine map
        span = hi - lo
        phys_min[i] = float(f"{lo - 0.01 * span:.6g}")
        phys_max[i] = float(f"{hi + 0.01 * span:.6g}")

    def field(value, width) -> bytes:
        text = f"{value}"
        if len(text) > width:
            text = f"{value:.{max(width - 6, 1)}g}" if isinstance(value, float) else text[:width]
        if len(text) > width:
            raise ValueError(f"field {value!r} does not fit {width} bytes")
        return text.ljust(width).encode("ascii")

    parts = [
        field("0", 8),
        field(patient_id, 80),
        field(recording_id, 80),
        field("01.01.00", 8),
        field("00.00.00", 8),
        field(HEADER_BYTES + PER_SIGNAL_BYTES * n_signals, 8),
        field("", 44),
        field(n_records, 8),
        field(1, 8),
        field(n_signals, 4),
    ]
    parts += [field(label, 16) for label in rec.labels]
    parts += [field("", 80)] * n_signals
    parts += [field(physical_dimension, 8)] * n_signals
    parts += [field(f"{phys_min[i]:.6g}", 8) for i in range(n_signals)]
    parts += [field(f"{phys_max[i]:.6g}", 8) for i in range(n_signals)]
    parts += [field(dig_min, 8)] * n_signals
    parts += [field(dig_max, 8)] * n_signals
    parts += [field("", 80)] * n_signals
    parts += [field(rate, 8)] * n_signals
    parts += [field("", 32)] * n_signals

    digital = np.empty((n_signals, rec.n_samples), dtype="<i2")
    for i in range(n_signals):
        gain = (phys_max[i] - phys_min[i]) / (dig_max - dig_min)
        codes = np.round((rec.samples[i] - phys_min[i]) / gain + dig_min)
        digital[i] = np.clip(codes, dig_min, dig_max).astype("<i2")

    with open(path, "wb") as f:
        f.write(b"".join(parts))
        # record-major layout: each record holds one second of every signal
        interleaved = (
            digital.reshape(n_signals, n_records, rate)
            .transpose(1, 0, 2)
            .reshape(n_records, n_signals * rate)
        )
        f.write(interleaved.tobytes())
