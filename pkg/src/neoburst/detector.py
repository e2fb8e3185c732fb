"""Channel-independent inter-burst detector.

Each EEG channel is band-passed, resampled to a common processing rate
and cut into overlapped windows.  Every window yields 14 features:
per band (0.5-3, 3-8, 8-15, 15-30 Hz) the RMS amplitude, the relative
spectral power and the mean smoothed nonlinear energy, plus wideband
spectral edge frequency and peak-to-peak amplitude.  A linear SVM turns
windows into scores, scores are averaged back onto samples, and short
events are cleaned up by duration rules.

Feature selection is greedy max-relevance/min-redundancy over a
quantized mutual-information estimate.  The SVM is trained by a
two-variable working-set method with a duality-gap certificate, so the
returned weights are optimal to the documented tolerance without any
external solver dependency.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from neoburst.kvdoc import (
    ModelFormatError,
    dump_kv,
    format_float,
    format_floats,
    parse_float,
    parse_floats,
    parse_int,
    parse_ints,
    parse_kv,
    require,
)
from neoburst.signal_model import BinaryMask, EegRecording, _runs, majority_vote

DETECTOR_FORMAT = "neoburst-detector/1"

DEFAULT_BANDS = ((0.5, 3.0), (3.0, 8.0), (8.0, 15.0), (15.0, 30.0))

#: Length of the moving average applied to the nonlinear energy, seconds.
NLEO_SMOOTH_S = 0.25

#: Fraction of total 0.5-30 Hz power below the spectral edge frequency.
SPECTRAL_EDGE_FRACTION = 0.95


@dataclass(frozen=True)
class DetectorConfig:
    bands: tuple[tuple[float, float], ...] = DEFAULT_BANDS
    process_rate_hz: float = 64.0
    window_s: float = 2.0
    overlap_fraction: float = 0.5
    min_interburst_s: float = 1.0
    min_burst_s: float = 0.5
    svm_c: float = 1.0
    selected_feature_count: int = 8
    seed: int = 0
    max_train_windows: int = 12000

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple((float(a), float(b)) for a, b in self.bands))
        if not self.bands:
            raise ValueError("need at least one analysis band")
        nyq = self.process_rate_hz / 2.0
        for lo, hi in self.bands:
            if not 0.0 < lo < hi <= nyq:
                raise ValueError(f"band ({lo}, {hi}) outside (0, {nyq}]")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        for name in ("process_rate_hz", "window_s", "min_interburst_s", "min_burst_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.svm_c <= 0:
            raise ValueError(f"svm_c must be positive, got {self.svm_c}")
        if not 1 <= self.selected_feature_count <= self.feature_count:
            raise ValueError(
                f"selected_feature_count must be in [1, {self.feature_count}], "
                f"got {self.selected_feature_count}"
            )
        if self.max_train_windows < 2:
            raise ValueError("max_train_windows must be at least 2")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.process_rate_hz))

    @property
    def hop_samples(self) -> int:
        hop = int(round(self.window_samples * (1.0 - self.overlap_fraction)))
        return max(hop, 1)

    @property
    def feature_count(self) -> int:
        return 3 * len(self.bands) + 2

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = []
        for lo, hi in self.bands:
            names += [f"rms_{lo:g}_{hi:g}", f"relpow_{lo:g}_{hi:g}", f"nleo_{lo:g}_{hi:g}"]
        return tuple(names + ["sef95", "ptp"])

    @property
    def wide_band(self) -> tuple[float, float]:
        return (min(lo for lo, _ in self.bands), max(hi for _, hi in self.bands))


@dataclass(frozen=True)
class FeatureMatrix:
    """Windowed feature values with their column names and centers."""

    values: np.ndarray
    names: tuple[str, ...]
    window_centers_s: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        c = np.asarray(self.window_centers_s, dtype=np.float64)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "window_centers_s", c)
        object.__setattr__(self, "names", tuple(self.names))
        if v.ndim != 2 or v.shape[1] != len(self.names):
            raise ValueError("values must be (n_windows, n_features) matching names")
        if c.shape != (v.shape[0],):
            raise ValueError("window_centers_s must have one entry per window")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature matrix contains non-finite values")

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DetectorModel:
    """Trained detector: selection, normalization and hyperplane."""

    config: DetectorConfig
    selected_indices: tuple[int, ...]
    feature_means: np.ndarray
    feature_sds: np.ndarray
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        for name in ("feature_means", "feature_sds", "weights"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "selected_indices", tuple(int(i) for i in self.selected_indices))
        k = len(self.selected_indices)
        for name in ("feature_means", "feature_sds", "weights"):
            if getattr(self, name).shape != (k,):
                raise ValueError(f"{name} must have {k} entries")
        if np.any(self.feature_sds <= 0):
            raise ValueError("feature_sds must be positive")
        bad = [i for i in self.selected_indices if not 0 <= i < self.config.feature_count]
        if bad:
            raise ValueError(f"selected index out of range: {bad[0]}")

    @property
    def selected_names(self) -> tuple[str, ...]:
        names = self.config.feature_names
        return tuple(names[i] for i in self.selected_indices)

    def window_scores(self, fm: FeatureMatrix) -> np.ndarray:
        """Signed hyperplane distance per window (positive = inter-burst)."""
        x = fm.values[:, list(self.selected_indices)]
        z = (x - self.feature_means) / self.feature_sds
        return z @ self.weights + self.bias


def _bandpass_sos(lo: float, hi: float, rate: float):
    # guard: digital edge must stay strictly below Nyquist
    hi_eff = min(hi, 0.499 * rate)
    if not 0.0 < lo < hi_eff:
        raise ValueError(f"band ({lo}, {hi}) invalid at rate {rate} Hz")
    return sps.butter(4, [lo, hi_eff], btype="bandpass", fs=rate, output="sos")


def band_filter(x: np.ndarray, band: tuple[float, float], rate: float) -> np.ndarray:
    """Zero-phase band-pass of a 1-D signal."""
    lo, hi = band
    if not 0.0 < lo < hi < rate / 2.0 + 1e-12:
        raise ValueError(f"band ({lo}, {hi}) outside (0, {rate / 2})")
    return sps.sosfiltfilt(_bandpass_sos(lo, hi, rate), np.asarray(x, dtype=np.float64))


def preprocess(x: np.ndarray, fs: float, cfg: DetectorConfig | None = None) -> np.ndarray:
    """Wideband filter and resample one channel to the processing rate."""
    cfg = cfg or DetectorConfig()
    lo, hi = cfg.wide_band
    if fs < 2.0 * hi:
        raise ValueError(f"sampling rate {fs} Hz below 2x top band edge {hi} Hz")
    x = np.asarray(x, dtype=np.float64)
    y = sps.sosfiltfilt(_bandpass_sos(lo, hi, fs), x)
    if fs == cfg.process_rate_hz:
        return y
    ratio = Fraction(cfg.process_rate_hz / fs).limit_denominator(10000)
    if abs(float(ratio) * fs - cfg.process_rate_hz) > 1e-9 * cfg.process_rate_hz:
        raise ValueError(
            f"cannot resample {fs} Hz to {cfg.process_rate_hz} Hz with a rational factor"
        )
    return sps.resample_poly(y, ratio.numerator, ratio.denominator)


def _nleo(x: np.ndarray) -> np.ndarray:
    """Nonlinear (Teager) energy x(n)^2 - x(n-1)x(n+1), zero at the ends."""
    psi = np.zeros_like(x)
    if x.size >= 3:
        psi[1:-1] = x[1:-1] ** 2 - x[:-2] * x[2:]
    return psi


def _moving_average(x: np.ndarray, n: int) -> np.ndarray:
    if n <= 1:
        return x
    kernel = np.full(n, 1.0 / n)
    return np.convolve(x, kernel, mode="same")


def _window_view(x: np.ndarray, win: int, hop: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(x, win)
    return view[::hop]


def extract_features(x: np.ndarray, cfg: DetectorConfig | None = None) -> FeatureMatrix:
    """Per-window features of one channel already at the processing rate."""
    cfg = cfg or DetectorConfig()
    x = np.asarray(x, dtype=np.float64)
    win, hop = cfg.window_samples, cfg.hop_samples
    if x.size < win:
        raise ValueError(f"signal of {x.size} samples shorter than one {win}-sample window")

    rate = cfg.process_rate_hz
    n_win = 1 + (x.size - win) // hop
    starts = np.arange(n_win) * hop
    centers = (starts + win / 2.0) / rate

    cols = np.empty((n_win, cfg.feature_count))
    smooth_n = max(int(round(NLEO_SMOOTH_S * rate)), 1)

    # spectral quantities share one Hann periodogram per window
    windows = _window_view(x, win, hop)
    freqs, psd = sps.periodogram(windows, fs=rate, window="hann", detrend=False, axis=-1)
    lo_w, hi_w = cfg.wide_band
    wide_bins = (freqs >= lo_w) & (freqs <= hi_w)
    total = np.sum(psd[:, wide_bins], axis=1)

    col = 0
    for b, (lo, hi) in enumerate(cfg.bands):
        filtered = band_filter(x, (lo, hi), rate)
        fw = _window_view(filtered, win, hop)
        cols[:, col] = np.sqrt(np.mean(fw**2, axis=1))

        last = b == len(cfg.bands) - 1
        band_bins = (freqs >= lo) & ((freqs <= hi) if last else (freqs < hi))
        band_power = np.sum(psd[:, band_bins], axis=1)
        cols[:, col + 1] = np.divide(
            band_power, total, out=np.zeros(n_win), where=total > 0
        )

        smoothed = _moving_average(_nleo(filtered), smooth_n)
        cols[:, col + 2] = np.mean(_window_view(smoothed, win, hop), axis=1)
        col += 3

    # spectral edge: lowest frequency at which cumulative in-band power
    # reaches the edge fraction
    in_band = psd[:, wide_bins]
    band_freqs = freqs[wide_bins]
    cum = np.cumsum(in_band, axis=1)
    with np.errstate(invalid="ignore"):
        reached = cum >= SPECTRAL_EDGE_FRACTION * total[:, None]
    edge_idx = np.argmax(reached, axis=1)
    sef = band_freqs[edge_idx]
    sef[total <= 0] = 0.0
    cols[:, col] = sef
    cols[:, col + 1] = np.ptp(windows, axis=1)

    return FeatureMatrix(cols, cfg.feature_names, centers)


def window_truth_labels(truth: BinaryMask, cfg: DetectorConfig, n_samples: int) -> np.ndarray:
    """Window-level labels from a per-sample truth mask: 1 when more than
    half of the window's samples are inter-burst."""
    if truth.rate_hz != cfg.process_rate_hz:
        raise ValueError(
            f"truth mask rate {truth.rate_hz} != processing rate {cfg.process_rate_hz}"
        )
    if truth.n_samples != n_samples:
        raise ValueError(f"truth mask has {truth.n_samples} samples, signal has {n_samples}")
    win, hop = cfg.window_samples, cfg.hop_samples
    n_win = 1 + (n_samples - win) // hop
    prefix = np.concatenate(([0], np.cumsum(truth.labels, dtype=np.int64)))
    starts = np.arange(n_win) * hop
    frac = (prefix[starts + win] - prefix[starts]) / win
    return (frac > 0.5).astype(np.int8)


# ---------------------------------------------------------------------------
# feature selection


def _equal_frequency_codes(col: np.ndarray, n_bins: int = 16) -> np.ndarray:
    edges = np.quantile(col, np.arange(1, n_bins) / n_bins)
    return np.searchsorted(edges, col, side="right")


def _mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """MI in nats between two small-alphabet integer code vectors."""
    na, nb = int(a.max()) + 1, int(b.max()) + 1
    joint = np.bincount(a * nb + b, minlength=na * nb).reshape(na, nb).astype(np.float64)
    joint /= joint.sum()
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])))


def select_features(values: np.ndarray, y: np.ndarray, k: int) -> list[int]:
    """Greedy relevance-minus-redundancy column selection.

    First pick maximizes mutual information with the labels; each later
    pick maximizes MI with labels minus mean MI with the picks so far.
    Ties resolve to the lower column index.
    """
    values = np.asarray(values, dtype=np.float64)
    y = np.asarray(y).astype(np.int64).ravel()
    n, d = values.shape
    if y.shape[0] != n:
        raise ValueError("label count does not match row count")
    if len(np.unique(y)) < 2:
        raise ValueError("feature selection needs both classes present")
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")

    codes = [_equal_frequency_codes(values[:, j]) for j in range(d)]
    relevance = np.array([_mutual_information(codes[j], y) for j in range(d)])

    selected: list[int] = []
    redundancy_sum = np.zeros(d)
    pair_mi: dict[tuple[int, int], float] = {}
    remaining = set(range(d))
    while len(selected) < k:
        if selected:
            score = relevance - redundancy_sum / len(selected)
        else:
            score = relevance.copy()
        score[[j for j in range(d) if j not in remaining]] = -np.inf
        best = int(np.argmax(score))
        selected.append(best)
        remaining.discard(best)
        for j in remaining:
            key = (min(best, j), max(best, j))
            if key not in pair_mi:
                pair_mi[key] = _mutual_information(codes[best], codes[j])
            redundancy_sum[j] += pair_mi[key]
    return selected


# ---------------------------------------------------------------------------
# linear SVM


def svm_objective(weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray,
                  c: float) -> float:
    """Primal objective 0.5*|w|^2 + C * sum hinge(y * (w.x + b))."""
    margins = y * (x @ weights + bias)
    return 0.5 * float(weights @ weights) + c * float(np.sum(np.maximum(0.0, 1.0 - margins)))


def _optimal_bias(scores: np.ndarray, y: np.ndarray, c: float) -> float:
    """Exact minimizer over b of C * sum hinge(y * (scores + b)).

    The objective is convex piecewise linear in b, so a minimum lies at a
    hinge breakpoint; prefix sums over the sorted breakpoints evaluate
    every candidate in O(n log n).
    """
    pos_break = np.sort(1.0 - scores[y > 0])  # active when b < breakpoint
    neg_break = np.sort(-1.0 - scores[y < 0])  # active when b > breakpoint
    candidates = np.unique(np.concatenate((pos_break, neg_break)))
    if candidates.size == 0:
        return 0.0
    pos_suffix = np.concatenate((np.cumsum(pos_break[::-1])[::-1], [0.0]))
    neg_prefix = np.concatenate(([0.0], np.cumsum(neg_break)))

    # sum over positives of max(0, p_i - b): suffix of breakpoints > b
    idx_p = np.searchsorted(pos_break, candidates, side="right")
    n_above = pos_break.size - idx_p
    pos_loss = pos_suffix[idx_p] - candidates * n_above
    # sum over negatives of max(0, b - q_i): prefix of breakpoints < b
    idx_n = np.searchsorted(neg_break, candidates, side="left")
    neg_loss = candidates * idx_n - neg_prefix[idx_n]
    total = pos_loss + neg_loss
    return float(candidates[int(np.argmin(total))])


def train_svm(x: np.ndarray, y: np.ndarray, c: float = 1.0, seed: int = 0,
              rtol: float = 1e-4, max_iter: int = 400000) -> tuple[np.ndarray, float]:
    """Train a soft-margin linear SVM to a duality-gap certificate.

    Returns (weights, bias).  y must be -1/+1 (0/1 accepted and mapped).
    The dual is solved by repeated two-variable updates on the maximal
    violating pair; iteration stops once the primal-dual gap certifies
    the primal objective is within rtol of optimal.  Deterministic for
    fixed inputs; seed is accepted for interface uniformity.
    """
    del seed  # the pair selection rule is already deterministic
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x must be (n, d) with one label per row")
    uniq = set(np.unique(y))
    if uniq == {0.0, 1.0}:
        y = np.where(y > 0, 1.0, -1.0)
    elif not uniq <= {-1.0, 1.0}:
        raise ValueError(f"labels must be binary, got values {sorted(uniq)}")
    if len(set(y)) < 2:
        raise ValueError("training needs both classes present")
    if c <= 0:
        raise ValueError(f"C must be positive, got {c}")

    n = x.shape[0]
    sq = np.einsum("ij,ij->i", x, x)
    alpha = np.zeros(n)
    w = np.zeros(x.shape[1])
    grad = -np.ones(n)  # d/dalpha of 0.5 a'Qa - e'a at alpha = 0

    # converge well past the documented tolerance so the certificate has
    # margin; the gap check below is the binding stop
    gap_target_rtol = min(rtol, 1e-6)
    check_every = 64
    for it in range(1, max_iter + 1):
        minus_y_grad = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        if not up.any() or not low.any():
            break
        i = int(np.argmax(np.where(up, minus_y_grad, -np.inf)))
        j = int(np.argmin(np.where(low, minus_y_grad, np.inf)))
        if minus_y_grad[i] - minus_y_grad[j] < 1e-10:
            break

        kij = float(x[i] @ x[j])
        quad = max(sq[i] + sq[j] - 2.0 * kij, 1e-12)  # curvature along the pair direction
        step = (minus_y_grad[i] - minus_y_grad[j]) / quad
        old_i, old_j = alpha[i], alpha[j]
        # move along the equality-feasible direction, then clip to the box
        ai = old_i + y[i] * step
        aj = old_j - y[j] * step
        if y[i] * y[j] > 0:
            total = old_i + old_j
            ai = min(max(ai, 0.0), c)
            aj = total - ai
            if aj < 0.0:
                aj = 0.0
                ai = total
            elif aj > c:
                aj = c
                ai = total - c
        else:
            diff = old_i - old_j
            ai = min(max(ai, max(0.0, diff)), c + min(0.0, diff))
            aj = ai - diff
        alpha[i], alpha[j] = ai, aj

        dw = (ai - old_i) * y[i] * x[i] + (aj - old_j) * y[j] * x[j]
        w += dw
        grad += y * (x @ dw)

        if it % check_every == 0:
            dual = float(alpha.sum()) - 0.5 * float(w @ w)
            bias = _optimal_bias(x @ w, y, c)
            primal = svm_objective(w, bias, x, y, c)
            if primal - dual <= gap_target_rtol * max(abs(primal), 1e-12):
                break
    else:
        dual = float(alpha.sum()) - 0.5 * float(w @ w)
        primal = svm_objective(w, _optimal_bias(x @ w, y, c), x, y, c)
        if primal - dual > rtol * max(abs(primal), 1e-12):
            raise RuntimeError(f"SVM did not reach tolerance in {max_iter} iterations")

    w = (alpha * y) @ x  # recompute cleanly from the duals
    bias = _optimal_bias(x @ w, y, c)
    return w, float(bias)


# ---------------------------------------------------------------------------
# training and detection


def train_detector(examples, cfg: DetectorConfig | None = None) -> DetectorModel:
    """Fit selection, normalization and SVM from labeled channel epochs.

    examples: iterable of (samples, fs_hz, truth_mask) where truth_mask
    is a BinaryMask at the processing rate aligned with the preprocessed
    samples.  Windows are pooled over all examples, subsampled to
    cfg.max_train_windows (stratified, seeded), selected and normalized,
    then classified.
    """
    cfg = cfg or DetectorConfig()
    blocks = []
    labels = []
    for samples, fs, truth in examples:
        x = preprocess(samples, fs, cfg)
        fm = extract_features(x, cfg)
        blocks.append(fm.values)
        labels.append(window_truth_labels(truth, cfg, x.size))
    if not blocks:
        raise ValueError("no training examples given")
    values = np.vstack(blocks)
    y = np.concatenate(labels)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("training examples contain a single class only")

    if y.size > cfg.max_train_windows:
        rng = np.random.default_rng(cfg.seed)
        keep = []
        for cls, count in zip(classes, counts):
            idx = np.flatnonzero(y == cls)
            quota = max(1, int(round(cfg.max_train_windows * count / y.size)))
            keep.append(rng.choice(idx, size=min(quota, idx.size), replace=False))
        keep = np.sort(np.concatenate(keep))
        values, y = values[keep], y[keep]

    selected = select_features(values, y, cfg.selected_feature_count)
    sub = values[:, selected]
    means = sub.mean(axis=0)
    sds = sub.std(axis=0)
    if np.any(sds <= 0):
        flat = cfg.feature_names[selected[int(np.argmax(sds <= 0))]]
        raise ValueError(f"selected feature {flat!r} is constant on the training set")
    z = (sub - means) / sds
    w, b = train_svm(z, np.where(y > 0, 1.0, -1.0), cfg.svm_c, cfg.seed)
    return DetectorModel(cfg, tuple(selected), means, sds, w, b)


def postprocess_mask(mask: BinaryMask, cfg: DetectorConfig | None = None) -> BinaryMask:
    """Remove short events: interior inter-burst runs below
    min_interburst_s become burst, then interior burst runs below
    min_burst_s become inter-burst.

    Runs touching the epoch edges are exempt (they are cut off by the
    epoch, so their true duration is unknown); this also makes the
    operation idempotent.
    """
    cfg = cfg or DetectorConfig()
    labels = mask.labels.copy()
    n = labels.size

    def relabel(value, min_len, new_value):
        for run_value, start, stop in _runs(labels):
            if run_value != value or start == 0 or stop == n:
                continue
            if stop - start < min_len:
                labels[start:stop] = new_value

    relabel(1, int(round(cfg.min_interburst_s * mask.rate_hz)), 0)
    relabel(0, int(round(cfg.min_burst_s * mask.rate_hz)), 1)
    return BinaryMask(mask.rate_hz, labels)


def _sample_scores(window_scores: np.ndarray, n_samples: int,
                   cfg: DetectorConfig) -> np.ndarray:
    """Average window scores onto samples; each sample takes the mean of
    every window covering it, and the uncovered tail takes the last
    window's score."""
    win, hop = cfg.window_samples, cfg.hop_samples
    sums = np.zeros(n_samples)
    counts = np.zeros(n_samples)
    for k in range(window_scores.shape[0]):
        s = k * hop
        sums[s : s + win] += window_scores[k]
        counts[s : s + win] += 1.0
    out = np.divide(sums, counts, out=np.full(n_samples, window_scores[-1]),
                    where=counts > 0)
    return out


def detect_channel(model: DetectorModel, samples: np.ndarray, fs: float) -> BinaryMask:
    """Inter-burst mask of one channel at the processing rate."""
    cfg = model.config
    x = preprocess(samples, fs, cfg)
    fm = extract_features(x, cfg)
    scores = model.window_scores(fm)
    per_sample = _sample_scores(scores, x.size, cfg)
    raw = BinaryMask(cfg.process_rate_hz, (per_sample > 0).astype(np.uint8))
    return postprocess_mask(raw, cfg)


def detect(model: DetectorModel, rec: EegRecording) -> list[BinaryMask]:
    """Per-channel inter-burst masks of a (typically bipolar) recording."""
    masks = []
    for i, label in enumerate(rec.labels):
        try:
            masks.append(detect_channel(model, rec.samples[i], rec.sample_rate_hz))
        except ValueError as exc:
            raise ValueError(f"channel {label!r}: {exc}") from exc
    return masks


def detect_summary(model: DetectorModel, rec: EegRecording) -> tuple[BinaryMask, list[BinaryMask]]:
    """Fused majority-vote mask plus the per-channel masks."""
    masks = detect(model, rec)
    return majority_vote(masks), masks


# ---------------------------------------------------------------------------
# persistence


def model_to_text(model: DetectorModel) -> str:
    cfg = model.config
    pairs = {
        "bands": format_floats(np.array(cfg.bands).ravel()),
        "process_rate_hz": format_float(cfg.process_rate_hz),
        "window_s": format_float(cfg.window_s),
        "overlap_fraction": format_float(cfg.overlap_fraction),
        "min_interburst_s": format_float(cfg.min_interburst_s),
        "min_burst_s": format_float(cfg.min_burst_s),
        "svm_c": format_float(cfg.svm_c),
        "selected_feature_count": str(cfg.selected_feature_count),
        "seed": str(cfg.seed),
        "max_train_windows": str(cfg.max_train_windows),
        "selected_names": " ".join(model.selected_names),
        "selected_indices": " ".join(str(i) for i in model.selected_indices),
        "feature_means": format_floats(model.feature_means),
        "feature_sds": format_floats(model.feature_sds),
        "weights": format_floats(model.weights),
        "bias": format_float(model.bias),
    }
    return dump_kv(DETECTOR_FORMAT, pairs)


def model_from_text(text: str) -> DetectorModel:
    pairs = parse_kv(text, expected_format=DETECTOR_FORMAT)
    flat = parse_floats(require(pairs, "bands"), "bands")
    if flat.size % 2 != 0:
        raise ModelFormatError("bands must hold (low high) pairs")
    cfg = DetectorConfig(
        bands=tuple((flat[i], flat[i + 1]) for i in range(0, flat.size, 2)),
        process_rate_hz=parse_float(require(pairs, "process_rate_hz"), "process_rate_hz"),
        window_s=parse_float(require(pairs, "window_s"), "window_s"),
        overlap_fraction=parse_float(require(pairs, "overlap_fraction"), "overlap_fraction"),
        min_interburst_s=parse_float(require(pairs, "min_interburst_s"), "min_interburst_s"),
        min_burst_s=parse_float(require(pairs, "min_burst_s"), "min_burst_s"),
        svm_c=parse_float(require(pairs, "svm_c"), "svm_c"),
        selected_feature_count=parse_int(require(pairs, "selected_feature_count"),
                                         "selected_feature_count"),
        seed=parse_int(require(pairs, "seed"), "seed"),
        max_train_windows=parse_int(require(pairs, "max_train_windows"), "max_train_windows"),
    )
    try:
        return DetectorModel(
            cfg,
            tuple(parse_ints(require(pairs, "selected_indices"), "selected_indices")),
            parse_floats(require(pairs, "feature_means"), "feature_means"),
            parse_floats(require(pairs, "feature_sds"), "feature_sds"),
            parse_floats(require(pairs, "weights"), "weights"),
            parse_float(require(pairs, "bias"), "bias"),
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(path, model: DetectorModel) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(model_to_text(model))


def load_model(path) -> DetectorModel:
    with open(path, "r", encoding="utf-8") as f:
        return model_from_text(f.read())
