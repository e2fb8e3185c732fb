"""Severity grading (1..4) from the two epoch summary features.

Two graders are provided: a small trainable network (one hidden layer of
14 logistic units, 4 logistic outputs, full-batch gradient descent on
mean squared error against one-hot targets) and a fixed threshold rule
that encodes the clinical duration criteria directly.  A
leave-one-subject-out harness evaluates the network on feature tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from neoburst.features import IbiFeatureVector
from neoburst.kvdoc import (
    ModelFormatError,
    dump_kv,
    format_float,
    format_floats,
    parse_float,
    parse_floats,
    parse_int,
    parse_kv,
    require,
)

MLP_FORMAT = "neoburst-mlp/1"

GRADES = (1, 2, 3, 4)
HIDDEN_UNITS = 14
OUTPUT_UNITS = 4

#: Feature-table columns the grader can consume, in canonical order.
GRADER_FEATURE_NAMES = ("ibi_percent", "max_ibi_s")


@dataclass(frozen=True)
class RuleThresholds:
    """Decision thresholds of the rule grader.

    The two duration cuts mirror the clinical grade table (10 s / 60 s);
    the percentage cuts are tunable design values.
    """

    severe_max_ibi_s: float = 60.0
    moderate_max_ibi_s: float = 10.0
    severe_ibi_percent: float = 90.0
    mild_ibi_percent: float = 15.0

    def __post_init__(self):
        if not 0 < self.moderate_max_ibi_s < self.severe_max_ibi_s:
            raise ValueError("need 0 < moderate_max_ibi_s < severe_max_ibi_s")
        if not 0 < self.mild_ibi_percent < self.severe_ibi_percent <= 100:
            raise ValueError("need 0 < mild_ibi_percent < severe_ibi_percent <= 100")


def rule_grade(fv: IbiFeatureVector, thresholds: RuleThresholds | None = None) -> int:
    """Threshold grader, evaluated in fixed severity-first order."""
    t = thresholds or RuleThresholds()
    if fv.max_ibi_s >= t.severe_max_ibi_s or fv.ibi_percent >= t.severe_ibi_percent:
        return 4
    if fv.max_ibi_s >= t.moderate_max_ibi_s:
        return 3
    if fv.ibi_percent >= t.mild_ibi_percent:
        return 2
    return 1


@dataclass(frozen=True)
class MlpModel:
    """Trained network with its input normalization and training meta."""

    feature_names: tuple[str, ...]
    feature_means: np.ndarray
    feature_sds: np.ndarray
    w_hidden: np.ndarray  # (14, n_features)
    b_hidden: np.ndarray  # (14,)
    w_out: np.ndarray  # (4, 14)
    b_out: np.ndarray  # (4,)
    theta: float
    seed: int
    epochs_run: int

    def __post_init__(self):
        for name in ("feature_means", "feature_sds", "w_hidden", "b_hidden",
                     "w_out", "b_out"):
            object.__setattr__(self, name, np.asarray(getattr(self, name),
                                                      dtype=np.float64))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        d = len(self.feature_names)
        if self.w_hidden.shape != (HIDDEN_UNITS, d):
            raise ValueError(f"w_hidden must be ({HIDDEN_UNITS}, {d})")
        if self.b_hidden.shape != (HIDDEN_UNITS,):
            raise ValueError(f"b_hidden must be ({HIDDEN_UNITS},)")
        if self.w_out.shape != (OUTPUT_UNITS, HIDDEN_UNITS):
            raise ValueError(f"w_out must be ({OUTPUT_UNITS}, {HIDDEN_UNITS})")
        if self.b_out.shape != (OUTPUT_UNITS,):
            raise ValueError(f"b_out must be ({OUTPUT_UNITS},)")
        if self.feature_means.shape != (d,) or self.feature_sds.shape != (d,):
            raise ValueError("normalization stats must match feature count")
        if np.any(self.feature_sds <= 0):
            raise ValueError("feature_sds must be positive")

    def activations(self, features: np.ndarray) -> np.ndarray:
        """Output-layer activations for (n, d) or (d,) inputs."""
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != len(self.feature_names):
            raise ValueError(
                f"model expects {len(self.feature_names)} features, got {x.shape[1]}"
            )
        z = (x - self.feature_means) / self.feature_sds
        hidden = expit(z @ self.w_hidden.T + self.b_hidden)
        return expit(hidden @ self.w_out.T + self.b_out)


def predict(model: MlpModel, features) -> int:
    """Grade of one feature vector: argmax output, ties to the lowest
    grade."""
    out = model.activations(features)
    if out.shape[0] != 1:
        raise ValueError("predict takes a single feature vector")
    return int(np.argmax(out[0])) + 1


def predict_many(model: MlpModel, features) -> np.ndarray:
    out = model.activations(features)
    return np.argmax(out, axis=1) + 1


def _forward(xz, w1, b1, w2, b2, targets):
    hidden = expit(xz @ w1.T + b1)
    out = expit(hidden @ w2.T + b2)
    mse = float(np.mean((out - targets) ** 2))
    return hidden, out, mse


def train_mlp(data, theta: float = 0.1, seed: int = 0, max_epochs: int = 5000,
              learning_rate: float = 0.1,
              feature_names: tuple[str, ...] = GRADER_FEATURE_NAMES) -> MlpModel:
    """Fit the network by full-batch gradient descent.

    data: iterable of (feature_vector, grade).  Inputs are z-scored with
    the training statistics; targets are one-hot over the four grades.
    Weights and biases start from seeded standard normal draws.  After
    each epoch training stops once the absolute change of the average
    squared error is at or below theta, or at max_epochs.  A step that
    would raise the error is retried with a halved rate (at most 20
    halvings, rate stays reduced); if even the smallest step raises it,
    the step is abandoned and training stops.  The error is therefore
    non-increasing over epochs.
    """
    pairs = list(data)
    if not pairs:
        raise ValueError("training data is empty")
    x = np.array([np.asarray(f, dtype=np.float64).ravel() for f, _ in pairs])
    grades = np.array([g for _, g in pairs], dtype=np.int64)
    if np.any((grades < 1) | (grades > 4)):
        raise ValueError("grades must be in 1..4")
    if len(np.unique(grades)) < 2:
        raise ValueError("training needs at least two distinct grades")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    d = x.shape[1]
    if len(feature_names) != d:
        raise ValueError(f"{len(feature_names)} names for {d} features")

    means = x.mean(axis=0)
    sds = x.std(axis=0)
    if np.any(sds <= 0):
        raise ValueError("a training feature is constant; cannot normalize")
    xz = (x - means) / sds
    targets = np.zeros((x.shape[0], OUTPUT_UNITS))
    targets[np.arange(x.shape[0]), grades - 1] = 1.0

    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((HIDDEN_UNITS, d))
    b1 = rng.standard_normal(HIDDEN_UNITS)
    w2 = rng.standard_normal((OUTPUT_UNITS, HIDDEN_UNITS))
    b2 = rng.standard_normal(OUTPUT_UNITS)

    n = x.shape[0]
    lr = learning_rate
    _, _, mse = _forward(xz, w1, b1, w2, b2, targets)
    epochs_run = 0
    for _ in range(max_epochs):
        hidden, out, _ = _forward(xz, w1, b1, w2, b2, targets)
        d_out = 2.0 * (out - targets) / (n * OUTPUT_UNITS) * out * (1.0 - out)
        g_w2 = d_out.T @ hidden
        g_b2 = d_out.sum(axis=0)
        d_hidden = (d_out @ w2) * hidden * (1.0 - hidden)
        g_w1 = d_hidden.T @ xz
        g_b1 = d_hidden.sum(axis=0)

        stepped = False
        for _ in range(21):  # initial rate plus up to 20 halvings
            cand = (w1 - lr * g_w1, b1 - lr * g_b1, w2 - lr * g_w2, b2 - lr * g_b2)
            _, _, cand_mse = _forward(xz, *cand, targets)
            if cand_mse <= mse:
                stepped = True
                break
            lr /= 2.0
        if not stepped:
            break
        w1, b1, w2, b2 = cand
        epochs_run += 1
        delta = abs(mse - cand_mse)
        mse = cand_mse
        if delta <= theta:
            break

    return MlpModel(tuple(feature_names), means, sds, w1, b1, w2, b2,
                    theta, seed, epochs_run)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[actual-1][predicted-1] over the four grades."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", c)
        if c.shape != (4, 4):
            raise ValueError("confusion matrix must be 4x4")
        if np.any(c < 0):
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    def to_csv_text(self) -> str:
        lines = ["actual,pred_1,pred_2,pred_3,pred_4"]
        for g in GRADES:
            row = ",".join(str(int(v)) for v in self.counts[g - 1])
            lines.append(f"{g},{row}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text: str) -> "ConfusionMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) != 5 or lines[0].strip() != "actual,pred_1,pred_2,pred_3,pred_4":
            raise ValueError("confusion CSV must be a 4x4 table with its header")
        counts = np.zeros((4, 4), dtype=np.int64)
        for g, line in zip(GRADES, lines[1:]):
            parts = line.split(",")
            if len(parts) != 5 or int(parts[0]) != g:
                raise ValueError(f"confusion CSV row for grade {g} malformed")
            counts[g - 1] = [int(p) for p in parts[1:]]
        return cls(counts)


def confusion_and_accuracy(pairs) -> tuple[ConfusionMatrix, float]:
    """Confusion counts and trace accuracy from (actual, predicted)
    grade pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no (actual, predicted) pairs given")
    counts = np.zeros((4, 4), dtype=np.int64)
    for actual, predicted in pairs:
        if actual not in GRADES or predicted not in GRADES:
            raise ValueError(f"grades must be in 1..4, got ({actual}, {predicted})")
        counts[actual - 1, predicted - 1] += 1
    cm = ConfusionMatrix(counts)
    return cm, cm.accuracy


# ---------------------------------------------------------------------------
# cross-validation


def _feature_matrix(dataset: list[IbiFeatureVector],
                    feature_names: tuple[str, ...]) -> np.ndarray:
    cols = []
    for name in feature_names:
        if name not in GRADER_FEATURE_NAMES:
            raise ValueError(f"unknown grader feature {name!r}")
        cols.append([getattr(fv, name) for fv in dataset])
    return np.array(cols, dtype=np.float64).T


def loso_crossval(dataset: list[IbiFeatureVector], theta: float = 0.1,
                  seed: int = 0, max_epochs: int = 5000,
                  learning_rate: float = 0.1,
                  feature_names: tuple[str, ...] = GRADER_FEATURE_NAMES):
    """Leave-one-subject-out evaluation of the network grader.

    Each fold trains on all subjects but one (fold seed = seed + held-out
    index) and predicts the holdout.  Returns (accuracy, ConfusionMatrix,
    predictions) with predictions as (subject_id, actual, predicted).
    """
    if len(dataset) < 3:
        raise ValueError(f"need at least 3 subjects, got {len(dataset)}")
    grades = [fv.true_grade for fv in dataset]
    if any(g is None for g in grades):
        raise ValueError("every subject needs a true_grade")
    if len(set(grades)) < 2:
        raise ValueError("need at least 2 distinct grades")

    x = _feature_matrix(dataset, feature_names)
    predictions = []
    for i, fv in enumerate(dataset):
        train_idx = [j for j in range(len(dataset)) if j != i]
        model = train_mlp(
            [(x[j], grades[j]) for j in train_idx],
            theta=theta, seed=seed + i, max_epochs=max_epochs,
            learning_rate=learning_rate, feature_names=feature_names,
        )
        predictions.append((fv.subject_id, grades[i], predict(model, x[i])))
    cm, accuracy = confusion_and_accuracy([(a, p) for _, a, p in predictions])
    return accuracy, cm, predictions


# ---------------------------------------------------------------------------
# persistence


def mlp_to_text(model: MlpModel) -> str:
    pairs = {
        "feature_names": " ".join(model.feature_names),
        "layer_sizes": f"{len(model.feature_names)} {HIDDEN_UNITS} {OUTPUT_UNITS}",
        "feature_means": format_floats(model.feature_means),
        "feature_sds": format_floats(model.feature_sds),
        "w_hidden": format_floats(model.w_hidden),
        "b_hidden": format_floats(model.b_hidden),
        "w_out": format_floats(model.w_out),
        "b_out": format_floats(model.b_out),
        "theta": format_float(model.theta),
        "seed": str(model.seed),
        "epochs_run": str(model.epochs_run),
    }
    return dump_kv(MLP_FORMAT, pairs)


def mlp_from_text(text: str) -> MlpModel:
    pairs = parse_kv(text, expected_format=MLP_FORMAT)
    names = tuple(require(pairs, "feature_names").split())
    d = len(names)
    sizes = require(pairs, "layer_sizes").split()
    if [int(s) for s in sizes] != [d, HIDDEN_UNITS, OUTPUT_UNITS]:
        raise ModelFormatError(f"layer_sizes must be {d} {HIDDEN_UNITS} {OUTPUT_UNITS}")
    try:
        return MlpModel(
            names,
            parse_floats(require(pairs, "feature_means"), "feature_means"),
            parse_floats(require(pairs, "feature_sds"), "feature_sds"),
            parse_floats(require(pairs, "w_hidden"), "w_hidden").reshape(HIDDEN_UNITS, d),
            parse_floats(require(pairs, "b_hidden"), "b_hidden"),
            parse_floats(require(pairs, "w_out"), "w_out").reshape(OUTPUT_UNITS, HIDDEN_UNITS),
            parse_floats(require(pairs, "b_out"), "b_out"),
            parse_float(require(pairs, "theta"), "theta"),
            parse_int(require(pairs, "seed"), "seed"),
            parse_int(require(pairs, "epochs_run"), "epochs_run"),
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_mlp(path, model: MlpModel) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(mlp_to_text(model))


def load_mlp(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as f:
        return mlp_from_text(f.read())
