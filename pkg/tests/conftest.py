"""Shared fixtures: a trained detector, corpus-scale feature tables, and
the acceptance scoreboard printed after the run."""

import time
from dataclasses import dataclass

import pytest

from neoburst.detector import DetectorConfig, detect_summary, train_detector
from neoburst.features import IbiFeatureVector, summarize_mask
from neoburst.signal_model import derive_montage
from neoburst.simulate import generate_subject, iter_corpus

# 20 mixed-grade subjects for detector training and for the held-out set
MIXED_COUNTS = (6, 5, 5, 4)
TRAIN_SEED = 1000
HOLDOUT_SEED = 2000


def mixed_subjects(base_seed: int, epoch_s: float = 600.0):
    """Yield 20 subjects, 6/5/5/4 across grades 1-4, seeded per subject."""
    index = 0
    for grade, count in zip((1, 2, 3, 4), MIXED_COUNTS):
        for _ in range(count):
            yield generate_subject(grade, epoch_s, 64.0, base_seed + index,
                                   subject_id=f"m{base_seed}-{index:02d}")
            index += 1


def _channel_examples(subjects):
    for subject in subjects:
        bipolar = derive_montage(subject.recording)
        for i in range(len(bipolar.labels)):
            yield bipolar.samples[i], bipolar.sample_rate_hz, subject.truth_masks[i]


@dataclass(frozen=True)
class TrainedDetector:
    model: object
    train_seconds: float


@pytest.fixture(scope="session")
def trained_detector():
    t0 = time.monotonic()
    model = train_detector(_channel_examples(mixed_subjects(TRAIN_SEED)),
                           DetectorConfig(seed=TRAIN_SEED))
    return TrainedDetector(model, time.monotonic() - t0)


@pytest.fixture(scope="session")
def corpus_features(trained_detector) -> list[IbiFeatureVector]:
    """Detected summary features over the default 54-subject corpus,
    streamed one subject at a time."""
    rows = []
    for subject in iter_corpus():
        bipolar = derive_montage(subject.recording)
        summary, _ = detect_summary(trained_detector.model, bipolar)
        rows.append(summarize_mask(summary, subject.subject_id,
                                   subject.true_grade))
    return rows


# ---------------------------------------------------------------------------
# acceptance scoreboard

_CRITERIA = ("A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9")


@pytest.fixture(scope="session")
def acceptance(request):
    """Records one (ok, detail) entry per criterion for the summary."""
    results = {}
    request.config._acceptance_results = results

    def record(cid: str, ok: bool, detail: str = ""):
        results[cid] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", None)
    if results is None:
        return
    terminalreporter.section("acceptance criteria")
    for cid in _CRITERIA:
        if cid in results:
            ok, detail = results[cid]
            status = "PASS" if ok else "FAIL"
        else:
            status, detail = "NOT RUN", ""
        terminalreporter.write_line(f"{cid} {status}  {detail}".rstrip())
