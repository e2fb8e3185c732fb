"""
Grading HIE severity from the two IBI features
==============================================

Hypoxic-ischemic encephalopathy is graded 1 (mild) to 4 (severe,
inactive background).  Clinically the grades follow duration rules:
roughly, inter-burst intervals under 10 s are mild, 10-60 s moderate to
major, and over 60 s severe.  This demo trains the small 2-14-4 network
on feature vectors drawn inside those rule regions and compares its
decisions with the explicit threshold rules.
"""

import numpy as np

from neoburst.features import IbiFeatureVector
from neoburst.grader import (confusion_and_accuracy, predict_many, rule_grade,
                             train_mlp)

# ---------------------------------------------------------------------------
# Sample (IBI%, max-IBI) pairs well inside each grade's rule region so
# the labels are unambiguous.

boxes = {1: ((0.0, 12.0), (0.0, 8.0)),
         2: ((30.0, 70.0), (0.0, 8.0)),
         3: ((0.0, 70.0), (20.0, 48.0)),
         4: ((20.0, 100.0), (75.0, 150.0))}

rng = np.random.default_rng(7)
rows = []
for grade, ((pct_lo, pct_hi), (mx_lo, mx_hi)) in boxes.items():
    for k in range(12):
        fv = IbiFeatureVector(f"g{grade}-{k:02d}", rng.uniform(pct_lo, pct_hi),
                              rng.uniform(mx_lo, mx_hi))
        rows.append(IbiFeatureVector(fv.subject_id, fv.ibi_percent,
                                     fv.max_ibi_s, rule_grade(fv)))

print(f"dataset: {len(rows)} subjects, 12 per grade")

# ---------------------------------------------------------------------------
# Train the network.  theta is the stopping threshold on the change of
# the average squared error per epoch; theta=0 trains until max_epochs.

data = [(np.array([fv.ibi_percent, fv.max_ibi_s]), fv.true_grade)
        for fv in rows]
model = train_mlp(data, theta=0.0, seed=1, max_epochs=8000)
print(f"trained for {model.epochs_run} epochs")

# ---------------------------------------------------------------------------
# Compare network output with the threshold rules on the training set
# and on a fresh sample from the same regions.

x = np.array([[fv.ibi_percent, fv.max_ibi_s] for fv in rows])
train_pred = predict_many(model, x)
train_truth = np.array([fv.true_grade for fv in rows])
print(f"training agreement with rules: "
      f"{np.mean(train_pred == train_truth):.1%}")

fresh = []
for grade, ((pct_lo, pct_hi), (mx_lo, mx_hi)) in boxes.items():
    for k in range(25):
        fv = IbiFeatureVector("x", rng.uniform(pct_lo, pct_hi),
                              rng.uniform(mx_lo, mx_hi))
        fresh.append((fv, rule_grade(fv)))
fresh_x = np.array([[fv.ibi_percent, fv.max_ibi_s] for fv, _ in fresh])
fresh_truth = np.array([g for _, g in fresh])
fresh_pred = predict_many(model, fresh_x)

cm, accuracy = confusion_and_accuracy(list(zip(fresh_truth, fresh_pred)))
print(f"fresh-sample agreement: {accuracy:.1%}")
print("confusion (rows = rule grade, columns = network grade):")
print(cm.to_csv_text())

# A borderline case: 95% IBI activity with 80 s intervals is the severe,
# near-inactive pattern.
severe = IbiFeatureVector("demo", 95.0, 80.0)
print(f"(95%, 80 s) -> rule grade {rule_grade(severe)}, "
      f"network grade {predict_many(model, np.array([[95.0, 80.0]]))[0]}")
