"""
The full pipeline through the command-line interface
====================================================

Every stage of the system is also a CLI subcommand, with files as the
only contract between stages: simulate a corpus, train the detector,
detect inter-burst intervals, build the feature table, cross-validate
the grader and emit per-grade plot data.  This demo drives the whole
chain in a temporary directory.
"""

import tempfile
from pathlib import Path

from neoburst.cli import main
from neoburst.simulate import read_manifest

root = Path(tempfile.mkdtemp(prefix="neoburst-demo-"))
print(f"working in {root}\n")


def run(*argv):
    print("$ neoburst " + " ".join(argv))
    code = main(list(argv))
    assert code == 0, f"exit code {code}"
    print()


# 12 subjects, three per grade, 10-minute epochs to keep the demo quick
corpus = root / "corpus"
run("simulate", "--n", "12", "--counts", "3,3,3,3", "--epoch-s", "600",
    "--seed", "3", "--out-dir", str(corpus))

run("train-detector", "--corpus", str(corpus), "--seed", "3",
    "--max-train-windows", "2000", "--out", str(root / "det.model"))

masks = root / "masks"
for row in read_manifest(corpus / "manifest.csv"):
    run("detect", "--model", str(root / "det.model"),
        "--in", str(corpus / row["file"]), "--out-dir", str(masks))

summary_masks = sorted(str(p) for p in masks.glob("*_summary.csv"))
run("features", "--masks", *summary_masks,
    "--manifest", str(corpus / "manifest.csv"),
    "--out", str(root / "features.csv"))
print(Path(root / "features.csv").read_text(), end="\n")

# Leave-one-subject-out: train on 11, grade the held-out subject, rotate.
run("crossval", "--features", str(root / "features.csv"), "--theta", "0",
    "--max-epochs", "6000", "--seed", "1", "--out", str(root / "cv"))
print((root / "cv" / "report.txt").read_text())
print((root / "cv" / "confusion.csv").read_text())

# Numbers for a distribution plot: per grade and feature, the values
# plus quartiles and the 95th centile; max-IBI also in natural log.
run("plotdata", "--features", str(root / "features.csv"),
    "--out-dir", str(root / "plot"))
print((root / "plot" / "summary.csv").read_text())
