"""Command-line front end for the burst-suppression grading pipeline.

Each subcommand is one pipeline stage; files are the only contract
between stages.  Every command writes a JSON run manifest alongside its
outputs.  Exit codes: 0 success, 2 input or validation error, 3 model
compatibility error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .detector import (DetectorConfig, detect_summary, load_model, save_model,
                       train_detector)
from .edf import read_edf, read_recording_csv
from .features import (feature_table_from_csv, feature_table_to_csv,
                       log_feature, summarize_mask)
from .grader import (GRADER_FEATURE_NAMES, load_mlp, loso_crossval, predict,
                     rule_grade, save_mlp, train_mlp)
from .kvdoc import ModelFormatError, parse_kv
from .signal_model import (ELECTRODE_LABELS, MontageSpec, derive_montage,
                           mask_from_csv_text, mask_to_csv_text)
from .simulate import export_corpus, iter_corpus, read_manifest

CONFIG_FORMAT = "neoburst-config/1"


# ---------------------------------------------------------------------------
# run manifests


@dataclass(frozen=True)
class RunManifest:
    """Record of one command invocation, written next to its outputs."""

    command: str
    config: dict
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    seed: int | None
    tool_version: str
    timestamp: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(out, command: str, config: dict, inputs, outputs,
                    seed: int | None) -> Path:
    out = Path(out)
    path = out / "run_manifest.json" if out.is_dir() \
        else out.parent / (out.name + ".manifest.json")
    manifest = RunManifest(
        command=command,
        config={k: _json_safe(v) for k, v in config.items()},
        inputs=tuple(str(p) for p in inputs),
        outputs=tuple(str(p) for p in outputs),
        seed=seed,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    path.write_text(manifest.to_json(), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# option resolution: command line > config file > environment > default


def _parse_counts(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in str(text).split(",")]
    try:
        counts = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"counts must be comma-separated integers, got {text!r}")
    if len(counts) != 4 or any(c < 0 for c in counts):
        raise ValueError("counts must list four non-negative integers")
    return counts


def _parse_grader_features(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in str(text).split(",") if s.strip())
    if not names:
        raise ValueError("feature list is empty")
    for name in names:
        if name not in GRADER_FEATURE_NAMES:
            raise ValueError(f"unknown grader feature {name!r}; "
                             f"choose from {', '.join(GRADER_FEATURE_NAMES)}")
    return names


def _resolve_options(args, table: dict) -> dict:
    """Fill argparse values (None-defaulted) from the config file, then
    from the per-command defaults in `table` (dest -> (cast, default)).
    Config keys that the invoked command does not use are ignored, so one
    file can configure a whole pipeline."""
    config = {}
    if getattr(args, "config", None) is not None:
        text = Path(args.config).read_text(encoding="utf-8")
        config = parse_kv(text, CONFIG_FORMAT)
    resolved = {}
    for dest, (cast, default) in table.items():
        value = getattr(args, dest)
        if value is None and dest in config:
            try:
                value = cast(config[dest])
            except ValueError as exc:
                raise ValueError(f"config key {dest!r}: {exc}") from None
        resolved[dest] = default if value is None else value
    return resolved


def _final_seed(value, fallback: int) -> int:
    """Seed precedence: explicit value, then NEOBURST_SEED, then fallback."""
    if value is not None:
        return value
    env = os.environ.get("NEOBURST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"NEOBURST_SEED must be an integer, got {env!r}")
    return fallback


# ---------------------------------------------------------------------------
# shared loading helpers


def _read_recording(path):
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".edf":
        return read_edf(path)
    if suffix == ".csv":
        return read_recording_csv(path.read_text(encoding="utf-8"))
    raise ValueError(f"{path}: unknown recording format {suffix!r} "
                     "(expected .edf or .csv)")


def _to_bipolar(rec):
    """Referential recordings get the standard montage; recordings whose
    labels are already bipolar pairs pass through."""
    if set(ELECTRODE_LABELS) <= set(rec.labels):
        return derive_montage(rec)
    if all("-" in label for label in rec.labels):
        return rec
    raise ValueError(
        "recording is neither referential (9 standard electrodes) nor "
        f"bipolar (pair labels); got {', '.join(rec.labels)}")


def _load_feature_table(path):
    rows = feature_table_from_csv(Path(path).read_text(encoding="utf-8"))
    if not rows:
        raise ValueError(f"{path}: feature table has no rows")
    return rows


def _require_grades(rows, path):
    for fv in rows:
        if fv.true_grade is None:
            raise ValueError(f"{path}: subject {fv.subject_id!r} has no grade")


# ---------------------------------------------------------------------------
# commands


_SIMULATE_OPTS = {
    "n": (int, 54),
    "counts": (_parse_counts, (22, 14, 12, 6)),
    "epoch_s": (float, 3600.0),
    "fs": (float, 64.0),
    "format": (str, "csv"),
    "seed": (int, None),
}


def cmd_simulate(args) -> int:
    opts = _resolve_options(args, _SIMULATE_OPTS)
    seed = _final_seed(opts["seed"], 0)
    out = Path(args.out_dir)
    subjects = iter_corpus(opts["n"], opts["counts"], opts["epoch_s"],
                           opts["fs"], seed)
    manifest = export_corpus(out, subjects, opts["format"])
    outputs = [manifest]
    opts["seed"] = seed
    _write_manifest(out, "simulate", opts, [], outputs, seed)
    print(f"wrote {opts['n']} recordings to {out}")
    return 0


_TRAIN_DETECTOR_OPTS = {
    "seed": (int, None),
    "svm_c": (float, 1.0),
    "max_train_windows": (int, 12000),
}


def _corpus_examples(corpus_dir: Path, rows):
    labels = MontageSpec().labels
    for row in rows:
        rec = _to_bipolar(_read_recording(corpus_dir / row["file"]))
        for i, label in enumerate(labels):
            mask_path = corpus_dir / f"{row['subject_id']}_truth_{label}.csv"
            mask = mask_from_csv_text(mask_path.read_text(encoding="utf-8"))
            yield rec.samples[i], rec.sample_rate_hz, mask


def cmd_train_detector(args) -> int:
    opts = _resolve_options(args, _TRAIN_DETECTOR_OPTS)
    seed = _final_seed(opts["seed"], 0)
    corpus_dir = Path(args.corpus)
    rows = read_manifest(corpus_dir / "manifest.csv")
    cfg = DetectorConfig(seed=seed, svm_c=opts["svm_c"],
                         max_train_windows=opts["max_train_windows"])
    model = train_detector(_corpus_examples(corpus_dir, rows), cfg)
    out = Path(args.out)
    save_model(out, model)
    opts["seed"] = seed
    _write_manifest(out, "train-detector", opts, [corpus_dir / "manifest.csv"],
                    [out], seed)
    print(f"trained detector on {len(rows)} recordings -> {out}")
    return 0


def cmd_detect(args) -> int:
    model = load_model(args.model)
    rec = _to_bipolar(_read_recording(args.input))
    summary, channel_masks = detect_summary(model, rec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    outputs = []
    for label, mask in zip(rec.labels, channel_masks):
        path = out / f"{stem}_{label}.csv"
        path.write_text(mask_to_csv_text(mask), encoding="utf-8")
        outputs.append(path)
    summary_path = out / f"{stem}_summary.csv"
    summary_path.write_text(mask_to_csv_text(summary), encoding="utf-8")
    outputs.append(summary_path)
    _write_manifest(out, "detect", {"model": str(args.model)},
                    [args.input], outputs, None)
    print(f"wrote {len(outputs)} masks to {out}")
    return 0


def cmd_features(args) -> int:
    grades = {}
    inputs = list(args.masks)
    if args.manifest is not None:
        grades = {row["subject_id"]: row["grade"]
                  for row in read_manifest(args.manifest)}
        inputs.append(args.manifest)
    rows = []
    for mask_path in args.masks:
        mask_path = Path(mask_path)
        mask = mask_from_csv_text(mask_path.read_text(encoding="utf-8"))
        sid = mask_path.stem
        if sid.endswith("_summary"):
            sid = sid[:-len("_summary")]
        rows.append(summarize_mask(mask, sid, grades.get(sid),
                                   plain_max=args.plain_max))
    out = Path(args.out)
    out.write_text(feature_table_to_csv(rows), encoding="utf-8")
    _write_manifest(out, "features", {"plain_max": args.plain_max},
                    inputs, [out], None)
    print(f"wrote {len(rows)} feature rows -> {out}")
    return 0


_GRADER_OPTS = {
    "theta": (float, 0.1),
    "seed": (int, None),
    "max_epochs": (int, 5000),
    "learning_rate": (float, 0.1),
    "features_used": (_parse_grader_features, GRADER_FEATURE_NAMES),
}


def cmd_train_grader(args) -> int:
    opts = _resolve_options(args, _GRADER_OPTS)
    seed = _final_seed(opts["seed"], 0)
    rows = _load_feature_table(args.features)
    _require_grades(rows, args.features)
    names = opts["features_used"]
    data = [(np.array([getattr(fv, n) for n in names]), fv.true_grade)
            for fv in rows]
    model = train_mlp(data, theta=opts["theta"], seed=seed,
                      max_epochs=opts["max_epochs"],
                      learning_rate=opts["learning_rate"],
                      feature_names=names)
    out = Path(args.out)
    save_mlp(out, model)
    opts["seed"] = seed
    _write_manifest(out, "train-grader", opts, [args.features], [out], seed)
    print(f"trained grader on {len(rows)} subjects "
          f"({model.epochs_run} epochs) -> {out}")
    return 0


def cmd_grade(args) -> int:
    rows = _load_feature_table(args.features)
    if args.rule_oracle:
        if args.grader is not None:
            raise ValueError("--rule-oracle does not take a grader model")
        graded = [(fv.subject_id, rule_grade(fv)) for fv in rows]
        config = {"rule_oracle": True}
        inputs = [args.features]
    else:
        if args.grader is None:
            raise ValueError("either --grader MODEL or --rule-oracle is required")
        model = load_mlp(args.grader)
        graded = []
        for fv in rows:
            x = np.array([getattr(fv, n) for n in model.feature_names])
            graded.append((fv.subject_id, predict(model, x)))
        config = {"rule_oracle": False, "grader": str(args.grader)}
        inputs = [args.features, args.grader]
    out = Path(args.out)
    lines = ["subject_id,grade"] + [f"{sid},{g}" for sid, g in graded]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "grade", config, inputs, [out], None)
    print(f"graded {len(graded)} subjects -> {out}")
    return 0


def cmd_crossval(args) -> int:
    opts = _resolve_options(args, _GRADER_OPTS)
    seed = _final_seed(opts["seed"], 0)
    rows = _load_feature_table(args.features)
    accuracy, cm, predictions = loso_crossval(
        rows, theta=opts["theta"], seed=seed, max_epochs=opts["max_epochs"],
        learning_rate=opts["learning_rate"],
        feature_names=opts["features_used"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = (f"subjects = {len(rows)}\n"
              f"correct = {cm.correct}\n"
              f"accuracy = {accuracy!r}\n")
    (out / "report.txt").write_text(report, encoding="utf-8")
    (out / "confusion.csv").write_text(cm.to_csv_text(), encoding="utf-8")
    pred_lines = ["subject_id,actual,predicted"]
    pred_lines += [f"{sid},{a},{p}" for sid, a, p in predictions]
    (out / "predictions.csv").write_text("\n".join(pred_lines) + "\n",
                                         encoding="utf-8")
    opts["seed"] = seed
    _write_manifest(out, "crossval", opts, [args.features],
                    [out / "report.txt", out / "confusion.csv",
                     out / "predictions.csv"], seed)
    print(f"accuracy {accuracy:.4f} ({cm.correct}/{cm.total})")
    return 0


def _percentile_line(grade: int, feature: str, values: np.ndarray) -> str:
    q1, med, q3, p95 = np.percentile(values, [25.0, 50.0, 75.0, 95.0])
    return (f"{grade},{feature},{values.size},"
            f"{float(q1)!r},{float(med)!r},{float(q3)!r},{float(p95)!r}")


def cmd_plotdata(args) -> int:
    rows = _load_feature_table(args.features)
    _require_grades(rows, args.features)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    summary_lines = ["grade,feature,n,q1,median,q3,p95"]
    present = sorted({fv.true_grade for fv in rows})
    for grade in present:
        group = [fv for fv in rows if fv.true_grade == grade]
        pct = np.array([fv.ibi_percent for fv in group])
        mx = np.array([fv.max_ibi_s for fv in group])

        path = out / f"grade{grade}_ibi_percent.csv"
        lines = ["subject_id,value"]
        lines += [f"{fv.subject_id},{fv.ibi_percent!r}" for fv in group]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append(path)

        # max-IBI additionally in natural log for log-scale plotting;
        # zero durations leave the log cell empty
        path = out / f"grade{grade}_max_ibi_s.csv"
        lines = ["subject_id,value,ln_value"]
        for fv in group:
            ln = repr(log_feature(fv.max_ibi_s)) if fv.max_ibi_s > 0 else ""
            lines.append(f"{fv.subject_id},{fv.max_ibi_s!r},{ln}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append(path)

        summary_lines.append(_percentile_line(grade, "ibi_percent", pct))
        summary_lines.append(_percentile_line(grade, "max_ibi_s", mx))
    summary_path = out / "summary.csv"
    summary_path.write_text("\n".join(summary_lines) + "\n", encoding="utf-8")
    outputs.append(summary_path)
    _write_manifest(out, "plotdata", {}, [args.features], outputs, None)
    print(f"wrote plot data for grades {present} to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neoburst",
        description="Inter-burst interval detection and HIE grading for "
                    "neonatal EEG.")
    parser.add_argument("--version", action="version",
                        version=f"neoburst {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="key-value config file (format neoburst-config/1)")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (falls back to NEOBURST_SEED)")

    p = sub.add_parser("simulate", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--counts", type=_parse_counts, default=None,
                   metavar="G1,G2,G3,G4")
    p.add_argument("--epoch-s", type=float, default=None)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--format", choices=("csv", "edf"), default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train-detector", help="fit the inter-burst detector")
    common(p)
    p.add_argument("--corpus", required=True, help="directory with manifest.csv")
    p.add_argument("--svm-c", type=float, default=None)
    p.add_argument("--max-train-windows", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("detect", help="detect inter-burst intervals")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True,
                   help="recording (.csv or .edf)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("features", help="summarize masks into IBI features")
    p.add_argument("--masks", nargs="+", required=True,
                   help="summary mask CSV files")
    p.add_argument("--manifest", default=None,
                   help="corpus manifest to attach true grades")
    p.add_argument("--plain-max", action="store_true",
                   help="report the plain maximum instead of max minus min")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    def grader_opts(p):
        p.add_argument("--theta", type=float, default=None,
                       help="MSE-change stopping threshold")
        p.add_argument("--max-epochs", type=int, default=None)
        p.add_argument("--learning-rate", type=float, default=None)
        p.add_argument("--features-used", type=_parse_grader_features,
                       default=None, metavar="NAME[,NAME]")

    p = sub.add_parser("train-grader", help="train the MLP grader")
    common(p)
    grader_opts(p)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_grader)

    p = sub.add_parser("grade", help="grade subjects from IBI features")
    p.add_argument("--grader", default=None, help="trained MLP model file")
    p.add_argument("--rule-oracle", action="store_true",
                   help="use the fixed threshold rules instead of a model")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("crossval", help="leave-one-subject-out evaluation")
    common(p)
    grader_opts(p)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("plotdata", help="per-grade feature distributions")
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_plotdata)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
