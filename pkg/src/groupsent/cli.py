"""Command line entry point: ``groupsent <subcommand> ...``.

Options may also come from ``--config FILE`` (``key = value`` lines, or a
previous ``report.json``); flags given on the command line win.  Failures
exit with status 1 and print one JSON line ``{"error": ..., "message": ...}``
to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import classifier, features, orientation
from .evaluation import CHANCE, confusion_matrix
from .geometry import AXES, load_annotations
from .imaging import load_ppm
from .matching import build_person_records
from .pipeline import (
    FEATURE_SETS,
    INTENSITY_MODES,
    PipelineError,
    RunConfig,
    SceneFeaturizer,
    axis_labels,
    check_inputs,
    cluster_image,
    feature_names,
    load_models,
    read_config_file,
    run_experiment,
    train_emotion_model,
)
from .synthetic import make_corpus

S = argparse.SUPPRESS


def _common(p):
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=S, help="key=value file or a report.json to echo")


def _svm(p):
    p.add_argument("--svm-lambda", type=float, default=S)
    p.add_argument("--svm-epochs", type=int, default=S)
    p.add_argument("--svm-eta0", type=float, default=S)


def _featurize(p):
    p.add_argument("--feature-set", choices=FEATURE_SETS, default=S)
    p.add_argument("--emotion-model", default=S)
    p.add_argument("--face-data", default=S)
    p.add_argument("--orientation-model", default=S)
    p.add_argument("--poselet-mode", choices=("count", "score"), default=S)
    p.add_argument("--poselet-threshold", type=float, default=S)
    p.add_argument("--raw", dest="normalize", action="store_false", default=S,
                   help="skip histogram / bbox normalization")
    p.add_argument("--iou-threshold", type=float, default=S)
    p.add_argument("--k-face", type=float, default=S)
    p.add_argument("--group-lambda", type=float, default=S)


def _labels(p):
    p.add_argument("--axis", dest="label_axis", choices=AXES, default=S)
    p.add_argument("--intensity", dest="intensity_mode", choices=INTENSITY_MODES, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupsent", description="Group sentiment pipeline")
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="match faces and torsos to person boxes")
    _common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iou-threshold", type=float, default=S)

    p = sub.add_parser("features", help="write a scene feature CSV")
    _common(p)
    _featurize(p)
    _svm(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a scene, emotion or orientation model")
    _common(p)
    _svm(p)
    _labels(p)
    p.add_argument("--task", choices=("scene", "emotion", "orientation"), default="scene")
    p.add_argument("--features", help="feature CSV (scene task)")
    p.add_argument("--annotations", help="annotation file (scene / orientation task)")
    p.add_argument("--face-data", default=S, help="face list (emotion task)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="predict labels for a feature CSV")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score predictions against annotation labels")
    _common(p)
    _labels(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("cluster", help="group people with orientation-weighted k-means")
    _common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--orientation-model", default=S)
    p.add_argument("--iou-threshold", type=float, default=S)
    p.add_argument("--k-face", type=float, default=S)
    p.add_argument("--group-lambda", type=float, default=S)

    p = sub.add_parser("experiment", help="featurize, split, train and evaluate")
    _common(p)
    _featurize(p)
    _svm(p)
    _labels(p)
    p.add_argument("--annotations", default=S)
    p.add_argument("--out-dir", default=S)
    p.add_argument("--test-fraction", type=float, default=S)

    p = sub.add_parser("make-corpus", help="regenerate the synthetic mini-corpus")
    _common(p)
    p.add_argument("--out", required=True)
    return parser


def resolve_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    fields = set(RunConfig.__dataclass_fields__)
    for k, v in vars(args).items():
        if k in fields and v is not None:
            values[k] = v
    return RunConfig.from_mapping(values)


def _write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def cmd_match(args, cfg):
    rows = []
    for ann in load_annotations(args.annotations):
        records = build_person_records(ann, cfg.iou_threshold)
        rows.append({"image": ann.image_path, "records": [r.to_dict() for r in records]})
    _write_jsonl(args.out, rows)


def cmd_features(args, cfg):
    cfg.annotations = args.annotations
    annotations = check_inputs(cfg)
    emotion_model, orientation_model = load_models(cfg)
    X = SceneFeaturizer(cfg, emotion_model, orientation_model).transform(annotations)
    features.write_feature_csv(args.out, [a.image_path for a in annotations], X,
                               feature_names(cfg.feature_set))


def cmd_train(args, cfg):
    params = dict(lam=cfg.svm_lambda, epochs=cfg.svm_epochs, eta0=cfg.svm_eta0, seed=cfg.seed)
    if args.task == "emotion":
        if not cfg.face_data:
            raise PipelineError("--face-data is required for the emotion task")
        model = train_emotion_model(cfg.face_data, **params)
    elif args.task == "orientation":
        if not args.annotations:
            raise PipelineError("--annotations is required for the orientation task")
        model = orientation.train_orientation(load_annotations(args.annotations), **params)
    else:
        if not (args.features and args.annotations):
            raise PipelineError("--features and --annotations are required for the scene task")
        images, X, _ = features.read_feature_csv(args.features)
        by_image = {a.image_path: a for a in load_annotations(args.annotations)}
        missing = [i for i in images if i not in by_image]
        if missing:
            raise PipelineError(f"no annotation for images: {', '.join(missing)}")
        y = axis_labels([by_image[i] for i in images], cfg.label_axis, cfg.intensity_mode)
        model = classifier.train(X, y, **params)
        model.config = dict(model.config, label_axis=cfg.label_axis, intensity_mode=cfg.intensity_mode)
    model.save(args.out)


def cmd_predict(args, cfg):
    model = classifier.LinearModel.load(args.model)
    images, X, _ = features.read_feature_csv(args.features)
    pred = classifier.predict(model, X) if len(images) else []
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["image", "prediction"])
        for img, p in zip(images, pred):
            w.writerow([img, p.item() if isinstance(p, np.generic) else p])


def cmd_evaluate(args, cfg):
    with open(args.predictions, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    by_image = {a.image_path: a for a in load_annotations(args.annotations)}
    missing = [r["image"] for r in rows if r["image"] not in by_image]
    if missing:
        raise PipelineError(f"no annotation for images: {', '.join(missing)}")
    y = axis_labels([by_image[r["image"]] for r in rows], cfg.label_axis, cfg.intensity_mode)
    pred = [int(r["prediction"]) for r in rows]
    ev = confusion_matrix(y, pred)
    report = {"label_axis": cfg.label_axis, "intensity_mode": cfg.intensity_mode,
              "chance_accuracy": CHANCE[cfg.intensity_mode], **ev.to_dict()}
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(ev.grid())
    print(f"accuracy {ev.accuracy:.4f} (chance {CHANCE[cfg.intensity_mode]:.2f})")


def cmd_cluster(args, cfg):
    orientation_model = classifier.LinearModel.load(cfg.orientation_model) if cfg.orientation_model else None
    rows = []
    for i, ann in enumerate(load_annotations(args.annotations)):
        records = build_person_records(ann, cfg.iou_threshold)
        image = None
        if ann.orientations is None and orientation_model is not None:
            image = load_ppm(ann.resolve_image())
        clustering, points = cluster_image(ann, records, image, orientation_model, cfg, cfg.seed + i)
        row = {
            "image": ann.image_path,
            "person_indices": [p.person_index for p in points],
            "positions": [list(p.position) for p in points],
            "orientations": [list(p.orientation) for p in points],
        }
        if clustering is None:
            row.update({"K": 0, "assignments": [], "centers": [], "potential": 0.0})
        else:
            d = clustering.to_dict()
            row.update({k: d[k] for k in ("K", "assignments", "centers", "potential")})
        rows.append(row)
    _write_jsonl(args.out, rows)


def cmd_experiment(args, cfg):
    report = run_experiment(cfg)
    print(Path(cfg.out_dir, "confusion.txt").read_text(encoding="utf-8"), end="")
    print(f"accuracy {report['accuracy']:.4f} error {report['error']:.4f} "
          f"(chance {report['chance_accuracy']:.2f})")


def cmd_make_corpus(args, cfg):
    make_corpus(args.out, seed=cfg.seed)


COMMANDS = {
    "match": cmd_match,
    "features": cmd_features,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "cluster": cmd_cluster,
    "experiment": cmd_experiment,
    "make-corpus": cmd_make_corpus,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](args, cfg)
    except (PipelineError, ValueError, OSError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
