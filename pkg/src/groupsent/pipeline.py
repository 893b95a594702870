"""End-to-end featurization and experiment runs.

Randomness is derived from the run seed only: the bbox baseline and the
group clustering for the image at position ``i`` use ``seed + i``; the split
and the SVM use ``seed`` directly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import classifier, features, grouping, orientation
from .evaluation import CHANCE, confusion_matrix, remap_binary
from .geometry import AXES, Direction, ImageAnnotation, load_annotations
from .imaging import color_histogram, crop, load_pgm, load_ppm
from .matching import DEFAULT_IOU_THRESHOLD, build_person_records
from .pyramid import PyramidConfig, extract_face_features, prepare_face

FEATURE_SETS = ("color_hist", "bbox", "emotion", "poselet", "emotion+poselet", "full")
INTENSITY_MODES = ("four_way", "binary")


class PipelineError(RuntimeError):
    pass


@dataclass
class RunConfig:
    annotations: str = ""
    out_dir: str = "run"
    seed: int = 0
    test_fraction: float = 0.2
    label_axis: str = "happiness"
    intensity_mode: str = "four_way"
    feature_set: str = "emotion+poselet"
    emotion_model: str = ""
    face_data: str = ""
    orientation_model: str = ""
    poselet_mode: str = "count"
    poselet_threshold: float = 0.9
    normalize: bool = True
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    svm_lambda: float = 1e-4
    svm_epochs: int = 100
    svm_eta0: float = 0.01
    k_face: float = 100.0
    group_lambda: float = 0.1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.label_axis not in AXES:
            raise ValueError(f"label_axis must be one of {AXES}, got {self.label_axis!r}")
        if self.intensity_mode not in INTENSITY_MODES:
            raise ValueError(f"intensity_mode must be one of {INTENSITY_MODES}")
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(f"feature_set must be one of {FEATURE_SETS}")
        if self.poselet_mode not in ("count", "score"):
            raise ValueError("poselet_mode must be 'count' or 'score'")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        """Build from string or typed values; unknown keys are an error."""
        kwargs = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(types[key], raw)
        return cls(**kwargs)


def _coerce(type_name: str, raw):
    if not isinstance(raw, str):
        return raw
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    if type_name == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return raw


def read_config_file(path) -> dict:
    """``key = value`` lines (``#`` comments), or a JSON report carrying a ``config`` echo."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        return dict(obj.get("config", obj))
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------------------
# face emotion model
# ---------------------------------------------------------------------------


def load_face_dataset(path):
    """Face list JSON-lines: ``{"image": "<pgm or ppm>", "label": "smile" | "neutral"}``."""
    path = Path(path)
    images, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            img_path = path.parent / obj["image"]
            img = load_pgm(img_path) if img_path.suffix.lower() == ".pgm" else load_ppm(img_path)
            images.append(img)
            labels.append(str(obj["label"]))
    return images, labels


def face_features(crops, cfg: PyramidConfig = PyramidConfig()) -> np.ndarray:
    rows = [extract_face_features(prepare_face(c, cfg.face_size), cfg) for c in crops]
    return np.array(rows).reshape(len(rows), cfg.n_features)


def train_emotion_model(face_data, lam=1e-4, epochs=100, eta0=0.01, seed=0) -> classifier.LinearModel:
    images, labels = load_face_dataset(face_data)
    return classifier.train(face_features(images), labels, lam=lam, epochs=epochs, eta0=eta0, seed=seed)


# ---------------------------------------------------------------------------
# scene featurization
# ---------------------------------------------------------------------------


def feature_names(feature_set: str) -> List[str]:
    if feature_set == "color_hist":
        return features.color_names()
    if feature_set == "bbox":
        return features.bbox_names()
    if feature_set == "emotion":
        return features.emotion_names()
    if feature_set == "poselet":
        return features.poselet_names()
    if feature_set == "emotion+poselet":
        return features.emotion_names() + features.poselet_names()
    return features.emotion_names() + features.poselet_names() + features.GROUP_NAMES


def person_orientations(ann: ImageAnnotation, records, image, orientation_model) -> List[Direction]:
    """Annotated directions when present, else model predictions, else facing the camera (S)."""
    if ann.orientations is not None:
        return [ann.orientations[r.person_index] for r in records]
    if orientation_model is not None:
        return [orientation.predict_orientation(orientation_model, crop(image, r.person)) for r in records]
    return [Direction.S] * len(records)


def cluster_image(ann: ImageAnnotation, records, image, orientation_model, cfg: RunConfig, seed: int):
    gcfg = grouping.GroupingConfig(k_face=cfg.k_face, lam=cfg.group_lambda)
    dirs = person_orientations(ann, records, image, orientation_model)
    points = grouping.points_from_records(records, ann.width, dirs, gcfg)
    if not points:
        return None, points
    return grouping.select_k(points, gcfg, seed), points


class SceneFeaturizer:
    """Maps annotations to one feature row per image for a configured feature set."""

    def __init__(self, cfg: RunConfig, emotion_model=None, orientation_model=None):
        self.cfg = cfg
        self.emotion_model = emotion_model
        self.orientation_model = orientation_model
        if cfg.feature_set in ("emotion", "emotion+poselet", "full") and emotion_model is None:
            raise PipelineError(f"feature_set {cfg.feature_set!r} needs an emotion model")

    def _emotion(self, ann, records, rgb):
        faces = [r.face for r in records if r.face is not None]
        labelled = []
        if faces:
            X = face_features([crop(rgb, f) for f in faces])
            labels = classifier.predict(self.emotion_model, X)
            labelled = list(zip(faces, [str(l) for l in labels]))
        return features.emotion_grid(ann.width, ann.height, labelled)

    def transform_one(self, ann: ImageAnnotation, index: int) -> np.ndarray:
        cfg = self.cfg
        fs = cfg.feature_set
        if fs == "bbox":
            return features.bbox_baseline(ann.persons, ann.width, ann.height,
                                          seed=cfg.seed + index, normalize=cfg.normalize)
        if fs == "poselet":
            return features.poselet_histogram(ann.poselets, cfg.poselet_threshold, cfg.poselet_mode)
        rgb = load_ppm(ann.resolve_image())
        if fs == "color_hist":
            return color_histogram(rgb, normalize=cfg.normalize)
        records = build_person_records(ann, cfg.iou_threshold)
        f1 = self._emotion(ann, records, rgb)
        if fs == "emotion":
            return f1
        f2 = features.poselet_histogram(ann.poselets, cfg.poselet_threshold, cfg.poselet_mode)
        if fs == "emotion+poselet":
            return np.concatenate([f1, f2])
        clustering, points = cluster_image(ann, records, rgb, self.orientation_model, cfg, cfg.seed + index)
        return features.assemble_scene(f1, f2, grouping.group_features(clustering, points)).combined

    def transform(self, annotations) -> np.ndarray:
        rows = [self.transform_one(a, i) for i, a in enumerate(annotations)]
        return np.array(rows).reshape(len(rows), len(feature_names(self.cfg.feature_set)))


def axis_labels(annotations, axis: str, intensity_mode: str) -> np.ndarray:
    missing = [a.image_path for a in annotations if a.labels is None]
    if missing:
        raise PipelineError(f"annotations without labels: {', '.join(missing)}")
    y = np.array([a.labels.get(axis) for a in annotations], dtype=int)
    return remap_binary(y) if intensity_mode == "binary" else y


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def _default_face_data(cfg: RunConfig) -> Optional[Path]:
    if cfg.face_data:
        return Path(cfg.face_data)
    guess = Path(cfg.annotations).parent / "faces.jsonl"
    return guess if guess.exists() else None


def check_inputs(cfg: RunConfig):
    """Fail before any training if something the run needs is missing."""
    if not cfg.annotations or not Path(cfg.annotations).exists():
        raise PipelineError(f"annotation file not found: {cfg.annotations!r}")
    annotations = load_annotations(cfg.annotations)
    if len(annotations) < 2:
        raise PipelineError("need at least 2 annotated images")
    if cfg.feature_set not in ("bbox", "poselet"):
        absent = [str(a.resolve_image()) for a in annotations if not a.resolve_image().exists()]
        if absent:
            raise PipelineError(f"missing images: {', '.join(absent)}")
    axis_labels(annotations, cfg.label_axis, cfg.intensity_mode)
    needs_emotion = cfg.feature_set in ("emotion", "emotion+poselet", "full")
    if needs_emotion:
        if cfg.emotion_model:
            if not Path(cfg.emotion_model).exists():
                raise PipelineError(f"emotion model not found: {cfg.emotion_model}")
        else:
            face_data = _default_face_data(cfg)
            if face_data is None or not face_data.exists():
                raise PipelineError("emotion features need emotion_model or face_data")
    if cfg.orientation_model and not Path(cfg.orientation_model).exists():
        raise PipelineError(f"orientation model not found: {cfg.orientation_model}")
    return annotations


def load_models(cfg: RunConfig, out_dir: Optional[Path] = None):
    emotion_model = None
    if cfg.feature_set in ("emotion", "emotion+poselet", "full"):
        if cfg.emotion_model:
            emotion_model = classifier.LinearModel.load(cfg.emotion_model)
        else:
            emotion_model = train_emotion_model(_default_face_data(cfg), cfg.svm_lambda,
                                                cfg.svm_epochs, cfg.svm_eta0, cfg.seed)
            if out_dir is not None:
                emotion_model.save(out_dir / "emotion_model.json")
    orientation_model = None
    if cfg.orientation_model:
        orientation_model = classifier.LinearModel.load(cfg.orientation_model)
    return emotion_model, orientation_model


def run_experiment(cfg: RunConfig) -> dict:
    """Featurize, split, train, evaluate; writes artifacts into ``cfg.out_dir``.

    Returns the report dict that is also written to ``report.json``.
    """
    cfg.validate()
    annotations = check_inputs(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    emotion_model, orientation_model = load_models(cfg, out_dir)
    featurizer = SceneFeaturizer(cfg, emotion_model, orientation_model)
    X = featurizer.transform(annotations)
    names = feature_names(cfg.feature_set)
    images = [a.image_path for a in annotations]
    features.write_feature_csv(out_dir / "features.csv", images, X, names)

    y = axis_labels(annotations, cfg.label_axis, cfg.intensity_mode)
    train_idx, test_idx = classifier.split(X, y, cfg.test_fraction, cfg.seed)
    if len(set(y[train_idx].tolist())) < 2:
        raise PipelineError("training split contains a single class")
    model = classifier.train(X[train_idx], y[train_idx], lam=cfg.svm_lambda, epochs=cfg.svm_epochs,
                             eta0=cfg.svm_eta0, seed=cfg.seed)
    model.config = dict(model.config, feature_set=cfg.feature_set, label_axis=cfg.label_axis,
                        intensity_mode=cfg.intensity_mode)
    model.save(out_dir / "model.json")

    train_pred = classifier.predict(model, X[train_idx])
    test_pred = classifier.predict(model, X[test_idx])
    ev = confusion_matrix(y[test_idx], test_pred)
    train_acc = float(np.mean(train_pred == y[train_idx]))
    report = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "n_train": int(len(train_idx)),
        "training_error": 1.0 - train_acc,
        "chance_accuracy": CHANCE[cfg.intensity_mode],
        "test_images": [images[i] for i in test_idx],
        **ev.to_dict(),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    (out_dir / "confusion.txt").write_text(ev.grid() + "\n", encoding="utf-8")
    return report
