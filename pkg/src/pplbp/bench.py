"""Datasets, split protocols and the end-to-end classification experiment."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .descriptor import DescriptorConfig, extract_descriptor
from .features import Classifier
from .imageio import ImageReadError, encode_pgm, is_image_file, load_array, load_image

log = logging.getLogger(__name__)

LAYOUTS = ("flat", "uiuc", "kth")
PROTOCOLS = ("random-half", "k-per-class", "group-holdout")
CACHE_VERSION = 1


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    path: Path
    label: int
    group: int | None = None


@dataclass
class Dataset:
    name: str
    samples: list[Sample]
    class_names: list[str]

    def __post_init__(self):
        if len(self.class_names) < 2:
            raise DatasetError(f"dataset {self.name!r} needs at least two classes")

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def groups(self) -> np.ndarray | None:
        if any(s.group is None for s in self.samples):
            return None
        return np.array([s.group for s in self.samples], dtype=np.int64)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def _images_in(d: Path) -> list[Path]:
    return sorted(p for p in d.iterdir() if is_image_file(p))


def load_dataset(root: str | os.PathLike, layout: str = "flat", validate: bool = True) -> Dataset:
    """Index ``root/<class>/<image>`` (flat, uiuc) or ``root/<class>/<group>/<image>`` (kth).

    Classes and groups are numbered by sorted directory name; groups start at 1.
    With ``validate`` every image is decoded once so unreadable files fail early.
    """
    root = Path(root)
    if layout not in LAYOUTS:
        raise DatasetError(f"unknown layout {layout!r} (expected one of {', '.join(LAYOUTS)})")
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if len(class_dirs) < 2:
        raise DatasetError(f"{root}: found {len(class_dirs)} class directories, need at least 2")
    samples = []
    for label, cdir in enumerate(class_dirs):
        if layout == "kth":
            group_dirs = sorted(p for p in cdir.iterdir() if p.is_dir())
            found = [(g, p) for g, gdir in enumerate(group_dirs, start=1) for p in _images_in(gdir)]
        else:
            found = [(None, p) for p in _images_in(cdir)]
        if not found:
            raise DatasetError(f"class directory {cdir} contains no images")
        samples.extend(Sample(p, label, g) for g, p in found)
    if validate:
        for s in samples:
            load_array(s.path)  # raises ImageReadError naming the file
    return Dataset(root.name, samples, [p.name for p in class_dirs])


@dataclass(frozen=True)
class SplitProtocol:
    kind: str = "random-half"
    repetitions: int = 10
    seed: int = 0
    k: int | None = None
    train_groups: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.kind!r} (expected one of {', '.join(PROTOCOLS)})")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.kind == "k-per-class" and (self.k is None or self.k < 1):
            raise ValueError("k-per-class protocol needs k >= 1")
        if self.train_groups is not None:
            object.__setattr__(self, "train_groups", tuple(int(g) for g in self.train_groups))

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["train_groups"] is not None:
            d["train_groups"] = list(d["train_groups"])
        return d


def repetition_seed(master: int, rep: int) -> int:
    return (master * 1_000_003 + rep) % 2**63


def make_splits(ds: Dataset, proto: SplitProtocol) -> list[tuple[np.ndarray, np.ndarray]]:
    labels = ds.labels
    by_class = [np.flatnonzero(labels == c) for c in range(ds.n_classes)]
    if proto.kind == "group-holdout":
        groups = ds.groups
        if groups is None:
            raise DatasetError("group-holdout needs sample groups (kth layout)")
        choices = [proto.train_groups] if proto.train_groups else [(g,) for g in np.unique(groups).tolist()]
        splits = []
        for chosen in choices:
            mask = np.isin(groups, chosen)
            if not mask.any() or mask.all():
                raise DatasetError(f"train groups {chosen} leave an empty train or test side")
            splits.append((np.flatnonzero(mask), np.flatnonzero(~mask)))
        return splits

    splits = []
    for rep in range(proto.repetitions):
        rng = np.random.Generator(np.random.PCG64(repetition_seed(proto.seed, rep)))
        train, test = [], []
        for c, idx in enumerate(by_class):
            if proto.kind == "random-half":
                n_train = idx.size // 2
            else:
                n_train = proto.k
                if n_train >= idx.size:
                    raise DatasetError(
                        f"k={n_train} training samples leaves no test samples in class "
                        f"{ds.class_names[c]!r} ({idx.size} images)"
                    )
            perm = idx[rng.permutation(idx.size)]
            train.append(perm[:n_train])
            test.append(perm[n_train:])
        splits.append((np.sort(np.concatenate(train)), np.sort(np.concatenate(test))))
    return splits


class DescriptorCache:
    """Content-addressed on-disk store of descriptor vectors."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(image_bytes: bytes, cfg: DescriptorConfig) -> str:
        h = hashlib.sha256()
        h.update(image_bytes)
        h.update(json.dumps({"v": CACHE_VERSION, "cfg": cfg.to_dict()}, sort_keys=True).encode())
        return h.hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npy"

    def get(self, key: str) -> np.ndarray | None:
        p = self._path(key)
        if p.exists():
            return np.load(p, allow_pickle=False)
        return None

    def put(self, key: str, values: np.ndarray) -> None:
        p = self._path(key)
        p.parent.mkdir(exist_ok=True)
        tmp = p.with_suffix(f".tmp{os.getpid()}")
        with open(tmp, "wb") as fh:
            np.save(fh, values, allow_pickle=False)
        os.replace(tmp, p)


def _describe(args) -> np.ndarray:
    path, cfg = args
    try:
        return extract_descriptor(load_image(path), cfg).values
    except Exception as exc:
        raise RuntimeError(f"descriptor extraction failed for {path}: {exc}") from exc


def describe_paths(
    paths: Sequence[os.PathLike], cfg: DescriptorConfig, jobs: int = 1, cache: DescriptorCache | None = None
) -> np.ndarray:
    """Descriptor matrix, one row per path in input order."""
    rows: list[np.ndarray | None] = [None] * len(paths)
    keys = [None] * len(paths)
    todo = []
    for i, p in enumerate(paths):
        if cache is not None:
            keys[i] = cache.key(Path(p).read_bytes(), cfg)
            hit = cache.get(keys[i])
            if hit is not None:
                rows[i] = hit
                continue
        todo.append(i)
    work = [(paths[i], cfg) for i in todo]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_describe, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_describe(w) for w in work]
    for i, values in zip(todo, results):
        rows[i] = values
        if cache is not None:
            cache.put(keys[i], values)
    if not rows:
        return np.zeros((0, cfg.length))
    return np.vstack(rows)


@dataclass
class ExperimentReport:
    accuracies: list[float]
    confusion: np.ndarray  # (C, C), rows true class, columns predicted
    class_names: list[str]
    n_test: list[int]
    config: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))


def evaluate_features(
    X: np.ndarray, labels: np.ndarray, splits, n_classes: int, k: int | None = None
) -> tuple[list[float], np.ndarray, list[int]]:
    accs, sizes = [], []
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for rep, (train, test) in enumerate(splits):
        clf = Classifier.fit(X[train], labels[train], k)
        pred = clf.predict(X[test])
        np.add.at(confusion, (labels[test], pred), 1)
        acc = float(np.mean(pred == labels[test]))
        log.info("repetition %d: k=%d accuracy=%.4f", rep, clf.k, acc)
        accs.append(acc)
        sizes.append(int(test.size))
    return accs, confusion, sizes


def run_experiment(
    ds: Dataset,
    proto: SplitProtocol,
    cfg: DescriptorConfig = DescriptorConfig(),
    jobs: int = 1,
    cache: DescriptorCache | None = None,
    features: np.ndarray | None = None,
    config: dict | None = None,
) -> ExperimentReport:
    """Describe every image once, then fit KL + LDA and score each split.

    ``features`` may carry precomputed descriptors (rows aligned with ``ds``).
    """
    if features is None:
        features = describe_paths([s.path for s in ds.samples], cfg, jobs, cache)
    splits = make_splits(ds, proto)
    accs, confusion, sizes = evaluate_features(features, ds.labels, splits, ds.n_classes)
    snapshot = config if config is not None else {"descriptor": cfg.to_dict(), "protocol": proto.to_dict()}
    return ExperimentReport(accs, confusion, list(ds.class_names), sizes, snapshot)


def sweep_steps(
    ds: Dataset,
    proto: SplitProtocol,
    cfg: DescriptorConfig,
    n_values: Sequence[int],
    jobs: int = 1,
    cache: DescriptorCache | None = None,
) -> list[tuple[int, float, float]]:
    """Mean accuracy for each N, in the order given.

    Descriptors are time-major, so the descriptor for N is the prefix of the
    one for max(N); images are described once at the largest N.
    """
    if not n_values:
        raise ValueError("n_values must not be empty")
    big = cfg.with_steps(max(n_values))
    X = describe_paths([s.path for s in ds.samples], big, jobs, cache)
    splits = make_splits(ds, proto)
    rows = []
    for n in n_values:
        width = cfg.with_steps(n).length
        accs, _, _ = evaluate_features(X[:, :width], ds.labels, splits, ds.n_classes)
        rows.append((int(n), float(np.mean(accs)), float(np.std(accs))))
    return rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def confusion_heatmap(confusion: np.ndarray) -> np.ndarray:
    """Row-normalized confusion as gray levels, 255 = all of the row."""
    sums = confusion.sum(axis=1, keepdims=True)
    frac = np.divide(confusion, sums, out=np.zeros(confusion.shape), where=sums > 0)
    return 255.0 * frac


def write_report(r: ExperimentReport, out: str | os.PathLike) -> dict[str, Path]:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "accuracy": out / "accuracy.csv",
            "confusion": out / "confusion.csv",
            "heatmap": out / "confusion.pgm",
            "config": out / "config.json",
        }
        acc_rows = [["repetition", "n_test", "accuracy"]]
        acc_rows += [[i, n, repr(a)] for i, (n, a) in enumerate(zip(r.n_test, r.accuracies))]
        acc_rows += [["mean", sum(r.n_test), repr(r.mean_accuracy)], ["std", "", repr(r.std_accuracy)]]
        paths["accuracy"].write_text(_csv_text(acc_rows))
        conf_rows = [["true\\predicted", *r.class_names]]
        conf_rows += [[name, *map(int, row)] for name, row in zip(r.class_names, r.confusion)]
        paths["confusion"].write_text(_csv_text(conf_rows))
        paths["heatmap"].write_bytes(encode_pgm(confusion_heatmap(r.confusion)))
        paths["config"].write_text(json.dumps(r.config, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report under {out}: {exc}") from exc
    return paths


def read_confusion_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    return names, np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)


def write_sweep(rows, out: str | os.PathLike) -> Path:
    path = Path(out)
    path.write_text(_csv_text([["steps", "mean_accuracy", "std_accuracy"]] + [[n, repr(a), repr(s)] for n, a, s in rows]))
    return path


__all__ = [
    "Dataset",
    "DatasetError",
    "DescriptorCache",
    "ExperimentReport",
    "ImageReadError",
    "Sample",
    "SplitProtocol",
    "describe_paths",
    "load_dataset",
    "make_splits",
    "run_experiment",
    "sweep_steps",
    "write_report",
    "write_sweep",
]
