"""Feature/label interchange and dataset assembly.

The binary feature format (CWCF) is the bit-exact contract between the
feature extractor and this package:

  =========  =====  =======================================
  bytes      type   meaning
  =========  =====  =======================================
  0..3       4s     magic ``b"CWCF"``
  4..7       u32    version, currently 1
  8          u8     dtype: 1 = float32, 2 = float64
  9..16      u64    rows (feature dimension d)
  17..24     u64    cols (sample count n)
  25..       --     payload, column-major
  =========  =====  =======================================

All integers are little-endian.  Values are widened to float64 on load; a
plain headerless CSV (d rows, n comma-separated columns) is accepted as a
text alternative for small data.  Label files carry one integer per line or
two CSV columns (id,label); external labels are remapped to contiguous ids
in first-appearance order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    ClassTooSmall,
    CountMismatch,
    DimensionMismatch,
    EmptyClass,
    EmptyFile,
    InputError,
    LabelMismatch,
    ShapeOverflow,
    TruncatedFile,
    UnsupportedVersion,
)
from .linalg import FeatureMatrix

MAGIC = b"CWCF"
VERSION = 1
_HEADER = struct.Struct("<4sIBQQ")
_WIRE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_DTYPE_CODES = {"f32": 1, "f64": 2, "float32": 1, "float64": 2}

# Sanity cap on declared element count; anything larger is a corrupt header.
MAX_ELEMENTS = 1 << 48

FORMATS = ("cwcf", "csv")


def write_features(M: FeatureMatrix, path, dtype: str = "f64") -> None:
    """Write a feature matrix in the CWCF binary format."""
    if not isinstance(M, FeatureMatrix):
        M = FeatureMatrix(M)
    code = _DTYPE_CODES.get(str(dtype))
    if code is None:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    wire = _WIRE_DTYPES[code]
    header = _HEADER.pack(MAGIC, VERSION, code, M.d, M.n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asfortranarray(M.data.astype(wire)).tobytes(order="F"))


def read_features(path) -> FeatureMatrix:
    """Read a CWCF file; 32-bit payloads are widened to float64."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFile(f"{path}: file shorter than the {_HEADER.size}-byte header")
        magic, version, code, rows, cols = _HEADER.unpack(header)
        if magic != MAGIC:
            raise BadMagic(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise UnsupportedVersion(f"{path}: version {version}, expected {VERSION}")
        if code not in _WIRE_DTYPES:
            raise UnsupportedVersion(f"{path}: unknown dtype code {code}")
        if rows < 1 or cols < 1 or rows * cols > MAX_ELEMENTS:
            raise ShapeOverflow(f"{path}: implausible shape {rows}x{cols}")
        wire = _WIRE_DTYPES[code]
        expected = rows * cols * wire.itemsize
        payload = fh.read(expected)
        if len(payload) < expected:
            raise TruncatedFile(
                f"{path}: payload has {len(payload)} bytes, expected {expected}"
            )
    data = np.frombuffer(payload, dtype=wire).reshape((rows, cols), order="F")
    return FeatureMatrix(data)


def write_features_csv(M: FeatureMatrix, path) -> None:
    """Write features as plain CSV: d rows, one column per sample."""
    if not isinstance(M, FeatureMatrix):
        M = FeatureMatrix(M)
    np.savetxt(path, M.data, delimiter=",", fmt="%.17g")


def read_features_csv(path) -> FeatureMatrix:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: cannot parse CSV feature matrix: {exc}") from exc
    if data.size == 0:
        raise EmptyFile(f"{path}: no feature rows")
    return FeatureMatrix(data)


def load_features(path, fmt: str = "cwcf") -> FeatureMatrix:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    return read_features(path) if fmt == "cwcf" else read_features_csv(path)


def save_features(M: FeatureMatrix, path, fmt: str = "cwcf", dtype: str = "f64") -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if fmt == "cwcf":
        write_features(M, path, dtype=dtype)
    else:
        write_features_csv(M, path)


def _remap_first_appearance(raw_labels) -> tuple[np.ndarray, dict]:
    label_map: dict = {}
    ids = np.empty(len(raw_labels), dtype=np.int64)
    for i, raw in enumerate(raw_labels):
        if raw not in label_map:
            label_map[raw] = len(label_map)
        ids[i] = label_map[raw]
    return ids, label_map


def read_labels(path) -> tuple[np.ndarray, dict]:
    """Read a label file; returns (contiguous ids, external->id map).

    Accepts one integer per line, or two-column CSV rows (id,label) in file
    order.  A single leading non-numeric line is treated as a header.
    """
    raw: list[int] = []
    first_data_line = True
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            try:
                raw.append(int(fields[-1]))
            except ValueError as exc:
                if first_data_line:
                    first_data_line = False
                    continue  # header row
                raise InputError(
                    f"{path}:{lineno}: not an integer label: {line!r}"
                ) from exc
            first_data_line = False
    if not raw:
        raise EmptyFile(f"{path}: no labels")
    return _remap_first_appearance(raw)


def write_labels(raw_labels, path) -> None:
    """Write labels one per line (the simplest accepted text form)."""
    with open(path, "w", encoding="utf-8") as fh:
        for raw in raw_labels:
            fh.write(f"{int(raw)}\n")


@dataclass(frozen=True)
class LabeledDataset:
    """A feature matrix paired with contiguous class ids and a class index."""

    features: FeatureMatrix
    labels: np.ndarray
    label_map: dict
    provenance: str = ""

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != self.features.n:
            raise CountMismatch(
                f"{labels.shape[0]} labels for {self.features.n} feature columns"
            )
        num_classes = int(labels.max()) + 1 if labels.size else 0
        if labels.size and labels.min() < 0:
            raise InputError("labels must be contiguous ids 0..C-1")
        for c in range(num_classes):
            if not np.any(labels == c):
                raise EmptyClass(c)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_classes", num_classes)

    num_classes: int = field(init=False, repr=False, default=0)

    @property
    def n(self) -> int:
        return self.features.n

    @property
    def d(self) -> int:
        return self.features.d

    def class_columns(self, c: int) -> np.ndarray:
        return np.nonzero(self.labels == c)[0]

    @classmethod
    def from_raw_labels(cls, features, raw_labels, provenance: str = "") -> "LabeledDataset":
        ids, label_map = _remap_first_appearance(list(raw_labels))
        return cls(features=features, labels=ids, label_map=label_map, provenance=provenance)


def load_dataset(features_path, labels_path, fmt: str = "cwcf", provenance: str = "") -> LabeledDataset:
    features = load_features(features_path, fmt=fmt)
    ids, label_map = read_labels(labels_path)
    if ids.shape[0] != features.n:
        raise CountMismatch(
            f"{labels_path}: {ids.shape[0]} labels for {features.n} feature columns"
        )
    return LabeledDataset(
        features=features,
        labels=ids,
        label_map=label_map,
        provenance=provenance or str(features_path),
    )


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/test split protocol.

    ``per_class_first_k`` takes the first k columns of every class in file
    order; ``per_class_fraction`` shuffles within each class with the given
    seed before splitting; ``explicit_indices`` names the training columns
    directly.
    """

    mode: str
    k: int | None = None
    fraction: float | None = None
    seed: int | None = None
    train_indices: tuple | None = None

    MODES = ("per_class_first_k", "per_class_fraction", "explicit_indices")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}, got {self.mode!r}")
        if self.mode == "per_class_first_k" and (self.k is None or self.k < 1):
            raise ValueError("per_class_first_k needs k >= 1")
        if self.mode == "per_class_fraction":
            if self.fraction is None or not 0 < self.fraction < 1:
                raise ValueError("per_class_fraction needs 0 < fraction < 1")
            if self.seed is None:
                raise ValueError("per_class_fraction needs a seed")
        if self.mode == "explicit_indices" and not self.train_indices:
            raise ValueError("explicit_indices needs a nonempty index collection")

    @classmethod
    def first_k(cls, k: int) -> "SplitSpec":
        return cls(mode="per_class_first_k", k=int(k))

    @classmethod
    def per_fraction(cls, fraction: float, seed: int) -> "SplitSpec":
        return cls(mode="per_class_fraction", fraction=float(fraction), seed=int(seed))

    @classmethod
    def explicit(cls, train_indices) -> "SplitSpec":
        return cls(
            mode="explicit_indices",
            train_indices=tuple(int(i) for i in train_indices),
        )

    def as_config(self) -> dict:
        cfg = {"mode": self.mode}
        if self.k is not None:
            cfg["k"] = self.k
        if self.fraction is not None:
            cfg["fraction"] = self.fraction
        if self.seed is not None:
            cfg["seed"] = self.seed
        if self.train_indices is not None:
            cfg["train_indices"] = list(self.train_indices)
        return cfg


def _subset(ds: LabeledDataset, indices: np.ndarray) -> LabeledDataset:
    indices = np.sort(np.asarray(indices, dtype=np.int64))
    return LabeledDataset(
        features=FeatureMatrix(ds.features.data[:, indices]),
        labels=ds.labels[indices],
        label_map=ds.label_map,
        provenance=ds.provenance,
    )


def split(ds: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Partition a dataset into disjoint, exhaustive train/test subsets.

    Both sides keep every class (an empty per-class side raises
    :class:`ClassTooSmall`); the split is a pure function of (ds, spec).
    """
    train_idx: list[np.ndarray] = []
    if spec.mode == "explicit_indices":
        chosen = np.unique(np.asarray(spec.train_indices, dtype=np.int64))
        if chosen.size and (chosen.min() < 0 or chosen.max() >= ds.n):
            raise InputError(f"explicit train index out of range 0..{ds.n - 1}")
        mask = np.zeros(ds.n, dtype=bool)
        mask[chosen] = True
        for c in range(ds.num_classes):
            cols = ds.class_columns(c)
            n_train = int(mask[cols].sum())
            if n_train == 0 or n_train == cols.size:
                raise ClassTooSmall(c, f"class {c}: explicit split leaves an empty side")
        train_idx.append(chosen)
    else:
        rng = (
            np.random.default_rng(spec.seed)
            if spec.mode == "per_class_fraction"
            else None
        )
        for c in range(ds.num_classes):
            cols = ds.class_columns(c)  # ascending file order
            if spec.mode == "per_class_first_k":
                if cols.size <= spec.k:
                    raise ClassTooSmall(
                        c, f"class {c} has {cols.size} samples, need > k={spec.k}"
                    )
                train_idx.append(cols[: spec.k])
            else:
                n_train = int(round(spec.fraction * cols.size))
                if n_train < 1 or n_train >= cols.size:
                    raise ClassTooSmall(
                        c,
                        f"class {c}: fraction {spec.fraction} of {cols.size} samples "
                        "leaves an empty side",
                    )
                perm = rng.permutation(cols.size)
                train_idx.append(cols[perm[:n_train]])

    train_indices = np.sort(np.concatenate(train_idx))
    mask = np.zeros(ds.n, dtype=bool)
    mask[train_indices] = True
    test_indices = np.nonzero(~mask)[0]
    return _subset(ds, train_indices), _subset(ds, test_indices)


@dataclass(frozen=True)
class PairedDataset:
    """Two views of the same samples: index i is the same sample in both."""

    image: LabeledDataset
    deep: LabeledDataset

    def __post_init__(self):
        if self.image.n != self.deep.n:
            raise CountMismatch(
                f"views have {self.image.n} and {self.deep.n} samples"
            )

    @property
    def n(self) -> int:
        return self.image.n

    @property
    def labels(self) -> np.ndarray:
        return self.image.labels

    @property
    def num_classes(self) -> int:
        return self.image.num_classes


def pair_views(img: LabeledDataset, deep: LabeledDataset) -> PairedDataset:
    """Pair two views after checking they describe the same samples.

    Feature dimensions may differ; the raw (external) label of every sample
    must agree, which also forces identical id maps for first-appearance
    remapped datasets.
    """
    if img.n != deep.n:
        raise CountMismatch(f"views have {img.n} and {deep.n} samples")
    inv_img = {v: k for k, v in img.label_map.items()}
    inv_deep = {v: k for k, v in deep.label_map.items()}
    for i in range(img.n):
        if inv_img[int(img.labels[i])] != inv_deep[int(deep.labels[i])]:
            raise LabelMismatch(i)
    return PairedDataset(image=img, deep=deep)


def split_paired(
    pair: PairedDataset, spec: SplitSpec
) -> tuple[PairedDataset, PairedDataset]:
    """Split both views with the same spec; per-class index sets coincide."""
    img_train, img_test = split(pair.image, spec)
    deep_train, deep_test = split(pair.deep, spec)
    return (
        PairedDataset(image=img_train, deep=deep_train),
        PairedDataset(image=img_test, deep=deep_test),
    )
