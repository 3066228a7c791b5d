"""Collaborative representation: fit a model, compute per-class residuals.

A query is represented as a regularized linear combination of *all* training
columns at once; each class is then scored by how well its own columns and
coefficients reconstruct the query.  The same operations apply unchanged to
raw image vectors and to externally extracted deep features.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    EmptyClass,
    NonFiniteInput,
    SingleClass,
    ZeroQuery,
)
from .linalg import (
    DEFAULT_LAMBDA,
    ZERO_NORM_FLOOR,
    FeatureMatrix,
    RidgeSolution,
    gram_accumulate,
    iter_column_chunks,
    normalize_columns,
    projection_matrix,
    spd_factor,
)

RESIDUAL_VARIANTS = ("plain", "coef_normalized")
RESIDUAL_SOURCES = ("image", "deep", "fused")

# Coefficient sub-vectors with smaller l2 norm than this contribute nothing;
# the coef_normalized variant maps them to the maximal residual ||y|| instead
# of dividing by ~0.
COEF_NORM_FLOOR = 1e-12

# Column count per block when accumulating the dual Gram matrix.
GRAM_CHUNK_COLUMNS = 4096


@dataclass(frozen=True)
class ClassIndex:
    """Partition of training columns into C contiguous per-class ranges."""

    num_classes: int
    column_ranges: tuple  # per class: (start, stop) into the sorted matrix

    def class_sizes(self) -> np.ndarray:
        return np.array([stop - start for start, stop in self.column_ranges])


@dataclass(frozen=True)
class ResidualVector:
    """Per-class reconstruction residuals for one query (length C, >= 0)."""

    values: np.ndarray
    source: str  # "image", "deep" or "fused"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size < 1:
            raise DimensionMismatch("residual vector must have length >= 1")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("residual vector contains NaN or Inf entries")
        if np.any(values < 0):
            raise ValueError("residuals must be nonnegative")
        if self.source not in RESIDUAL_SOURCES:
            raise ValueError(f"source must be one of {RESIDUAL_SOURCES}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CrcModel:
    """Fitted representation model.

    Everything needed to score queries is pre-solved at fit time and never
    depends on any test sample.  Columns of ``A_norm`` are unit-norm and
    sorted by class so each class occupies a contiguous slice;
    ``column_order`` maps model columns back to the original dataset columns.

    Coefficient storage policy: for n <= d the explicit n x d projection is
    kept; for n > d only the d x d Cholesky factor of (A A' + lam I), and
    coefficients are recovered per query as A' solve(y).
    """

    A_norm: FeatureMatrix
    lam: float
    classes: ClassIndex
    residual_variant: str
    view: str  # which residual source this model produces ("image" or "deep")
    column_order: np.ndarray
    projection: np.ndarray | None
    dual_factor: tuple | None

    @property
    def d(self) -> int:
        return self.A_norm.d

    @property
    def n(self) -> int:
        return self.A_norm.n

    @property
    def num_classes(self) -> int:
        return self.classes.num_classes


def _sorted_class_layout(labels: np.ndarray):
    """Stable-sort columns by class id; return (order, contiguous ranges)."""
    labels = np.asarray(labels)
    if labels.size < 1 or not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be a nonempty integer vector")
    if labels.min() < 0:
        raise ValueError("labels must be contiguous ids 0..C-1")
    num_classes = int(labels.max()) + 1
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    ranges = []
    for c in range(num_classes):
        start, stop = np.searchsorted(sorted_labels, [c, c + 1])
        if start == stop:
            raise EmptyClass(c)
        ranges.append((int(start), int(stop)))
    return order, ClassIndex(num_classes=num_classes, column_ranges=tuple(ranges))


def fit(
    train,
    lam: float = DEFAULT_LAMBDA,
    residual_variant: str = "plain",
    view: str = "image",
    chunk_columns: int = GRAM_CHUNK_COLUMNS,
) -> CrcModel:
    """Fit a collaborative representation model on a labeled dataset.

    ``train`` is a :class:`deepcwc.dataset.LabeledDataset` (or anything with
    ``features`` and ``labels``).  Fitting normalizes the training columns and
    pre-solves the projection (or its dual factorization); it never inspects
    any query.
    """
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a finite positive real, got {lam}")
    if residual_variant not in RESIDUAL_VARIANTS:
        raise ValueError(f"residual_variant must be one of {RESIDUAL_VARIANTS}")
    if view not in ("image", "deep"):
        raise ValueError("view must be 'image' or 'deep'")

    features: FeatureMatrix = train.features
    labels = np.asarray(train.labels)
    if labels.shape[0] != features.n:
        raise DimensionMismatch(
            f"{labels.shape[0]} labels for {features.n} training columns"
        )
    order, classes = _sorted_class_layout(labels)
    if classes.num_classes < 2:
        raise SingleClass("training data must contain at least 2 classes")

    A_norm = normalize_columns(FeatureMatrix(features.data[:, order]))

    if A_norm.n <= A_norm.d:
        projection = projection_matrix(A_norm, lam)
        dual_factor = None
    else:
        gram = gram_accumulate(iter_column_chunks(A_norm, chunk_columns))
        gram[np.diag_indices_from(gram)] += lam
        projection = None
        dual_factor = spd_factor(gram)

    return CrcModel(
        A_norm=A_norm,
        lam=lam,
        classes=classes,
        residual_variant=residual_variant,
        view=view,
        column_order=order,
        projection=projection,
        dual_factor=dual_factor,
    )


def _normalized_query(model: CrcModel, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != model.d:
        raise DimensionMismatch(f"query has length {y.shape[0]}, expected d={model.d}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("query contains NaN or Inf entries")
    norm = np.linalg.norm(y)
    if norm < ZERO_NORM_FLOOR:
        raise ZeroQuery("query has (near-)zero l2 norm")
    return y / norm


def _coefficients(model: CrcModel, y_norm: np.ndarray) -> np.ndarray:
    if model.projection is not None:
        return model.projection @ y_norm
    return model.A_norm.data.T @ scipy.linalg.cho_solve(
        model.dual_factor, y_norm, check_finite=False
    )


def represent(model: CrcModel, y) -> RidgeSolution:
    """Ridge coefficients of the (unit-normalized) query over A_norm.

    Coefficient order follows the model's class-sorted columns; use
    ``model.column_order`` to map back to original dataset columns.
    """
    y_norm = _normalized_query(model, y)
    alpha = _coefficients(model, y_norm)
    return RidgeSolution(
        alpha=alpha,
        lam=model.lam,
        mode="primal" if model.projection is not None else "dual",
    )


def class_residuals(model: CrcModel, y) -> ResidualVector:
    """Per-class reconstruction residuals ||y_norm - A_c alpha_c|| of a query.

    With the coef_normalized variant each residual is divided by the l2 norm
    of that class's coefficient sub-vector (near-zero norms map to the
    maximal residual ||y_norm|| instead).
    """
    y_norm = _normalized_query(model, y)
    alpha = _coefficients(model, y_norm)
    A = model.A_norm.data
    values = np.empty(model.num_classes)
    for c, (start, stop) in enumerate(model.classes.column_ranges):
        residual = np.linalg.norm(y_norm - A[:, start:stop] @ alpha[start:stop])
        if model.residual_variant == "coef_normalized":
            coef_norm = np.linalg.norm(alpha[start:stop])
            if coef_norm < COEF_NORM_FLOOR:
                residual = np.linalg.norm(y_norm)
            else:
                residual = residual / coef_norm
        values[c] = residual
    return ResidualVector(values=values, source=model.view)


def save_model(model: CrcModel, path) -> None:
    """Persist a fitted model; solver state is rebuilt on load."""
    labels_sorted = np.zeros(model.n, dtype=np.int64)
    for c, (start, stop) in enumerate(model.classes.column_ranges):
        labels_sorted[start:stop] = c
    np.savez_compressed(
        Path(path),
        data=model.A_norm.data,
        labels=labels_sorted,
        lam=np.float64(model.lam),
        residual_variant=np.str_(model.residual_variant),
        view=np.str_(model.view),
        column_order=model.column_order,
    )


def load_model(path) -> CrcModel:
    """Load a model saved by :func:`save_model`.

    The projection / dual factorization is recomputed deterministically from
    the stored normalized matrix, so loaded models score queries identically.
    """
    with np.load(Path(path), allow_pickle=False) as payload:
        data = payload["data"]
        labels = payload["labels"]
        lam = float(payload["lam"])
        residual_variant = str(payload["residual_variant"])
        view = str(payload["view"])
        column_order = payload["column_order"]

    A_norm = FeatureMatrix(data)
    _, classes = _sorted_class_layout(labels)
    if A_norm.n <= A_norm.d:
        projection = projection_matrix(A_norm, lam)
        dual_factor = None
    else:
        gram = gram_accumulate(iter_column_chunks(A_norm, GRAM_CHUNK_COLUMNS))
        gram[np.diag_indices_from(gram)] += lam
        projection = None
        dual_factor = spd_factor(gram)
    return CrcModel(
        A_norm=A_norm,
        lam=lam,
        classes=classes,
        residual_variant=residual_variant,
        view=view,
        column_order=np.asarray(column_order, dtype=np.int64),
        projection=projection,
        dual_factor=dual_factor,
    )
