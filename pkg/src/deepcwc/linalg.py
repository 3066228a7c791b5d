"""Dense matrix primitives and regularized least-squares solvers.

Conventions used throughout the package:

* feature matrices hold one sample per **column** (d rows, n columns),
* storage is column-contiguous 64-bit floats, so per-class column slices
  are contiguous views,
* the ridge system is solved in whichever normal form is smaller: the
  n x n system ``(A' A + lam I) alpha = A' y`` (primal) or, via the
  push-through identity, ``alpha = A' (A A' + lam I)^{-1} y`` (dual).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NonFiniteInput,
    SingularSystem,
    ZeroColumn,
)

DEFAULT_LAMBDA = 0.001

# Columns with l2 norm below this are degenerate, not just small.
ZERO_NORM_FLOOR = 1e-300

MODES = ("auto", "primal", "dual")


def _as_column_major(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"matrix must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("matrix contains NaN or Inf entries")
    return np.asfortranarray(arr)


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense real matrix whose columns are samples.

    ``data`` is coerced to column-contiguous float64 and validated to be
    finite and non-empty on construction.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_column_major(self.data))

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _check_query(A: FeatureMatrix, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != A.d:
        raise DimensionMismatch(f"query has length {y.shape[0]}, expected d={A.d}")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("query contains NaN or Inf entries")
    return y


def normalize_columns(M: FeatureMatrix) -> FeatureMatrix:
    """Scale every column to unit l2 norm, preserving direction."""
    if not isinstance(M, FeatureMatrix):
        M = FeatureMatrix(M)
    norms = np.linalg.norm(M.data, axis=0)
    bad = np.nonzero(norms < ZERO_NORM_FLOOR)[0]
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return FeatureMatrix(M.data / norms)


def spd_factor(G: np.ndarray):
    """Cholesky-factor a symmetric positive-definite matrix.

    On failure, retries once with a diagonal jitter of 1e-10 * trace/dim,
    then raises :class:`SingularSystem`.
    """
    try:
        return scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        dim = G.shape[0]
        jitter = 1e-10 * np.trace(G) / dim
        try:
            return scipy.linalg.cho_factor(
                G + jitter * np.eye(dim), lower=True, check_finite=False
            )
        except scipy.linalg.LinAlgError as exc:
            raise SingularSystem(
                f"{dim}x{dim} normal matrix is not positive definite "
                f"(even after jitter {jitter:.3e})"
            ) from exc


def spd_solve(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.cho_solve(spd_factor(G), b, check_finite=False)


@dataclass(frozen=True)
class RidgeSolution:
    """Coefficients of one l2-regularized least-squares solve."""

    alpha: np.ndarray
    lam: float
    mode: str  # "primal" or "dual": which normal-equation form was solved


def _pick_mode(mode: str, d: int, n: int) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "auto":
        return "primal" if n <= d else "dual"
    return mode


def ridge_solve(A: FeatureMatrix, y, lam: float, mode: str = "auto") -> RidgeSolution:
    """Solve min_alpha ||y - A alpha||^2 + lam ||alpha||^2 in closed form.

    ``mode="auto"`` solves the smaller normal system: primal (n x n) when
    n <= d, dual (d x d) otherwise.  Both routes satisfy the stationarity
    condition A'(A alpha - y) + lam alpha = 0 up to factorization roundoff.
    """
    if not isinstance(A, FeatureMatrix):
        A = FeatureMatrix(A)
    y = _check_query(A, y)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be a finite nonnegative real, got {lam}")
    picked = _pick_mode(mode, A.d, A.n)
    M = A.data
    if picked == "primal":
        G = M.T @ M + lam * np.eye(A.n)
        alpha = spd_solve(G, M.T @ y)
    else:
        K = M @ M.T + lam * np.eye(A.d)
        alpha = M.T @ spd_solve(K, y)
    if not np.all(np.isfinite(alpha)):
        raise SingularSystem("solver produced non-finite coefficients")
    return RidgeSolution(alpha=alpha, lam=lam, mode=picked)


def projection_matrix(A: FeatureMatrix, lam: float) -> np.ndarray:
    """Pre-solve the query-independent map P = (A'A + lam I)^{-1} A'.

    P is n x d; ``P @ y`` reproduces ``ridge_solve(A, y, lam).alpha`` for any
    query.  Computed in the same primal/dual form ridge_solve would pick.
    """
    if not isinstance(A, FeatureMatrix):
        A = FeatureMatrix(A)
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a finite positive real, got {lam}")
    M = A.data
    if A.n <= A.d:
        G = M.T @ M + lam * np.eye(A.n)
        P = spd_solve(G, M.T)
    else:
        K = M @ M.T + lam * np.eye(A.d)
        P = M.T @ spd_solve(K, np.eye(A.d))
    if not np.all(np.isfinite(P)):
        raise SingularSystem("projection solve produced non-finite entries")
    return P


def gram_accumulate(chunks) -> np.ndarray:
    """Accumulate A A' = sum_k A_k A_k' over column-block chunks.

    The reduction is an ordered sum over the given chunk sequence, so results
    are bit-reproducible for equal chunk boundaries.  Equivalent (within
    roundoff) to forming A A' from the concatenated matrix, without ever
    materializing it.
    """
    gram = None
    d = None
    for chunk in chunks:
        if not isinstance(chunk, FeatureMatrix):
            chunk = FeatureMatrix(chunk)
        if gram is None:
            d = chunk.d
            gram = np.zeros((d, d))
        elif chunk.d != d:
            raise DimensionMismatch(
                f"chunk has {chunk.d} rows, expected {d} like the first chunk"
            )
        gram += chunk.data @ chunk.data.T
    if gram is None:
        raise ValueError("gram_accumulate needs at least one chunk")
    return gram


def iter_column_chunks(M: FeatureMatrix, chunk_columns: int):
    """Yield successive column blocks of at most ``chunk_columns`` columns."""
    if chunk_columns < 1:
        raise ValueError("chunk_columns must be >= 1")
    for start in range(0, M.n, chunk_columns):
        yield FeatureMatrix(M.data[:, start : start + chunk_columns])
