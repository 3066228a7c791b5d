"""Residual fusion and minimum-residual classification.

The two views are combined by an element-wise product of their per-class
residual vectors: each class's deep-feature residual is weighted by the same
class's image residual.  Residuals below 1 on both views shrink, residuals
above 1 on both views grow, so agreement between the views is amplified in
whichever direction it points.  The product takes no tunable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crc import ResidualVector
from .errors import DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class FusedDecision:
    """Classification outcome for one query.

    ``margin`` is the second-smallest residual minus the smallest (0.0 for a
    degenerate single-class vector).
    """

    residuals: ResidualVector
    predicted_class: int
    margin: float


def fuse(res_a: ResidualVector, res_b: ResidualVector) -> ResidualVector:
    """Element-wise product of two residual vectors.  Commutative."""
    if len(res_a) != len(res_b):
        raise DimensionMismatch(
            f"residual lengths differ: {len(res_a)} vs {len(res_b)}"
        )
    with np.errstate(over="ignore"):  # overflow surfaces as NonFiniteInput
        values = res_a.values * res_b.values
    return ResidualVector(values=values, source="fused")


def fuse_additive(res_a: ResidualVector, res_b: ResidualVector) -> ResidualVector:
    """Element-wise sum of two residual vectors.

    Off-default alternative kept only for comparison runs; the product is
    the method's fusion rule.
    """
    if len(res_a) != len(res_b):
        raise DimensionMismatch(
            f"residual lengths differ: {len(res_a)} vs {len(res_b)}"
        )
    return ResidualVector(values=res_a.values + res_b.values, source="fused")


def classify(residuals: ResidualVector) -> FusedDecision:
    """Pick the class with minimal residual; ties go to the lowest index."""
    values = residuals.values
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("residual vector contains NaN or Inf entries")
    predicted = int(np.argmin(values))
    if values.size >= 2:
        two_smallest = np.partition(values, 1)[:2]
        margin = float(two_smallest[1] - two_smallest[0])
    else:
        margin = 0.0
    return FusedDecision(residuals=residuals, predicted_class=predicted, margin=margin)


def classify_single(residuals: ResidualVector) -> FusedDecision:
    """Minimum-residual decision on one unfused view (baseline classifier)."""
    return classify(residuals)
