"""Seeded synthetic two-view data with complementary class information.

View A carries a discriminative prototype for the first half of the classes
and pure noise for the rest; view B is the mirror image.  Neither view alone
can separate all classes, so the generator is the standard probe for whether
residual fusion recovers the combined signal.
"""

from __future__ import annotations

import numpy as np

from .dataset import LabeledDataset, PairedDataset
from .linalg import FeatureMatrix


def complementary_views(
    num_classes: int = 10,
    train_per_class: int = 20,
    test_per_class: int = 20,
    dim_image: int = 24,
    dim_deep: int = 24,
    noise: float = 0.3,
    seed: int = 0,
) -> tuple[PairedDataset, PairedDataset]:
    """Build (train, test) paired datasets with complementary views.

    Classes 0..C/2-1 are informative in the image view, the remaining classes
    in the deep view.  Prototypes are random unit vectors; every sample is
    its class prototype (or zero, on the uninformative side) plus isotropic
    Gaussian noise of the given scale.  Fully determined by the seed.
    """
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    informative_image = set(range(num_classes // 2))

    def prototypes(dim: int, informative: set) -> np.ndarray:
        protos = np.zeros((dim, num_classes))
        for c in sorted(informative):
            v = rng.standard_normal(dim)
            protos[:, c] = v / np.linalg.norm(v)
        return protos

    protos_image = prototypes(dim_image, informative_image)
    protos_deep = prototypes(
        dim_deep, set(range(num_classes)) - informative_image
    )

    def sample_block(protos: np.ndarray, dim: int, per_class: int) -> np.ndarray:
        cols = []
        for c in range(num_classes):
            block = protos[:, [c]] + noise * rng.standard_normal((dim, per_class))
            cols.append(block)
        return np.concatenate(cols, axis=1)

    def labels(per_class: int) -> np.ndarray:
        return np.repeat(np.arange(num_classes), per_class)

    # Draw image and deep blocks from one stream, train then test, so the
    # pairing (same underlying sample, two measurements) is explicit.
    img_train = sample_block(protos_image, dim_image, train_per_class)
    deep_train = sample_block(protos_deep, dim_deep, train_per_class)
    img_test = sample_block(protos_image, dim_image, test_per_class)
    deep_test = sample_block(protos_deep, dim_deep, test_per_class)

    def dataset(block: np.ndarray, per_class: int, tag: str) -> LabeledDataset:
        return LabeledDataset.from_raw_labels(
            FeatureMatrix(block),
            labels(per_class),
            provenance=f"synthetic:{tag}:seed={seed}",
        )

    train = PairedDataset(
        image=dataset(img_train, train_per_class, "image"),
        deep=dataset(deep_train, train_per_class, "deep"),
    )
    test = PairedDataset(
        image=dataset(img_test, test_per_class, "image"),
        deep=dataset(deep_test, test_per_class, "deep"),
    )
    return train, test
