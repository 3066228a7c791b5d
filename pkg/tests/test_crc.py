"""crc: model fitting, representation, per-class residuals."""

from types import SimpleNamespace

import numpy as np
import pytest

import oracle
from deepcwc.crc import class_residuals, fit, load_model, represent, save_model
from deepcwc.dataset import LabeledDataset
from deepcwc.errors import (
    DimensionMismatch,
    EmptyClass,
    NonFiniteInput,
    SingleClass,
    ZeroColumn,
    ZeroQuery,
)
from deepcwc.linalg import FeatureMatrix


def make_dataset(data, labels, provenance="test"):
    return LabeledDataset.from_raw_labels(FeatureMatrix(data), labels, provenance)


def random_dataset(rng, d, n, num_classes):
    labels = np.concatenate(
        [np.arange(num_classes), rng.integers(0, num_classes, n - num_classes)]
    )
    return make_dataset(rng.standard_normal((d, n)), labels)


def orthogonal_block_dataset():
    """3 classes in mutually orthogonal 2-D subspaces of R^6, 2 samples each."""
    rng = np.random.default_rng(123)
    blocks = []
    for c in range(3):
        block = np.zeros((6, 2))
        block[2 * c : 2 * c + 2, :] = rng.standard_normal((2, 2)) + np.eye(2) * 2
        blocks.append(block)
    return make_dataset(np.concatenate(blocks, axis=1), [0, 0, 1, 1, 2, 2])


class TestFit:
    def test_two_identity_columns(self):
        ds = make_dataset(np.eye(2), [0, 1])
        model = fit(ds, lam=0.001)
        assert model.num_classes == 2
        np.testing.assert_allclose(model.projection, np.eye(2) / 1.001, atol=1e-12)

    def test_empty_class_rejected(self):
        train = SimpleNamespace(features=FeatureMatrix(np.eye(3)), labels=np.array([0, 0, 2]))
        with pytest.raises(EmptyClass) as excinfo:
            fit(train)
        assert excinfo.value.label == 1

    def test_single_class_rejected(self):
        train = SimpleNamespace(features=FeatureMatrix(np.eye(3)), labels=np.array([0, 0, 0]))
        with pytest.raises(SingleClass):
            fit(train)

    def test_zero_column_rejected(self):
        data = np.eye(3)
        data[:, 1] = 0.0
        train = SimpleNamespace(features=FeatureMatrix(data), labels=np.array([0, 1, 2]))
        with pytest.raises(ZeroColumn):
            fit(train)

    def test_lambda_validation(self):
        ds = make_dataset(np.eye(2), [0, 1])
        with pytest.raises(ValueError):
            fit(ds, lam=0.0)
        with pytest.raises(ValueError):
            fit(ds, residual_variant="bespoke")

    def test_projection_matches_ridge_oracle(self):
        rng = np.random.default_rng(1)
        ds = random_dataset(rng, d=20, n=50, num_classes=10)
        model = fit(ds, lam=0.01)
        An = model.A_norm.data
        P_expected = np.linalg.inv(An.T @ An + 0.01 * np.eye(50)) @ An.T
        for _ in range(5):
            y = rng.standard_normal(20)
            yn = y / np.linalg.norm(y)
            np.testing.assert_allclose(
                represent(model, y).alpha, P_expected @ yn, atol=1e-10
            )

    def test_storage_policy(self):
        rng = np.random.default_rng(2)
        wide = fit(random_dataset(rng, d=6, n=20, num_classes=3), lam=0.01)
        assert wide.projection is None and wide.dual_factor is not None
        tall = fit(random_dataset(rng, d=20, n=8, num_classes=3), lam=0.01)
        assert tall.projection is not None and tall.dual_factor is None

    def test_unsorted_labels_get_contiguous_ranges(self):
        rng = np.random.default_rng(3)
        ds = make_dataset(rng.standard_normal((5, 6)), [1, 0, 1, 0, 1, 0])
        model = fit(ds, lam=0.01)
        assert model.classes.column_ranges == ((0, 3), (3, 6))
        # column_order maps model columns back to dataset columns
        original = ds.features.data[:, model.column_order]
        norms = np.linalg.norm(original, axis=0)
        np.testing.assert_allclose(original / norms, model.A_norm.data, atol=1e-15)


class TestRepresent:
    def test_scale_invariance_exact_for_exact_scales(self):
        rng = np.random.default_rng(4)
        ds = random_dataset(rng, d=8, n=12, num_classes=3)
        model = fit(ds, lam=0.001)
        y = rng.standard_normal(8)
        base = represent(model, y).alpha
        for c in (2.0, 0.25, 1024.0):
            np.testing.assert_array_equal(represent(model, c * y).alpha, base)

    def test_scale_invariance_tolerance_for_any_scale(self):
        rng = np.random.default_rng(5)
        ds = random_dataset(rng, d=8, n=12, num_classes=3)
        model = fit(ds, lam=0.001)
        y = rng.standard_normal(8)
        base = represent(model, y).alpha
        for c in (3.0, 0.7, 123.456):
            np.testing.assert_allclose(represent(model, c * y).alpha, base, atol=1e-12)

    def test_training_column_any_scale(self):
        ds = orthogonal_block_dataset()
        model = fit(ds, lam=0.001)
        col = ds.features.data[:, 3]
        np.testing.assert_array_equal(
            represent(model, 4.0 * col).alpha, represent(model, col).alpha
        )

    def test_orthogonal_query_zero_coefficients(self):
        # training in the first two coordinates, query in the third
        ds = make_dataset(
            np.array([[1.0, 0.3], [0.5, -1.0], [0.0, 0.0]]), [0, 1]
        )
        model = fit(ds, lam=0.01)
        np.testing.assert_allclose(represent(model, [0.0, 0.0, 2.0]).alpha, 0.0, atol=1e-12)

    def test_matches_ridge_oracle(self):
        rng = np.random.default_rng(6)
        ds = random_dataset(rng, d=10, n=7, num_classes=3)
        model = fit(ds, lam=0.1)
        y = rng.standard_normal(10)
        An = model.A_norm.data
        expected = oracle.ridge_coefficients(An, y / np.linalg.norm(y), 0.1)
        np.testing.assert_allclose(represent(model, y).alpha, expected, atol=1e-10)

    def test_query_validation(self):
        ds = make_dataset(np.eye(3), [0, 1, 0])
        model = fit(ds, lam=0.01)
        with pytest.raises(DimensionMismatch):
            represent(model, [1.0, 2.0])
        with pytest.raises(ZeroQuery):
            represent(model, [0.0, 0.0, 0.0])
        with pytest.raises(NonFiniteInput):
            represent(model, [1.0, np.nan, 0.0])


class TestClassResiduals:
    def test_orthogonal_query_all_ones(self):
        ds = make_dataset(
            np.array([[1.0, 0.3], [0.5, -1.0], [0.0, 0.0]]), [0, 1]
        )
        for variant in ("plain", "coef_normalized"):
            model = fit(ds, lam=0.01, residual_variant=variant)
            res = class_residuals(model, [0.0, 0.0, 5.0])
            np.testing.assert_allclose(res.values, 1.0, atol=1e-12)

    def test_true_class_wins_on_orthogonal_blocks(self):
        ds = orthogonal_block_dataset()
        model = fit(ds, lam=1e-6)
        query = ds.features.data[:, 4]  # an exact class-2 training column
        res = class_residuals(model, query)
        assert int(np.argmin(res.values)) == 2

    def test_matches_dense_oracle_on_toy(self):
        rng = np.random.default_rng(7)
        data = rng.standard_normal((4, 6))
        labels = np.array([0, 0, 1, 1, 2, 2])
        ds = make_dataset(data, labels)
        model = fit(ds, lam=0.001)
        for _ in range(5):
            y = rng.standard_normal(4)
            expected = oracle.crc_residuals(data, labels, y, 0.001)
            np.testing.assert_allclose(class_residuals(model, y).values, expected, atol=1e-10)

    @pytest.mark.parametrize("variant", ["plain", "coef_normalized"])
    def test_matches_dense_oracle_on_random_instances(self, variant):
        rng = np.random.default_rng(8)
        for _ in range(25):
            num_classes = int(rng.integers(2, 5))
            n = int(rng.integers(num_classes, 13))
            d = int(rng.integers(2, 9))
            ds = random_dataset(rng, d=d, n=n, num_classes=num_classes)
            model = fit(ds, lam=0.001, residual_variant=variant)
            y = rng.standard_normal(d)
            mine = class_residuals(model, y).values
            expected = oracle.crc_residuals(
                ds.features.data, ds.labels, y, 0.001, variant
            )
            np.testing.assert_allclose(mine, expected, atol=1e-10)

    def test_residual_bounds(self):
        rng = np.random.default_rng(9)
        ds = random_dataset(rng, d=7, n=15, num_classes=4)
        model = fit(ds, lam=0.01)
        alpha_full = None
        for _ in range(20):
            y = rng.standard_normal(7)
            res = class_residuals(model, y)
            assert np.all(res.values >= 0)
            assert np.all(np.isfinite(res.values))
            yn = y / np.linalg.norm(y)
            alpha = represent(model, y).alpha
            for c, (start, stop) in enumerate(model.classes.column_ranges):
                recon = model.A_norm.data[:, start:stop] @ alpha[start:stop]
                assert res.values[c] <= np.linalg.norm(yn) + np.linalg.norm(recon) + 1e-12

    def test_class_slices_partition_coefficients(self):
        rng = np.random.default_rng(10)
        ds = random_dataset(rng, d=9, n=14, num_classes=3)
        model = fit(ds, lam=0.01)
        y = rng.standard_normal(9)
        alpha = represent(model, y).alpha
        total = np.zeros(9)
        for start, stop in model.classes.column_ranges:
            total += model.A_norm.data[:, start:stop] @ alpha[start:stop]
        np.testing.assert_allclose(total, model.A_norm.data @ alpha, atol=1e-10)

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        ds = random_dataset(rng, d=30, n=12, num_classes=3)
        model = fit(ds, lam=0.001)
        y = rng.standard_normal(30)
        np.testing.assert_array_equal(
            class_residuals(model, y).values, class_residuals(model, y).values
        )

    def test_coef_normalized_near_zero_maps_to_query_norm(self):
        ds = make_dataset(
            np.array([[1.0, 0.3], [0.5, -1.0], [0.0, 0.0]]), [0, 1]
        )
        model = fit(ds, lam=0.01, residual_variant="coef_normalized")
        res = class_residuals(model, [0.0, 0.0, 1.0])
        # alpha is ~0 for both classes: residual falls back to ||y_norm|| = 1
        np.testing.assert_allclose(res.values, 1.0, atol=1e-12)

    def test_source_follows_view(self):
        ds = orthogonal_block_dataset()
        y = np.ones(6)
        assert class_residuals(fit(ds, view="image"), y).source == "image"
        assert class_residuals(fit(ds, view="deep"), y).source == "deep"


class TestModelPersistence:
    def test_round_trip_scores_identically(self, tmp_path):
        rng = np.random.default_rng(12)
        for d, n in [(20, 8), (6, 18)]:  # explicit projection and dual factor
            ds = random_dataset(rng, d=d, n=n, num_classes=4)
            model = fit(ds, lam=0.001, residual_variant="coef_normalized", view="deep")
            path = tmp_path / f"model_{d}x{n}.npz"
            save_model(model, path)
            loaded = load_model(path)
            assert loaded.residual_variant == "coef_normalized"
            assert loaded.view == "deep"
            y = rng.standard_normal(d)
            np.testing.assert_array_equal(
                class_residuals(loaded, y).values, class_residuals(model, y).values
            )
