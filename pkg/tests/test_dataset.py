"""Dataset loading, standardization, and subset plumbing."""

import numpy as np
import pytest

from mdlselect import (
    Dataset,
    InputError,
    ModelSubset,
    load_csv,
    standardize,
    unstandardize_coefficients,
)


def _write_csv(path, text):
    path.write_text(text)
    return str(path)


class TestModelSubset:
    def test_sorted_and_deduplicated_rejected(self):
        s = ModelSubset([3, 1, 2])
        assert s.indices == (1, 2, 3)
        with pytest.raises(InputError):
            ModelSubset([1, 1, 2])
        with pytest.raises(InputError):
            ModelSubset([0, 1])

    def test_positions_are_zero_based(self):
        assert ModelSubset([2, 5]).positions() == [1, 4]

    def test_validate_against(self):
        ModelSubset([1, 3]).validate_against(3)
        with pytest.raises(InputError):
            ModelSubset([1, 4]).validate_against(3)

    def test_len_and_iteration(self):
        s = ModelSubset([4, 2])
        assert len(s) == 2
        assert list(s) == [2, 4]
        assert len(ModelSubset()) == 0

    def test_kind_values(self):
        assert ModelSubset([1], kind="additive-group").kind == "additive-group"
        with pytest.raises(InputError):
            ModelSubset([1], kind="banana")


class TestDatasetConstruction:
    def test_basic_properties(self):
        X = np.arange(12, dtype=float).reshape(4, 3)
        y = np.array([1.0, 2.0, 3.0, 4.0])
        d = Dataset(y=y, X=X)
        assert d.n == 4 and d.p == 3
        assert d.names == ("x1", "x2", "x3")
        assert not d.standardized

    def test_arrays_are_immutable(self):
        d = Dataset(y=np.ones(3), X=np.eye(3))
        with pytest.raises(ValueError):
            d.X[0, 0] = 5.0
        with pytest.raises(ValueError):
            d.y[0] = 5.0

    def test_shape_and_finite_validation(self):
        with pytest.raises(InputError):
            Dataset(y=np.ones(3), X=np.ones((4, 2)))
        with pytest.raises(InputError):
            Dataset(y=np.array([1.0, np.nan]), X=np.ones((2, 1)))
        with pytest.raises(InputError):
            Dataset(y=np.ones(2), X=np.array([[1.0], [np.inf]]))
        with pytest.raises(InputError):
            Dataset(y=np.ones(1), X=np.ones((1, 1)))  # n >= 2

    def test_select_columns(self):
        X = np.arange(12, dtype=float).reshape(4, 3)
        d = Dataset(y=np.ones(4), X=X, names=("a", "b", "c"))
        sub = d.select_columns(ModelSubset([1, 3]))
        assert sub.p == 2
        assert sub.names == ("a", "c")
        np.testing.assert_array_equal(sub.X, X[:, [0, 2]])

    def test_with_y_replaces_response(self):
        d = Dataset(y=np.ones(3), X=np.eye(3))
        d2 = d.with_y(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(d2.y, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(d2.X, d.X)


class TestLoadCsv:
    def test_happy_path(self, tmp_path):
        path = _write_csv(
            tmp_path / "d.csv",
            "y,a,b\n1.0,2.0,3.0\n4.0,5.0,6.0\n7.0,8.0,9.0\n",
        )
        d = load_csv(path, "y")
        assert d.n == 3 and d.p == 2
        assert d.names == ("a", "b")
        np.testing.assert_array_equal(d.y, [1.0, 4.0, 7.0])
        np.testing.assert_array_equal(d.X[:, 0], [2.0, 5.0, 8.0])

    def test_response_anywhere(self, tmp_path):
        path = _write_csv(
            tmp_path / "d.csv", "a,y,b\n1,2,3\n4,5,6\n"
        )
        d = load_csv(path, "y")
        np.testing.assert_array_equal(d.y, [2.0, 5.0])
        assert d.names == ("a", "b")

    def test_missing_response_column(self, tmp_path):
        path = _write_csv(tmp_path / "d.csv", "a,b\n1,2\n3,4\n")
        with pytest.raises(InputError, match="response"):
            load_csv(path, "y")

    def test_missing_file(self):
        with pytest.raises(InputError, match="not found"):
            load_csv("/nonexistent/never.csv", "y")

    def test_bad_cell_names_row_and_column(self, tmp_path):
        path = _write_csv(tmp_path / "d.csv", "y,a\n1,2\n3,oops\n")
        with pytest.raises(InputError) as err:
            load_csv(path, "y")
        msg = str(err.value)
        assert "a" in msg and ("row" in msg or "line" in msg)

    def test_missing_value_rejected(self, tmp_path):
        path = _write_csv(tmp_path / "d.csv", "y,a\n1,2\n3,\n")
        with pytest.raises(InputError):
            load_csv(path, "y")

    def test_too_few_rows(self, tmp_path):
        path = _write_csv(tmp_path / "d.csv", "y,a\n1,2\n")
        with pytest.raises(InputError):
            load_csv(path, "y")

    def test_no_predictors(self, tmp_path):
        path = _write_csv(tmp_path / "d.csv", "y\n1\n2\n")
        with pytest.raises(InputError):
            load_csv(path, "y")


class TestStandardize:
    def test_hand_arithmetic(self):
        # Column [1, 2, 3]: mean 2, 1/n variance 2/3.
        X = np.array([[1.0], [2.0], [3.0]])
        d = standardize(Dataset(y=np.zeros(3), X=X))
        np.testing.assert_allclose(d.col_means, [2.0])
        np.testing.assert_allclose(d.col_scales, [np.sqrt(2.0 / 3.0)])
        np.testing.assert_allclose(d.X.mean(axis=0), [0.0], atol=1e-12)
        np.testing.assert_allclose(np.mean(d.X**2, axis=0), [1.0], rtol=1e-12)
        assert d.standardized

    def test_y_untouched(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(10) + 3.0
        d = standardize(Dataset(y=y, X=rng.standard_normal((10, 4))))
        np.testing.assert_array_equal(d.y, y)

    def test_idempotent_on_standardized(self):
        rng = np.random.default_rng(1)
        d = standardize(
            Dataset(y=rng.standard_normal(20), X=rng.standard_normal((20, 3)))
        )
        d2 = standardize(d)
        np.testing.assert_allclose(d2.X, d.X, atol=1e-12)

    def test_zero_variance_column_named(self):
        X = np.column_stack([np.ones(5), np.arange(5.0)])
        d = Dataset(y=np.zeros(5), X=X, names=("const", "ramp"))
        with pytest.raises(InputError, match="const"):
            standardize(d)


class TestUnstandardize:
    def test_round_trip_fitted_values(self):
        rng = np.random.default_rng(5)
        n, p = 40, 6
        X = rng.standard_normal((n, p)) * rng.uniform(0.5, 4.0, size=p)
        X += rng.uniform(-3.0, 3.0, size=p)
        y = rng.standard_normal(n)
        d = Dataset(y=y, X=X)
        ds = standardize(d)
        subset = ModelSubset([2, 5])
        beta_std = np.array([1.3, -0.7])
        beta, shift = unstandardize_coefficients(ds, subset, beta_std)
        fitted_std = ds.X[:, subset.positions()] @ beta_std
        fitted_orig = X[:, subset.positions()] @ beta + shift
        np.testing.assert_allclose(fitted_orig, fitted_std, atol=1e-10)

    def test_requires_standardized(self):
        d = Dataset(y=np.zeros(3), X=np.eye(3))
        with pytest.raises(InputError):
            unstandardize_coefficients(d, ModelSubset([1]), np.array([1.0]))
