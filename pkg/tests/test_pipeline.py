"""End-to-end selection pipelines and the exhaustive subset oracle."""

import json
import math

import numpy as np
import pytest

from mdlselect.dataset import Dataset
from mdlselect.errors import InputError
from mdlselect.pipeline import (
    _argmin_curve,
    exhaustive_oracle,
    fit_additive,
    fit_linear,
    fit_robust,
)
from mdlselect.splines import SplineBasisSpec


def _report_payload(report):
    """Everything in a report except wall-clock timings."""
    out = report.to_dict()
    out.pop("timings_ms")
    return out


class TestArgminTieBreak:
    def test_smaller_candidate_wins_ties(self):
        assert _argmin_curve([(0, 5.0), (1, 5.0)]) == 0
        assert _argmin_curve([(0, 5.0), (1, 4.0), (2, 4.0)]) == 1
        assert _argmin_curve([(0, 1.0), (1, 2.0)]) == 0


class TestFitLinear:
    def test_exact_signal_selects_single_variable(self):
        rng = np.random.default_rng(100)
        X = rng.standard_normal((40, 10))
        y = 2.0 * X[:, 0]
        rep = fit_linear(Dataset(y, X))
        assert list(rep.selected) == [1]
        assert rep.intercept == pytest.approx(0.0, abs=1e-10)
        assert rep.coefficients[0] == pytest.approx(2.0, abs=1e-8)
        assert rep.method == "mdl-linear"

    def test_strong_signal_matches_oracle(self):
        b = 3.0 / np.sqrt(2.0)
        rng = np.random.default_rng(1000)
        X = rng.standard_normal((50, 10))
        y = b * (X[:, 0] + X[:, 1]) + rng.standard_normal(50)
        d = Dataset(y, X)
        rep = fit_linear(d)
        ora = exhaustive_oracle(d, max_size=10)
        assert list(rep.selected) == [1, 2]
        assert list(ora.selected) == [1, 2]
        assert rep.criterion == pytest.approx(ora.criterion, abs=1e-10)

    def test_never_beats_oracle(self):
        rng = np.random.default_rng(2000)
        for _ in range(8):
            X = rng.standard_normal((40, 8))
            beta = np.zeros(8)
            k = rng.integers(0, 3)
            beta[rng.permutation(8)[:k]] = rng.normal(0.0, 2.0, size=k)
            y = X @ beta + rng.standard_normal(40)
            d = Dataset(y, X)
            rep = fit_linear(d)
            ora = exhaustive_oracle(d, max_size=8)
            assert rep.criterion >= ora.criterion - 1e-10

    def test_curve_includes_empty_model(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((30, 5))
        y = 2.0 * X[:, 0] + 0.5 * rng.standard_normal(30)
        rep = fit_linear(Dataset(y, X))
        assert rep.criterion_curve[0][0] == 0
        assert len(rep.criterion_curve) == rep.path_length + 1
        sizes = [s for s, _ in rep.criterion_curve]
        assert sizes == sorted(sizes)

    def test_selected_is_argmin_of_curve(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((35, 6))
        y = 1.5 * X[:, 2] + rng.standard_normal(35)
        rep = fit_linear(Dataset(y, X))
        totals = [v for _, v in rep.criterion_curve]
        assert rep.criterion == min(totals)
        assert len(rep.selected) == rep.criterion_curve[int(np.argmin(totals))][0]

    def test_screen_size_override(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((30, 12))
        y = 2.0 * X[:, 0] + 0.3 * rng.standard_normal(30)
        rep = fit_linear(Dataset(y, X), m=3)
        assert rep.screen_size == 3
        assert rep.path_length <= 3

    def test_deterministic_reports(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((40, 7))
        y = X @ np.array([2.0, 0, 0, -1.0, 0, 0, 0]) + rng.standard_normal(40)
        d = Dataset(y, X)
        a = json.dumps(_report_payload(fit_linear(d)), sort_keys=True)
        b = json.dumps(_report_payload(fit_linear(d)), sort_keys=True)
        assert a.encode() == b.encode()


class TestFitRobust:
    def test_clean_exact_signal_agrees_with_linear(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((40, 6))
        y = 2.0 * X[:, 0]
        d = Dataset(y, X)
        assert list(fit_robust(d).selected) == list(fit_linear(d).selected) == [1]

    def test_gross_outlier_flips_linear_but_not_robust(self):
        rng = np.random.default_rng(8)
        n, p = 30, 6
        X = rng.standard_normal((n, p))
        y = 2.0 * X[:, 0] + 0.2 * rng.standard_normal(n)
        i = int(np.argmax(np.abs(X[:, 1])))
        y[i] += 40.0 * np.sign(X[i, 1])
        d = Dataset(y, X)
        assert list(fit_linear(d).selected) != [1]
        assert list(fit_robust(d).selected) == [1]
        assert fit_robust(d).method == "mdl-robust"

    def test_never_beats_robust_oracle(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((30, 6))
        y = 2.0 * X[:, 1] + rng.laplace(size=30)
        d = Dataset(y, X)
        rep = fit_robust(d)
        ora = exhaustive_oracle(d, max_size=6, criterion="mdl-robust")
        assert rep.criterion >= ora.criterion - 1e-10


class TestFitAdditive:
    def test_exact_linear_component(self):
        rng = np.random.default_rng(10)
        X = rng.uniform(size=(120, 20))
        y = 5.0 * X[:, 0]
        d = Dataset(y, X)
        rep = fit_additive(d)
        assert list(rep.selected) == [1]
        assert rep.method == "mdl-additive"
        assert rep.intercept == pytest.approx(y.mean(), abs=1e-10)
        assert np.abs(rep.fitted_signal(d) - y).max() <= 1e-6

    def test_group_oracle_agreement(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(size=(200, 8))
        y = (
            3.0 * (2.0 * X[:, 0] - 1.0) ** 2
            + 2.0 * np.sin(2.0 * np.pi * X[:, 1])
            + 0.4 * rng.standard_normal(200)
        )
        d = Dataset(y, X)
        rep = fit_additive(d)
        ora = exhaustive_oracle(d, max_size=4, criterion="mdl-additive")
        assert list(rep.selected) == list(ora.selected) == [1, 2]
        assert rep.criterion == pytest.approx(ora.criterion, abs=1e-10)
        assert rep.criterion >= ora.criterion - 1e-10

    def test_robust_variant_on_clean_data(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(150, 5))
        y = 3.0 * (2.0 * X[:, 0] - 1.0) ** 2 + 0.3 * rng.standard_normal(150)
        d = Dataset(y, X)
        rep = fit_additive(d, robust=True)
        assert rep.method == "mdl-additive-robust"
        assert list(rep.selected) == list(fit_additive(d).selected) == [1]

    def test_group_values_center_and_sum_to_fit(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(size=(150, 4))
        y = (
            3.0 * (2.0 * X[:, 0] - 1.0) ** 2
            + np.sin(2.0 * np.pi * X[:, 1])
            + 0.2 * rng.standard_normal(150)
        )
        d = Dataset(y, X)
        rep = fit_additive(d)
        assert set(rep.group_values) == set(rep.selected.indices)
        for values in rep.group_values.values():
            assert abs(float(np.mean(values))) <= 1e-10
        total = rep.intercept + sum(rep.group_values.values())
        assert np.allclose(total, rep.fitted_signal(d), atol=1e-12)

    def test_oversized_candidates_recorded_not_silent(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(size=(30, 3))
        y = (
            3.0 * (2.0 * X[:, 0] - 1.0) ** 2
            + 2.0 * np.sin(2.0 * np.pi * X[:, 1])
            + 0.3 * (2.0 * X[:, 2] - 1.0)
            + 0.1 * rng.standard_normal(30)
        )
        rep = fit_additive(Dataset(y, X))
        # One 9-coefficient block fits within the budget; two do not.
        assert rep.path_length <= 1
        assert any("skipped" in w for w in rep.warnings)
        assert len(rep.criterion_curve) == rep.path_length + 1

    def test_narrow_basis_override(self):
        rng = np.random.default_rng(13)
        X = rng.uniform(size=(60, 6))
        y = 3.0 * (2.0 * X[:, 0] - 1.0) ** 2 + 0.2 * rng.standard_normal(60)
        spec = SplineBasisSpec(degree=2, basis_dim=5)
        rep = fit_additive(Dataset(y, X), spec=spec)
        assert rep.basis_dim == 5
        assert list(rep.selected) == [1]


class TestExhaustiveOracle:
    def test_single_predictor_enumerates_two_candidates(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal(20)
        y = 1.5 * x + 0.1 * rng.standard_normal(20)
        rep = exhaustive_oracle(Dataset(y, x[:, None]), max_size=1)
        assert rep.n_candidates == 2
        assert list(rep.selected) == [1]

    def test_candidate_count_matches_binomials(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((25, 10))
        y = 2.0 * X[:, 0] + rng.standard_normal(25)
        rep = exhaustive_oracle(Dataset(y, X), max_size=3)
        assert rep.n_candidates == 1 + 10 + 45 + 120 == 176

    def test_budget_refusal_names_count(self):
        rng = np.random.default_rng(16)
        X = rng.standard_normal((10, 30))
        y = rng.standard_normal(10)
        total = sum(math.comb(30, k) for k in range(16))
        with pytest.raises(InputError, match=str(total)):
            exhaustive_oracle(Dataset(y, X), max_size=15)

    def test_equal_columns_tie_break_lexicographic(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal(30)
        X = np.column_stack([x, x, rng.standard_normal(30)])
        y = 2.0 * x + 0.1 * rng.standard_normal(30)
        rep = exhaustive_oracle(Dataset(y, X), max_size=2)
        assert list(rep.selected) == [1]

    def test_rejects_unknown_criterion(self):
        rng = np.random.default_rng(18)
        d = Dataset(rng.standard_normal(15), rng.standard_normal((15, 3)))
        with pytest.raises(InputError, match="criterion"):
            exhaustive_oracle(d, max_size=2, criterion="aic")

    def test_rejects_bad_max_size(self):
        rng = np.random.default_rng(19)
        d = Dataset(rng.standard_normal(15), rng.standard_normal((15, 3)))
        with pytest.raises(InputError, match="max_size"):
            exhaustive_oracle(d, max_size=4)
        with pytest.raises(InputError, match="max_size"):
            exhaustive_oracle(d, max_size=-1)
