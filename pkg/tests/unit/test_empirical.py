"""Unit tests for empirical moments and least-squares maps."""

import numpy as np
import pytest

from rankmap.core.models import FactorStrategy, Form, Task
from rankmap.services import linalg
from rankmap.services.empirical import (
    DataSet,
    cross_moment,
    default_ridge,
    empirical_covariance,
    empirical_map,
    empirical_second_moment,
    plugin_forward_map,
    plugin_inverse_map,
    task_pair,
)
from rankmap.services.mappings import MomentModel, ProblemSpec, optimal_map
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    InsufficientSamplesError,
)


@pytest.fixture
def full_rank_pair(rng):
    X = rng.standard_normal((4, 50))
    F = rng.standard_normal((3, 4))
    return DataSet(X=X, Y=F @ X + 0.1 * rng.standard_normal((3, 50)))


class TestDataSet:
    """Test the sample container."""

    def test_requires_samples(self):
        """Test an empty sample set is refused."""
        with pytest.raises(InsufficientSamplesError):
            DataSet(X=np.zeros((3, 0)))

    def test_sample_counts_must_match(self):
        """Test X and Y need the same number of columns."""
        with pytest.raises(DimensionMismatchError):
            DataSet(X=np.ones((2, 4)), Y=np.ones((2, 3)))

    def test_require_y(self):
        """Test estimators needing Y fail clearly without it."""
        with pytest.raises(ContractViolationError):
            DataSet(X=np.ones((2, 4))).require_y()

    def test_split_is_chronological(self):
        """Test the first fraction of columns trains."""
        X = np.arange(20.0).reshape(2, 10)
        train, test = DataSet(X=X).split(0.8)
        assert train.sample_count == 8
        assert test.sample_count == 2
        np.testing.assert_array_equal(test.X, X[:, 8:])

    def test_split_keeps_both_sides(self):
        """Test extreme fractions still leave one sample on each side."""
        train, test = DataSet(X=np.ones((1, 3))).split(0.99)
        assert train.sample_count == 2
        assert test.sample_count == 1

    def test_split_fraction_checked(self):
        """Test fractions outside (0, 1) are refused."""
        with pytest.raises(ContractViolationError):
            DataSet(X=np.ones((1, 3))).split(1.0)


class TestMoments:
    """Test moment estimators."""

    def test_second_moment_with_default_ridge(self, rng):
        """Test Gamma = X X^T / J plus the default ridge."""
        X = rng.standard_normal((3, 40))
        model = empirical_second_moment(DataSet(X=X))
        raw = X @ X.T / 40
        ridge = default_ridge(raw)
        assert ridge == pytest.approx(1e-8 * np.mean(np.diag(raw)))
        assert model.ridge == pytest.approx(ridge)
        np.testing.assert_allclose(model.moment, raw + ridge * np.eye(3), atol=1e-14)
        assert not model.centered

    def test_explicit_ridge(self, rng):
        """Test an explicit ridge replaces the default."""
        model = empirical_second_moment(DataSet(X=rng.standard_normal((2, 10))), ridge=0.0)
        assert model.ridge == 0.0

    def test_covariance_matches_numpy(self, rng):
        """Test S uses the J - 1 normalization and carries the mean."""
        X = rng.standard_normal((3, 30)) + 2.0
        model = empirical_covariance(DataSet(X=X), ridge=0.0)
        np.testing.assert_allclose(model.moment, np.cov(X), atol=1e-12)
        np.testing.assert_allclose(model.mean, X.mean(axis=1))
        assert model.centered

    def test_covariance_needs_two_samples(self):
        """Test a single sample has no covariance."""
        with pytest.raises(InsufficientSamplesError):
            empirical_covariance(DataSet(X=np.ones((2, 1))))

    def test_observation_moment(self, full_rank_pair):
        """Test the Y moment is available by name."""
        model = empirical_second_moment(full_rank_pair, ridge=0.0, variable="Y")
        Y = full_rank_pair.Y
        np.testing.assert_allclose(model.moment, Y @ Y.T / Y.shape[1], atol=1e-12)

    def test_unknown_variable(self, full_rank_pair):
        """Test only X and Y are moment variables."""
        with pytest.raises(ContractViolationError):
            empirical_second_moment(full_rank_pair, variable="Z")

    def test_cross_moment(self, full_rank_pair):
        """Test Gamma_XY = X Y^T / J."""
        D = full_rank_pair
        np.testing.assert_allclose(cross_moment(D), D.X @ D.Y.T / 50)


class TestTaskPair:
    """Test task input and target selection."""

    def test_directions(self, full_rank_pair):
        """Test each task reads the right direction."""
        D = full_rank_pair
        expected = {
            Task.FORWARD: (D.X, D.Y),
            Task.INVERSE: (D.Y, D.X),
            Task.DENOISE: (D.Y, D.X),
            Task.AUTOENCODE: (D.X, D.X),
        }
        for task, (inputs, targets) in expected.items():
            got_inputs, got_targets = task_pair(D, task)
            assert got_inputs is inputs
            assert got_targets is targets


class TestEmpiricalMap:
    """Test least-squares rank-constrained maps."""

    def test_training_risk_is_mse(self, full_rank_pair):
        """Test the reported risk is the training mean squared error."""
        result = empirical_map(full_rank_pair, 2, Task.FORWARD)
        residual = result.apply(full_rank_pair.X) - full_rank_pair.Y
        assert result.risk == pytest.approx(np.sum(residual**2) / 50)
        assert result.trace.branch == "least-squares"
        assert linalg.numerical_rank(result.A) == 2

    def test_beats_random_candidates(self, full_rank_pair, rng):
        """Test no random rank-1 map fits the training data better."""
        D = full_rank_pair
        best = empirical_map(D, 1, Task.INVERSE)
        for _ in range(100):
            A = rng.standard_normal((4, 1)) @ rng.standard_normal((1, 3))
            assert np.sum((A @ D.Y - D.X) ** 2) / 50 >= best.risk - 1e-10

    def test_affine_recovers_operator_and_offset(self, rng):
        """Test noiseless affine data is fit exactly."""
        X = rng.standard_normal((3, 50))
        F = rng.standard_normal((2, 3))
        offset = np.array([1.5, -2.0])
        D = DataSet(X=X, Y=F @ X + offset[:, None])
        result = empirical_map(D, 2, Task.FORWARD, Form.AFFINE)
        np.testing.assert_allclose(result.A, F, atol=1e-8)
        np.testing.assert_allclose(result.bias, offset, atol=1e-8)
        assert result.risk == pytest.approx(0.0, abs=1e-12)

    def test_rank_clamped_to_data(self, rng):
        """Test ranks above the data rank are clamped and reported."""
        D = DataSet(X=rng.standard_normal((4, 2)), Y=rng.standard_normal((4, 2)))
        result = empirical_map(D, 4, Task.FORWARD)
        assert result.trace.clamped
        assert result.trace.effective_rank == 2

    def test_converges_to_closed_form(self, rng):
        """Test the least-squares map approaches the moment solution as samples grow."""
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        gamma_x = Q @ np.diag([6.0, 5.0, 4.0, 1.0, 0.5, 0.2]) @ Q.T
        F = np.eye(6) + 0.3 * rng.standard_normal((6, 6))
        noise_std = np.sqrt(0.1)
        optimal = optimal_map(
            ProblemSpec(
                signal=MomentModel.from_moment(gamma_x),
                rank=3,
                task=Task.INVERSE,
                forward_operator=F,
                noise=MomentModel.from_moment(0.1 * np.eye(6)),
            )
        )
        L = np.linalg.cholesky(gamma_x)
        medians = []
        for samples in (50, 500, 5000):
            gaps = []
            for seed in range(20):
                draw = np.random.default_rng(seed)
                X = L @ draw.standard_normal((6, samples))
                Y = F @ X + noise_std * draw.standard_normal((6, samples))
                fitted = empirical_map(DataSet(X=X, Y=Y), 3, Task.INVERSE)
                gaps.append(np.linalg.norm(fitted.A - optimal.A))
            medians.append(float(np.median(gaps)))
        assert medians[0] > medians[1] > medians[2]
        assert medians[2] < 0.5 * medians[0]


class TestPlugin:
    """Test the moment plug-in estimator."""

    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_equals_least_squares_without_ridge(self, full_rank_pair, rank):
        """Test the plug-in map matches least squares at ridge 0."""
        plugin = plugin_forward_map(full_rank_pair, rank, ridge=0.0)
        ls = empirical_map(full_rank_pair, rank, Task.FORWARD)
        np.testing.assert_allclose(plugin.A, ls.A, atol=1e-8)

    def test_inverse_with_cholesky(self, full_rank_pair):
        """Test the ridged Cholesky inverse map has the right shape and rank."""
        result = plugin_inverse_map(
            full_rank_pair, 2, ridge=1e-3, strategy=FactorStrategy.CHOLESKY
        )
        assert result.A.shape == (4, 3)
        assert result.task == Task.INVERSE
        assert linalg.numerical_rank(result.A) == 2
        assert "cholesky" in result.trace.branch
