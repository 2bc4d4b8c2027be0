"""Unit tests for the closed-form optimal mappings."""

import numpy as np
import pytest

from rankmap.core.models import Form, Task
from rankmap.services import linalg
from rankmap.services.mappings import (
    ConstructionTrace,
    MomentModel,
    OptimalMap,
    ProblemSpec,
    bayes_risk,
    forward_table_branch,
    optimal_autoencoder,
    optimal_forward,
    optimal_map,
)
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    KindMismatchError,
)


def _spd(rng, n):
    G = rng.standard_normal((n, n))
    return G @ G.T + np.eye(n)


def _candidate(A, spec):
    trace = ConstructionTrace(
        branch="candidate",
        requested_rank=spec.rank,
        effective_rank=spec.rank,
        clamped=False,
        unique=True,
    )
    return OptimalMap(
        A=A, bias=None, rank=spec.rank, task=spec.task, form=spec.form, risk=0.0, trace=trace
    )


class TestForward:
    """Test forward surrogates."""

    def test_full_rank_recovers_operator(self, rng):
        """Test A = F when the signal moment is nonsingular and r >= rank(F)."""
        F = rng.standard_normal((3, 4))
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 4)),
            rank=3,
            task=Task.FORWARD,
            forward_operator=F,
        )
        result = optimal_map(spec)
        np.testing.assert_allclose(result.A, F, atol=1e-8)
        assert result.trace.branch.startswith("full-rank recovery")
        assert result.risk == pytest.approx(0.0, abs=1e-10)

    def test_column_space_projection(self, rng):
        """Test A = F U_k U_k^T when the signal lives in a subspace."""
        F = rng.standard_normal((3, 4))
        spec = ProblemSpec(
            signal=MomentModel.from_moment(np.diag([2.0, 1.0, 0.0, 0.0])),
            rank=2,
            task=Task.FORWARD,
            forward_operator=F,
        )
        result = optimal_forward(spec)
        expected = F @ np.diag([1.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(result.A, expected, atol=1e-10)
        branch = forward_table_branch(spec)
        assert branch.name.startswith("column-space projection")
        assert branch.k == 2
        np.testing.assert_allclose(branch.simplified, expected, atol=1e-10)

    def test_low_rank_is_truncated(self, rng):
        """Test ranks below rank(F L_X) select the truncated branch."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 5)),
            rank=2,
            task=Task.FORWARD,
            forward_operator=rng.standard_normal((4, 5)),
        )
        result = optimal_forward(spec)
        assert result.trace.branch.startswith("truncated")
        assert linalg.numerical_rank(result.A) == 2
        assert result.risk > 0

    def test_noise_sets_risk_floor(self, rng):
        """Test the full-rank forward risk is the noise energy trace(Gamma_E)."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 3)),
            rank=3,
            task=Task.FORWARD,
            forward_operator=np.eye(3),
            noise=MomentModel.from_moment(0.1 * np.eye(3)),
        )
        assert optimal_map(spec).risk == pytest.approx(0.3, rel=1e-8)

    def test_affine_bias(self, rng):
        """Test the affine forward bias is (F - A) mu."""
        mean = rng.standard_normal(4)
        F = rng.standard_normal((3, 4))
        spec = ProblemSpec(
            signal=MomentModel.from_covariance(_spd(rng, 4), mean),
            rank=1,
            task=Task.FORWARD,
            form=Form.AFFINE,
            forward_operator=F,
        )
        result = optimal_map(spec)
        np.testing.assert_allclose(result.bias, (F - result.A) @ mean, atol=1e-12)


class TestInverse:
    """Test inverse recovery."""

    def test_full_rank_is_linear_mmse(self, rng):
        """Test the full-rank map is Gamma_X F^T Gamma_Y^-1."""
        gamma_x = _spd(rng, 4)
        F = rng.standard_normal((3, 4))
        noise = 0.01 * np.eye(3)
        spec = ProblemSpec(
            signal=MomentModel.from_moment(gamma_x),
            rank=3,
            task=Task.INVERSE,
            forward_operator=F,
            noise=MomentModel.from_moment(noise),
        )
        result = optimal_map(spec)
        expected = gamma_x @ F.T @ np.linalg.inv(F @ gamma_x @ F.T + noise)
        np.testing.assert_allclose(result.A, expected, atol=1e-8)
        assert result.trace.branch == "full-rank"

    def test_affine_full_rank(self, rng):
        """Test the affine estimator S_X F^T S_Y^-1 with bias (I - A F) mu."""
        S_x = _spd(rng, 4)
        mean = rng.standard_normal(4)
        F = rng.standard_normal((4, 4))
        S_e = 0.05 * np.eye(4)
        spec = ProblemSpec(
            signal=MomentModel.from_covariance(S_x, mean),
            rank=4,
            task=Task.INVERSE,
            form=Form.AFFINE,
            forward_operator=F,
            noise=MomentModel.from_covariance(S_e, np.zeros(4)),
        )
        result = optimal_map(spec)
        expected = S_x @ F.T @ np.linalg.inv(F @ S_x @ F.T + S_e)
        np.testing.assert_allclose(result.A, expected, atol=1e-8)
        np.testing.assert_allclose(result.bias, (np.eye(4) - expected @ F) @ mean, atol=1e-8)

    def test_beats_random_candidates(self, rng):
        """Test no random rank-2 map has lower Bayes risk."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 5)),
            rank=2,
            task=Task.INVERSE,
            forward_operator=rng.standard_normal((4, 5)),
            noise=MomentModel.from_moment(0.1 * np.eye(4)),
        )
        best = optimal_map(spec)
        assert best.risk == pytest.approx(bayes_risk(best, spec))
        for _ in range(200):
            A = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 4))
            assert bayes_risk(_candidate(A, spec), spec) >= best.risk - 1e-10

    def test_risk_nonincreasing_in_rank(self, rng):
        """Test raising the rank never raises the risk."""
        gamma_x = _spd(rng, 6)
        F = rng.standard_normal((6, 6))
        risks = [
            optimal_map(
                ProblemSpec(
                    signal=MomentModel.from_moment(gamma_x),
                    rank=r,
                    task=Task.INVERSE,
                    forward_operator=F,
                    noise=MomentModel.from_moment(0.05 * np.eye(6)),
                )
            ).risk
            for r in range(1, 7)
        ]
        assert all(b <= a + 1e-10 for a, b in zip(risks, risks[1:]))


class TestAutoencoder:
    """Test optimal autoencoding."""

    def test_projector(self, rng):
        """Test the rank-r map is a symmetric idempotent projector."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 5)), rank=2, task=Task.AUTOENCODE
        )
        A = optimal_autoencoder(spec).A
        np.testing.assert_allclose(A @ A, A, atol=1e-10)
        np.testing.assert_allclose(A, A.T, atol=1e-12)
        assert np.trace(A) == pytest.approx(2.0)

    def test_risk_is_discarded_energy(self):
        """Test the risk equals the discarded eigenvalues of Gamma_X."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(np.diag([4.0, 2.0, 1.0])), rank=1, task=Task.AUTOENCODE
        )
        result = optimal_map(spec)
        assert result.risk == pytest.approx(3.0)
        assert result.trace.branch == "leading-subspace projector"

    def test_full_rank_is_identity(self, rng):
        """Test r = n recovers the identity."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 3)), rank=3, task=Task.AUTOENCODE
        )
        result = optimal_map(spec)
        np.testing.assert_allclose(result.A, np.eye(3), atol=1e-10)
        assert result.trace.branch == "identity recovery"

    def test_rank_above_signal_rank_is_clamped(self):
        """Test the rank clamps to rank(L_X) and is reported."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(np.diag([1.0, 1.0, 0.0])), rank=3, task=Task.AUTOENCODE
        )
        result = optimal_map(spec)
        assert result.trace.clamped
        assert result.trace.effective_rank == 2
        assert result.trace.notes


class TestDenoiser:
    """Test optimal denoising."""

    def test_full_rank_is_wiener_filter(self, rng):
        """Test A = Gamma_X (Gamma_X + Gamma_E)^-1 at full rank."""
        gamma_x = _spd(rng, 4)
        spec = ProblemSpec(
            signal=MomentModel.from_moment(gamma_x),
            rank=4,
            task=Task.DENOISE,
            noise=MomentModel.from_moment(0.1 * np.eye(4)),
        )
        result = optimal_map(spec)
        expected = gamma_x @ np.linalg.inv(gamma_x + 0.1 * np.eye(4))
        np.testing.assert_allclose(result.A, expected, atol=1e-8)
        assert result.trace.branch == "wiener filter"


class TestBayesRisk:
    """Test the closed-form risk against sampled errors."""

    def _affine_inverse(self, rng):
        S_x = _spd(rng, 4)
        mean = rng.standard_normal(4)
        F = rng.standard_normal((3, 4))
        S_e = 0.1 * np.eye(3)
        spec = ProblemSpec(
            signal=MomentModel.from_covariance(S_x, mean),
            rank=2,
            task=Task.INVERSE,
            form=Form.AFFINE,
            forward_operator=F,
            noise=MomentModel.from_covariance(S_e, np.zeros(3)),
        )
        return spec, S_x, mean, F, S_e

    def test_affine_inverse_matches_sampled_error(self, rng):
        """Test bayes_risk agrees with a Monte Carlo mean within four standard errors."""
        spec, S_x, mean, F, S_e = self._affine_inverse(rng)
        result = optimal_map(spec)
        draws = 100_000
        X = rng.multivariate_normal(mean, S_x, size=draws).T
        E = rng.multivariate_normal(np.zeros(3), S_e, size=draws).T
        errors = np.sum((result.apply(F @ X + E) - X) ** 2, axis=0)
        standard_error = errors.std(ddof=1) / np.sqrt(draws)
        risk = bayes_risk(result, spec)
        assert abs(errors.mean() - risk) < 4.0 * standard_error

    def test_affine_forward_matches_sampled_error(self, rng):
        """Test the forward risk includes the noise trace and matches sampled errors."""
        S_x = _spd(rng, 4)
        mean = rng.standard_normal(4)
        F = rng.standard_normal((3, 4))
        S_e = 0.2 * np.eye(3)
        spec = ProblemSpec(
            signal=MomentModel.from_covariance(S_x, mean),
            rank=1,
            task=Task.FORWARD,
            form=Form.AFFINE,
            forward_operator=F,
            noise=MomentModel.from_covariance(S_e, np.zeros(3)),
        )
        result = optimal_map(spec)
        draws = 100_000
        X = rng.multivariate_normal(mean, S_x, size=draws).T
        E = rng.multivariate_normal(np.zeros(3), S_e, size=draws).T
        errors = np.sum((result.apply(X) - (F @ X + E)) ** 2, axis=0)
        standard_error = errors.std(ddof=1) / np.sqrt(draws)
        assert abs(errors.mean() - bayes_risk(result, spec)) < 4.0 * standard_error

    def test_affine_output_is_recentred(self, rng):
        """Test A y + b = mu + A (y - F mu), so the mean observation maps to mu."""
        spec, _, mean, F, _ = self._affine_inverse(rng)
        result = optimal_map(spec)
        Y = rng.standard_normal((3, 50))
        expected = mean[:, None] + result.A @ (Y - (F @ mean)[:, None])
        np.testing.assert_allclose(result.apply(Y), expected, atol=1e-10)
        np.testing.assert_allclose(result.apply(F @ mean), mean, atol=1e-10)


class TestDuality:
    """Test the tasks coincide when the operator and noise vanish."""

    def test_identity_operator_gives_one_projector(self, rng):
        """Test forward, inverse, autoencoder and denoiser share the same rank-2 projector."""
        gamma_x = _spd(rng, 5)
        signal = MomentModel.from_moment(gamma_x)
        zero_noise = MomentModel.from_moment(np.zeros((5, 5)))
        maps = [
            optimal_map(ProblemSpec(signal=signal, rank=2, task=task, **extra)).A
            for task, extra in [
                (Task.FORWARD, {"forward_operator": np.eye(5)}),
                (Task.INVERSE, {"forward_operator": np.eye(5)}),
                (Task.AUTOENCODE, {}),
                (Task.DENOISE, {"noise": zero_noise}),
            ]
        ]
        _, eigenvectors = np.linalg.eigh(gamma_x)
        leading = eigenvectors[:, -2:]
        projector = leading @ leading.T
        for A in maps:
            np.testing.assert_allclose(A, projector, atol=1e-8)

    def test_noiseless_denoiser_is_autoencoder(self, rng):
        """Test the denoiser with zero noise moment reduces to the autoencoder."""
        signal = MomentModel.from_moment(_spd(rng, 4))
        denoiser = optimal_map(
            ProblemSpec(
                signal=signal,
                rank=3,
                task=Task.DENOISE,
                noise=MomentModel.from_moment(np.zeros((4, 4))),
            )
        )
        autoencoder = optimal_map(ProblemSpec(signal=signal, rank=3, task=Task.AUTOENCODE))
        np.testing.assert_allclose(denoiser.A, autoencoder.A, atol=1e-8)
        assert denoiser.risk == pytest.approx(autoencoder.risk, abs=1e-8)


class TestProblemSpec:
    """Test problem validation."""

    def test_rank_must_be_positive(self):
        """Test rank 0 is refused."""
        with pytest.raises(ContractViolationError):
            ProblemSpec(signal=MomentModel.from_moment(np.eye(2)), rank=0, task=Task.AUTOENCODE)

    def test_forward_needs_operator(self):
        """Test forward problems require F."""
        with pytest.raises(ContractViolationError):
            ProblemSpec(signal=MomentModel.from_moment(np.eye(2)), rank=1, task=Task.FORWARD)

    def test_denoise_needs_noise(self):
        """Test denoising requires noise moments."""
        with pytest.raises(ContractViolationError):
            ProblemSpec(signal=MomentModel.from_moment(np.eye(2)), rank=1, task=Task.DENOISE)

    def test_affine_needs_covariance(self):
        """Test the affine form refuses an uncentered moment."""
        with pytest.raises(ContractViolationError):
            ProblemSpec(
                signal=MomentModel.from_moment(np.eye(2)),
                rank=1,
                task=Task.AUTOENCODE,
                form=Form.AFFINE,
            )

    def test_linear_refuses_covariance(self):
        """Test the linear form refuses a covariance."""
        with pytest.raises(ContractViolationError):
            ProblemSpec(
                signal=MomentModel.from_covariance(np.eye(2), np.zeros(2)),
                rank=1,
                task=Task.AUTOENCODE,
            )

    def test_operator_shape_checked(self):
        """Test F must have n columns."""
        with pytest.raises(DimensionMismatchError):
            ProblemSpec(
                signal=MomentModel.from_moment(np.eye(3)),
                rank=1,
                task=Task.FORWARD,
                forward_operator=np.ones((2, 2)),
            )

    def test_noise_shape_checked(self):
        """Test noise must match the observation dimension."""
        with pytest.raises(DimensionMismatchError):
            ProblemSpec(
                signal=MomentModel.from_moment(np.eye(3)),
                rank=1,
                task=Task.INVERSE,
                forward_operator=np.ones((2, 3)),
                noise=MomentModel.from_moment(np.eye(3)),
            )

    def test_builder_kind_mismatch(self):
        """Test calling a builder on another task's spec fails."""
        spec = ProblemSpec(signal=MomentModel.from_moment(np.eye(2)), rank=1, task=Task.AUTOENCODE)
        with pytest.raises(KindMismatchError):
            optimal_forward(spec)

    def test_risk_kind_mismatch(self):
        """Test scoring a map against another kind of problem fails."""
        auto = ProblemSpec(signal=MomentModel.from_moment(np.eye(2)), rank=1, task=Task.AUTOENCODE)
        forward = ProblemSpec(
            signal=MomentModel.from_moment(np.eye(2)),
            rank=1,
            task=Task.FORWARD,
            forward_operator=np.eye(2),
        )
        with pytest.raises(KindMismatchError):
            bayes_risk(optimal_map(auto), forward)


class TestFactorize:
    """Test encoder-decoder factorization."""

    def test_product_reproduces_map(self, rng):
        """Test D E = A with D m x r and E r x n."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 5)),
            rank=2,
            task=Task.FORWARD,
            forward_operator=rng.standard_normal((4, 5)),
        )
        result = optimal_map(spec)
        decoder, encoder = result.factorize()
        assert decoder.shape == (4, 2)
        assert encoder.shape == (2, 5)
        np.testing.assert_allclose(decoder @ encoder, result.A, atol=1e-10)

    def test_change_of_basis(self, rng):
        """Test an invertible latent basis yields an equally valid pair."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 4)), rank=2, task=Task.AUTOENCODE
        )
        result = optimal_map(spec)
        Q = np.array([[2.0, 1.0], [0.0, 1.0]])
        decoder, encoder = result.factorize(Q)
        np.testing.assert_allclose(decoder @ encoder, result.A, atol=1e-10)

    def test_basis_shape_checked(self, rng):
        """Test a basis of the wrong size is refused."""
        spec = ProblemSpec(
            signal=MomentModel.from_moment(_spd(rng, 4)), rank=2, task=Task.AUTOENCODE
        )
        with pytest.raises(DimensionMismatchError):
            optimal_map(spec).factorize(np.eye(3))
