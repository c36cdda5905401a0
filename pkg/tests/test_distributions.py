import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from steinlatent.distributions import (
    DispersionRecipe,
    DistributionSpec,
    Kind,
    generate_dispersion,
    log_density,
    mahalanobis,
    sample,
    sample_haar_orthogonal,
)
from steinlatent.exceptions import InvalidDimensionError, NumericalError, ParameterError
from steinlatent.gig import gig_mean

# quadrature oracles, p = 1, unit dispersion
HYP_LOGPDF_CHI3_PSI1_AT2 = -2.28045744925986
HYP_NEG_ENTROPY_CHI3_PSI1 = -2.008771619636366
T_NEG_ENTROPY_DOF10 = -1.409690717318576


def _specs_1d():
    S = np.eye(1)
    return [DistributionSpec(Kind.GAUSSIAN, S), DistributionSpec(Kind.STUDENT_T, S, dof=10.0),
            DistributionSpec(Kind.STUDENT_T, S, dof=2.5),
            DistributionSpec(Kind.HYPERBOLIC, S, chi=3.0, psi=1.0)]


class TestHaar:
    def test_one_dimensional_signs(self, rng):
        vals = np.array([sample_haar_orthogonal(1, rng)[0, 0] for _ in range(2000)])
        assert set(np.unique(vals)) == {-1.0, 1.0}
        assert abs(np.mean(vals > 0) - 0.5) < 0.05

    @given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 12))
    def test_orthogonal(self, seed, p):
        Q = sample_haar_orthogonal(p, np.random.default_rng(seed))
        assert np.linalg.norm(Q.T @ Q - np.eye(p)) < 1e-10

    def test_first_moment_zero(self, rng):
        q11 = [sample_haar_orthogonal(3, rng)[0, 0] for _ in range(20000)]
        assert abs(np.mean(q11)) < 0.02


class TestDispersion:
    def test_zero_scale_gives_identity(self, rng):
        S = generate_dispersion(DispersionRecipe(2, shift=1.0, scale=0.0), rng)
        assert np.allclose(S, np.eye(2), atol=1e-12)

    def test_eigenvalues_at_least_shift(self, rng):
        S = generate_dispersion(DispersionRecipe(4), rng)
        assert np.linalg.eigvalsh(S).min() >= 1 - 1e-10

    def test_mean_eigenvalue(self, rng):
        ev = np.concatenate([np.linalg.eigvalsh(generate_dispersion(DispersionRecipe(3), rng))
                             for _ in range(10000)])
        assert abs(ev.mean() - (1 + np.sqrt(2 / np.pi))) < 0.02

    @given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 15))
    def test_cholesky_succeeds(self, seed, p):
        S = generate_dispersion(DispersionRecipe(p), np.random.default_rng(seed))
        np.linalg.cholesky(S)


class TestValidation:
    def test_asymmetric(self):
        with pytest.raises(ParameterError, match="symmetric"):
            DistributionSpec(Kind.GAUSSIAN, np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_not_positive_definite_names_eigenvalue(self):
        with pytest.raises(NumericalError, match="smallest eigenvalue -1"):
            DistributionSpec(Kind.GAUSSIAN, np.diag([1.0, -1.0]))

    def test_dof_and_hyperbolic_params(self):
        with pytest.raises(ParameterError):
            DistributionSpec(Kind.STUDENT_T, np.eye(2), dof=2.0)
        with pytest.raises(ParameterError):
            DistributionSpec(Kind.HYPERBOLIC, np.eye(2), chi=0.0, psi=1.0)

    def test_bad_shape(self):
        with pytest.raises(InvalidDimensionError):
            DistributionSpec(Kind.GAUSSIAN, np.ones((2, 3)))

    def test_gig_index_derived(self):
        assert DistributionSpec(Kind.HYPERBOLIC, np.eye(5), chi=1.0, psi=1.0).gig_index == 3.0

    def test_round_trip(self, rng):
        spec = DistributionSpec(Kind.STUDENT_T, generate_dispersion(DispersionRecipe(3), rng), dof=7.0)
        back = DistributionSpec.from_dict(spec.to_dict())
        assert back.kind is spec.kind and back.dof == 7.0
        assert np.array_equal(back.dispersion, spec.dispersion)


class TestSample:
    def test_gaussian_covariance(self, rng):
        X = sample(DistributionSpec(Kind.GAUSSIAN, np.eye(3)), 100_000, rng)
        assert np.linalg.norm(X.T @ X / len(X) - np.eye(3)) < 0.05

    def test_student_t_variance_matches_dispersion(self, rng):
        # under the (nu - 2) density the variance equals the dispersion
        x = sample(DistributionSpec(Kind.STUDENT_T, np.eye(1), dof=10.0), 100_000, rng)
        assert abs(x.var() - 1.0) < 0.03

    def test_hyperbolic_covariance(self, rng):
        S = np.array([[2.0, 0.5], [0.5, 1.0]])
        X = sample(DistributionSpec(Kind.HYPERBOLIC, S, chi=5.0, psi=2.0), 100_000, rng)
        target = gig_mean(1.5, 5.0, 2.0) * S
        assert np.linalg.norm(X.T @ X / len(X) - target) / np.linalg.norm(target) < 0.03

    @pytest.mark.parametrize("spec", _specs_1d(), ids=lambda s: f"{s.kind.value}")
    def test_deterministic(self, spec):
        a = sample(spec, 50, np.random.default_rng(11))
        b = sample(spec, 50, np.random.default_rng(11))
        assert np.array_equal(a, b)


class TestLogDensity:
    def test_gaussian_closed_forms(self):
        assert log_density(DistributionSpec(Kind.GAUSSIAN, np.eye(1)), np.zeros(1)) == pytest.approx(
            -0.5 * np.log(2 * np.pi), abs=1e-12)
        assert log_density(DistributionSpec(Kind.GAUSSIAN, np.eye(2)), np.ones(2)) == pytest.approx(
            -np.log(2 * np.pi) - 1, abs=1e-12)

    def test_hyperbolic_quadrature(self):
        spec = DistributionSpec(Kind.HYPERBOLIC, np.eye(1), chi=3.0, psi=1.0)
        assert log_density(spec, np.array([2.0])) == pytest.approx(HYP_LOGPDF_CHI3_PSI1_AT2, abs=1e-8)

    @pytest.mark.parametrize("spec", _specs_1d(), ids=lambda s: f"{s.kind.value}-{s.dof}")
    def test_integrates_to_one_1d(self, spec):
        total = integrate.quad(lambda t: np.exp(log_density(spec, np.array([t]))), -np.inf, np.inf,
                               limit=200)[0]
        assert abs(total - 1) < 1e-3

    @pytest.mark.parametrize("kind,kw", [(Kind.GAUSSIAN, {}), (Kind.STUDENT_T, {"dof": 6.0}),
                                         (Kind.HYPERBOLIC, {"chi": 5.0, "psi": 2.0})])
    def test_integrates_to_one_2d(self, kind, kw):
        spec = DistributionSpec(kind, np.array([[1.0, 0.3], [0.3, 0.5]]), **kw)
        g = np.linspace(-40, 40, 1601)
        xx, yy = np.meshgrid(g, g)
        dens = np.exp(log_density(spec, np.column_stack([xx.ravel(), yy.ravel()])))
        assert abs(dens.sum() * (g[1] - g[0]) ** 2 - 1) < 1e-3

    @pytest.mark.parametrize("spec,target", [
        (DistributionSpec(Kind.HYPERBOLIC, np.eye(1), chi=3.0, psi=1.0), HYP_NEG_ENTROPY_CHI3_PSI1),
        (DistributionSpec(Kind.STUDENT_T, np.eye(1), dof=10.0), T_NEG_ENTROPY_DOF10),
    ], ids=["hyperbolic", "student_t"])
    def test_sample_density_consistency(self, spec, target, rng):
        ld = log_density(spec, sample(spec, 10_000, rng))
        assert abs(ld.mean() - target) < 3 * ld.std() / np.sqrt(len(ld))

    def test_vectorised_matches_pointwise(self, rng):
        spec = DistributionSpec(Kind.HYPERBOLIC, generate_dispersion(DispersionRecipe(3), rng), chi=7.0, psi=3.0)
        X = sample(spec, 5, rng)
        assert np.allclose(log_density(spec, X), [log_density(spec, x) for x in X], rtol=0, atol=1e-12)

    def test_mahalanobis(self, rng):
        S = generate_dispersion(DispersionRecipe(3), rng)
        spec = DistributionSpec(Kind.GAUSSIAN, S)
        x = rng.standard_normal(3)
        assert mahalanobis(spec, x[None])[0] == pytest.approx(x @ np.linalg.solve(S, x), rel=1e-12)
