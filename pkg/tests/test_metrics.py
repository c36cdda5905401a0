import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import subspace_angles

from steinlatent.distributions import sample_haar_orthogonal
from steinlatent.exceptions import InvalidDimensionError
from steinlatent.metrics import nrse, pmse, ssim, subspace_dist


def _frame(rng, p, r):
    return np.linalg.qr(rng.standard_normal((p, r)))[0]


def _brute_force(A, B):
    if A.shape[1] == 1:
        return min(np.linalg.norm(A - B), np.linalg.norm(A + B))
    best = np.inf
    for t, refl in itertools.product(np.linspace(0, 2 * np.pi, 1800, endpoint=False), (False, True)):
        c, s = np.cos(t), np.sin(t)
        V = np.array([[c, s], [s, -c]]) if refl else np.array([[c, -s], [s, c]])
        best = min(best, np.linalg.norm(A - B @ V))
    return best


class TestSubspaceDist:
    def test_identity_and_rotation(self, rng):
        A = _frame(rng, 6, 3)
        assert subspace_dist(A, A).distance < 1e-12
        V0 = sample_haar_orthogonal(3, rng)
        res = subspace_dist(A, A @ V0)
        assert res.distance < 1e-12
        assert np.allclose(A @ V0 @ res.aligning_rotation, A, atol=1e-12)

    def test_sixty_degrees(self):
        t = np.deg2rad(60)
        d = subspace_dist(np.array([[1.0], [0.0]]), np.array([[np.cos(t)], [np.sin(t)]])).distance
        assert d == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("r", [1, 2])
    def test_brute_force_oracle(self, r):
        rng = np.random.default_rng(r)
        for _ in range(10):
            A, B = rng.standard_normal((5, r)), rng.standard_normal((5, r))
            d, brute = subspace_dist(A, B).distance, _brute_force(A, B)
            assert d <= brute + 1e-12
            assert brute - d < 1e-3

    @given(seed=st.integers(0, 2**32 - 1), p=st.integers(2, 9), r=st.integers(1, 4))
    def test_principal_angle_oracle(self, seed, p, r):
        r = min(r, p)
        rng = np.random.default_rng(seed)
        A, B = _frame(rng, p, r), _frame(rng, p, r)
        expect = np.sqrt(2 * np.sum(1 - np.cos(subspace_angles(A, B))))
        assert subspace_dist(A, B).distance == pytest.approx(expect, abs=1e-7)

    @given(seed=st.integers(0, 2**32 - 1), p=st.integers(2, 9), r=st.integers(1, 4))
    def test_symmetry_isometry_bounds(self, seed, p, r):
        r = min(r, p)
        rng = np.random.default_rng(seed)
        A, B = _frame(rng, p, r), _frame(rng, p, r)
        d = subspace_dist(A, B).distance
        assert d == pytest.approx(subspace_dist(B, A).distance, abs=1e-9)
        Q = sample_haar_orthogonal(p, rng)
        assert d == pytest.approx(subspace_dist(Q @ A, Q @ B).distance, abs=1e-9)
        assert 0 <= d <= np.sqrt(2 * r) + 1e-12

    def test_upper_bound_attained(self):
        I = np.eye(4)
        assert subspace_dist(I[:, :2], I[:, 2:]).distance == pytest.approx(2.0, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            subspace_dist(np.ones((3, 1)), np.ones((3, 2)))


class TestNrse:
    def test_trivial_values(self, rng):
        X = rng.standard_normal((5, 4))
        assert nrse(X, X) == 0
        assert nrse(2 * X, X) == pytest.approx(1.0)
        assert nrse(np.zeros_like(X), X) == pytest.approx(1.0)

    def test_images_flattened(self, rng):
        X = rng.standard_normal((3, 4, 4))
        assert nrse(X * 1.5, X) == pytest.approx(0.5)

    def test_zero_row(self):
        X = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="row 1"):
            nrse(X, X)


class TestSsim:
    def test_identical_images_direct_formula(self, rng):
        A = rng.uniform(size=(8, 8))
        c1, c2 = 0.01**2, 0.03**2
        mu, var = A.mean(), A.var()
        expect = (2 * mu**2 + c1) * (2 * var + c2) / ((2 * mu**2 + c2) * (2 * var + c2))
        assert ssim(A, A, 1.0) == pytest.approx(expect, rel=1e-12)
        assert ssim(A, A, 1.0) < 1

    def test_constant_images(self):
        A = np.full((4, 4), 0.5)
        c1, c2 = 0.01**2, 0.03**2
        expect = (0.5 + c1) * c2 / ((0.5 + c2) * c2)
        assert ssim(A, A, 1.0) == pytest.approx(expect, rel=1e-12)

    def test_anticorrelated_negative(self, rng):
        A = rng.uniform(-0.5, 0.5, size=(8, 8))
        A -= A.mean()
        assert ssim(A, 1 - A, 1.0) < 0

    def test_validation(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((2, 2)), np.zeros((2, 2)), 0.0)


class TestPmse:
    def test_trivial(self, rng):
        Y = rng.standard_normal((10, 3))
        assert pmse(Y, Y) == 0
        assert pmse(Y, Y + 1) == pytest.approx(3.0)

    def test_noise_level(self, rng):
        Y = rng.standard_normal((10_000, 4))
        assert pmse(Y, Y + 0.3 * rng.standard_normal(Y.shape)) == pytest.approx(4 * 0.09, rel=0.03)
