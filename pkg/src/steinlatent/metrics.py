"""Subspace distance and downstream-quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDimensionError


@dataclass(frozen=True)
class SubspaceDistanceResult:
    distance: float
    aligning_rotation: np.ndarray

    def __float__(self) -> float:
        return self.distance


def subspace_dist(theta1, theta2) -> SubspaceDistanceResult:
    """min over orthogonal V of ||theta1 - theta2 V||_F.

    Solved as an orthogonal Procrustes problem: with the SVD
    theta2' theta1 = U S W', the minimiser is V = U W'. The distance is
    evaluated as the residual norm ||theta1 - theta2 V||_F rather than
    through ||theta1||^2 + ||theta2||^2 - 2 trace(S), which loses half the
    significant digits near zero.
    """
    A = np.asarray(theta1, dtype=float)
    B = np.asarray(theta2, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape != B.shape:
        raise InvalidDimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    U, _, Wt = np.linalg.svd(B.T @ A)
    V = U @ Wt
    return SubspaceDistanceResult(float(np.linalg.norm(A - B @ V)), V)


def nrse(X_hat, X) -> float:
    """Mean over rows of ||x_hat_i - x_i|| / ||x_i||.

    Rows may themselves be images; every axis after the first is flattened.
    """
    X_hat = np.asarray(X_hat, dtype=float)
    X = np.asarray(X, dtype=float)
    if X_hat.shape != X.shape:
        raise InvalidDimensionError(f"shape mismatch: {X_hat.shape} vs {X.shape}")
    n = X.shape[0]
    ref = np.linalg.norm(X.reshape(n, -1), axis=1)
    zero = np.flatnonzero(ref == 0)
    if zero.size:
        raise ValueError(f"reference row {int(zero[0])} has zero norm")
    err = np.linalg.norm((X_hat - X).reshape(n, -1), axis=1)
    return float(np.mean(err / ref))


def ssim(A, B, data_range: float) -> float:
    """Global-statistics SSIM.

    Implements

        (2 mu_a mu_b + c1)(2 cov_ab + c2) / ((mu_a^2 + mu_b^2 + c2)(var_a + var_b + c2))

    with c1 = (0.01 R)^2 and c2 = (0.03 R)^2. Note ``c2`` in the first
    denominator factor; as a consequence ssim(A, A) is slightly below one
    whenever the mean term matters.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise InvalidDimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    if not data_range > 0:
        raise ValueError("data_range must be positive")
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mu_a, mu_b = A.mean(), B.mean()
    var_a, var_b = A.var(), B.var()
    cov = np.mean((A - mu_a) * (B - mu_b))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c2) * (var_a + var_b + c2)
    return float(num / den)


def pmse(Y, Y_hat) -> float:
    """Mean over rows of the squared prediction error norm."""
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape != Y_hat.shape:
        raise InvalidDimensionError(f"shape mismatch: {Y.shape} vs {Y_hat.shape}")
    D = (Y - Y_hat).reshape(Y.shape[0], -1)
    return float(np.mean(np.sum(D * D, axis=1)))
