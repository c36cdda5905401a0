"""First- and second-order score fields.

Every field handled here is elliptical: with v = P x and Q = x' P x for a
symmetric matrix P (a precision or a pseudo-inverse),

    s(x) = a(Q) v
    T(x) = b(Q) v v' - a(Q) P

so both orders are evaluated from two scalar profiles. The profiles are
the closed forms for each family:

    gaussian     a = 1                       b = 1
    student-t    a = (p+nu) / (nu-2+Q)       b = (p+nu)(p+nu+2) / (nu-2+Q)^2
    hyperbolic   a = sqrt(psi / (chi+Q))     b = (psi + a) / (chi+Q)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionSpec, Kind, log_density
from .exceptions import InvalidDimensionError, ParameterError


def pinv_sym(S: np.ndarray, n: int | None = None) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues below ``max(n, p) * eps * max_eigenvalue`` are treated as
    zero, ``n`` being the number of rows S was estimated from.
    """
    S = 0.5 * (S + S.T)
    w, U = np.linalg.eigh(S)
    cutoff = max(S.shape[0], n or 0) * np.finfo(float).eps * np.abs(w).max()
    keep = np.abs(w) > cutoff
    inv = (U[:, keep] / w[keep]) @ U[:, keep].T
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class ScoreField:
    """Score evaluator bound to a known distribution or to a plug-in estimate.

    Build with :meth:`closed_form` or :func:`plugin_gaussian_field`.
    """

    source: str
    precision: np.ndarray
    spec: DistributionSpec | None = None
    covariance: np.ndarray | None = None
    _kind: Kind = field(default=Kind.GAUSSIAN, repr=False)

    @classmethod
    def closed_form(cls, spec: DistributionSpec) -> "ScoreField":
        return cls("closed_form", spec.precision, spec=spec, _kind=spec.kind)

    @property
    def dim(self) -> int:
        return self.precision.shape[0]

    def _profiles(self, Q: np.ndarray):
        if self._kind is Kind.GAUSSIAN:
            one = np.ones_like(Q)
            return one, one
        p = self.dim
        if self._kind is Kind.STUDENT_T:
            nu = float(self.spec.dof)
            d = nu - 2.0 + Q
            return (p + nu) / d, (p + nu) * (p + nu + 2.0) / d**2
        chi, psi = float(self.spec.chi), float(self.spec.psi)
        a = np.sqrt(psi / (chi + Q))
        return a, (psi + a) / (chi + Q)

    def _prepare(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidDimensionError(f"expected points of dimension {self.dim}, got shape {x.shape}")
        V = x @ self.precision
        Q = np.einsum("...i,...i->...", V, x)
        return V, Q

    def score1(self, x) -> np.ndarray:
        """s(x) for a single point or row-wise for an n x p array."""
        V, Q = self._prepare(x)
        a, _ = self._profiles(Q)
        return a[..., None] * V

    def score2(self, x) -> np.ndarray:
        """T(x), shape (p, p) for a point or (n, p, p) for rows."""
        V, Q = self._prepare(x)
        a, b = self._profiles(Q)
        outer = V[..., :, None] * V[..., None, :]
        return b[..., None, None] * outer - a[..., None, None] * self.precision

    def cross_moment(self, X, Y) -> np.ndarray:
        """(1/n) sum_i s(x_i) y_i'."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.score1(X).T @ Y / X.shape[0]

    def weighted_score2_mean(self, X, w) -> np.ndarray:
        """(1/n) sum_i w_i T(x_i) without materialising n p x p matrices."""
        X = np.asarray(X, dtype=float)
        w = np.asarray(w, dtype=float)
        V, Q = self._prepare(X)
        a, b = self._profiles(Q)
        n = X.shape[0]
        M = (V * (w * b)[:, None]).T @ V / n - (w @ a / n) * self.precision
        return 0.5 * (M + M.T)


def plugin_gaussian_field(X, center: bool = False) -> ScoreField:
    """Gaussian score with the covariance replaced by its moment estimate.

    The estimate is the uncentered second moment (1/n) X'X unless
    ``center`` is set. Rank deficiency is handled by the pseudo-inverse.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidDimensionError(f"X must be a non-empty n x p matrix, got shape {X.shape}")
    if center:
        X = X - X.mean(axis=0)
    S = X.T @ X / X.shape[0]
    S = 0.5 * (S + S.T)
    return ScoreField("plugin_gaussian", pinv_sym(S, X.shape[0]), covariance=S)


def _neg_log_density(spec, x):
    return -log_density(spec, x)


def finite_diff_score1(spec: DistributionSpec, x, h: float = 1e-5) -> np.ndarray:
    """Central difference of -log P at ``x``."""
    if not h > 0:
        raise ParameterError("h must be positive")
    x = np.asarray(x, dtype=float)
    p = x.shape[0]
    out = np.empty(p)
    for k in range(p):
        e = np.zeros(p)
        e[k] = h
        out[k] = (_neg_log_density(spec, x + e) - _neg_log_density(spec, x - e)) / (2 * h)
    return out


def finite_diff_score2(spec: DistributionSpec, x, h: float = 1e-4) -> np.ndarray:
    """Finite-difference estimate of (Hessian of P) / P at ``x``.

    Uses Hess(P)/P = g g' + Hess(log P) with g = grad log P, and second
    differences of log P (P itself may underflow away from the mode).
    """
    if not h > 0:
        raise ParameterError("h must be positive")
    x = np.asarray(x, dtype=float)
    p = x.shape[0]
    f = lambda z: log_density(spec, z)  # noqa: E731
    f0 = f(x)
    g = np.empty(p)
    H = np.empty((p, p))
    E = np.eye(p) * h
    for k in range(p):
        fp, fm = f(x + E[k]), f(x - E[k])
        g[k] = (fp - fm) / (2 * h)
        H[k, k] = (fp - 2 * f0 + fm) / h**2
        for l in range(k):
            H[k, l] = H[l, k] = (
                f(x + E[k] + E[l]) - f(x + E[k] - E[l]) - f(x - E[k] + E[l]) + f(x - E[k] - E[l])
            ) / (4 * h * h)
    return np.outer(g, g) + H
