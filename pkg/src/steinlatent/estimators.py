"""Latent-basis estimators.

The Stein estimators take a :class:`~steinlatent.scores.ScoreField` and
never look at the link functions:

* first order: top-r left singular vectors of (1/n) sum_i s(x_i) y_i'
* second order: top-r eigenvectors, by absolute eigenvalue, of
  (1/(nq)) sum_i sum_j y_ij T(x_i)

plus semi-supervised variants, and PCA / reduced-rank regression baselines.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .exceptions import InvalidDimensionError, InvalidRankError, NearZeroMatrixError
from .scores import ScoreField

DEGENERATE = "degenerate-spectrum"
NEAR_ZERO = "near-zero-matrix"
SMALL_SAMPLE = "n-below-p-squared"
RANK_DEFICIENT = "rank-deficient-design"

_TIE_TOL = 1e-12


class SampleSizeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatentBasis:
    """Column-orthonormal p x r basis with its spectrum and diagnostics."""

    matrix: np.ndarray
    values: np.ndarray
    method: str
    warnings: tuple[str, ...] = field(default=())

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SemiSupervisedData:
    """Labeled rows ``(X_labeled, Y_labeled)`` and the full feature pool ``X_all``.

    ``X_all`` is expected to contain the labeled rows as well.
    """

    X_labeled: np.ndarray
    Y_labeled: np.ndarray
    X_all: np.ndarray

    def __post_init__(self):
        Xl = np.atleast_2d(np.asarray(self.X_labeled, dtype=float))
        Yl = np.asarray(self.Y_labeled, dtype=float)
        if Yl.ndim == 1:
            Yl = Yl[:, None]
        if Yl.size == 0:
            Yl = Yl.reshape(Xl.shape[0], 0)
        Xa = np.atleast_2d(np.asarray(self.X_all, dtype=float))
        if Xl.shape[1] != Xa.shape[1]:
            raise InvalidDimensionError(f"feature dims differ: {Xl.shape[1]} vs {Xa.shape[1]}")
        if Yl.shape[0] != Xl.shape[0]:
            raise InvalidDimensionError(f"{Xl.shape[0]} labeled rows but {Yl.shape[0]} label rows")
        if Xl.shape[0] > Xa.shape[0]:
            raise InvalidDimensionError("more labeled rows than rows in the full pool")
        object.__setattr__(self, "X_labeled", Xl)
        object.__setattr__(self, "Y_labeled", Yl)
        object.__setattr__(self, "X_all", Xa)

    @property
    def n(self) -> int:
        return self.X_labeled.shape[0]

    @property
    def N(self) -> int:
        return self.X_all.shape[0]


def _fix_signs(U: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    return U * s


def _is_tie(values: np.ndarray, r: int) -> bool:
    if r >= values.size:
        return False
    scale = max(abs(values[0]), np.finfo(float).tiny)
    return abs(abs(values[r - 1]) - abs(values[r])) <= _TIE_TOL * scale


def _as_2d(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidDimensionError(f"{name} must be 2-D, got shape {X.shape}")
    return X


def _check_xy(X, Y):
    X = _as_2d(X, "X")
    Y = _as_2d(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise InvalidDimensionError(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    if X.shape[0] < 1:
        raise InvalidDimensionError("need at least one observation")
    return X, Y


def _check_rank(r: int, limit: int):
    if not 1 <= r <= limit:
        raise InvalidRankError(f"rank r={r} must lie in [1, {limit}]")


def left_singular_basis(M: np.ndarray, r: int, method: str, extra=()) -> LatentBasis:
    """Top-r left singular vectors of M, wrapped as a LatentBasis."""
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    _check_rank(r, s.size)
    flags = list(extra)
    if _is_tie(s, r):
        flags.append(DEGENERATE)
    return LatentBasis(_fix_signs(U[:, :r]), s[:r], method, tuple(flags))


def eigen_basis(M: np.ndarray, r: int, method: str, extra=()) -> LatentBasis:
    """Top-r eigenvectors of a symmetric M, ordered by |eigenvalue|."""
    M = 0.5 * (M + M.T)
    w, U = np.linalg.eigh(M)
    _check_rank(r, w.size)
    order = np.argsort(-np.abs(w), kind="stable")
    w, U = w[order], U[:, order]
    flags = list(extra)
    if _is_tie(w, r):
        flags.append(DEGENERATE)
    return LatentBasis(_fix_signs(U[:, :r]), w[:r], method, tuple(flags))


def first_order_fit(X, Y, r: int, field: ScoreField) -> LatentBasis:
    """First-order Stein estimator of span(B)."""
    X, Y = _check_xy(X, Y)
    _check_rank(r, min(X.shape[1], Y.shape[1]))
    M = field.cross_moment(X, Y)
    return left_singular_basis(M, r, "first-order")


def _score2_mean_and_var(field: ScoreField, X: np.ndarray, w: np.ndarray, chunk: int = 4096):
    """Mean of w_i T(x_i) and the sampling variance of that mean, entrywise."""
    n, p = X.shape
    s1 = np.zeros((p, p))
    s2 = np.zeros((p, p))
    for start in range(0, n, chunk):
        G = w[start:start + chunk, None, None] * field.score2(X[start:start + chunk])
        s1 += G.sum(axis=0)
        s2 += np.einsum("nij,nij->ij", G, G)
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0) * (n / max(n - 1, 1)) / n
    return mean, var


def signal_threshold(alpha: float) -> float:
    """Upper alpha-quantile of chi-square with one degree of freedom."""
    return float(chi2.isf(alpha, 1))


def _signal_check(M: np.ndarray, var: np.ndarray | None, p: int, alpha: float | None) -> str | None:
    """Return a message when M is indistinguishable from the zero matrix.

    Two rules. Every eigenvalue below ``1e-10 * p`` (exact zero). Or, with
    ``alpha`` set, the ratio ||M||_F^2 / sum_kl Var(M_kl) stays below the
    chi-square(1) quantile at ``alpha``. Under a zero population matrix
    the ratio is asymptotically a convex combination of chi-square(1)
    variables, whose upper tail beyond 1.54 is dominated by a single
    chi-square(1) whatever the correlation between entries, so the false
    alarm rate on a real signal-free matrix is at most ``alpha``.
    """
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    if np.all(np.abs(w) < 1e-10 * p):
        return f"{NEAR_ZERO}: all eigenvalues below {1e-10 * p:.3g}"
    if alpha is None or var is None:
        return None
    total = float(var.sum())
    ratio = float(np.sum(M * M)) / total if total > 0 else np.inf
    t = signal_threshold(alpha)
    if ratio < t:
        return f"{NEAR_ZERO}: signal ratio {ratio:.3g} below {t:.3g} (alpha={alpha:g})"
    return None


def _resolve_near_zero(msg: str | None, on_near_zero: str, extra: list):
    if msg is None:
        return
    if on_near_zero == "raise":
        raise NearZeroMatrixError(msg)
    if on_near_zero != "warn":
        raise ValueError(f"on_near_zero must be 'raise' or 'warn', got {on_near_zero!r}")
    extra.append(NEAR_ZERO)


def second_order_fit(X, Y, r: int, field: ScoreField, signal_alpha: float | None = 1e-6,
                     on_near_zero: str = "raise") -> LatentBasis:
    """Second-order Stein estimator of span(B).

    A moment matrix with no detectable signal (see :func:`_signal_check`)
    raises :class:`NearZeroMatrixError`, or with ``on_near_zero="warn"``
    returns the basis flagged ``near-zero-matrix``. Linear links are the
    typical cause: the population matrix is zero and the sample version
    is Monte Carlo noise.
    """
    X, Y = _check_xy(X, Y)
    n, p = X.shape
    _check_rank(r, p)
    extra = []
    if n <= p * p:
        warnings.warn(f"second-order fit with n={n} <= p^2={p * p}", SampleSizeWarning, stacklevel=2)
        extra.append(SMALL_SAMPLE)
    w = Y.mean(axis=1)
    if signal_alpha is None:
        M, var = field.weighted_score2_mean(X, w), None
    else:
        M, var = _score2_mean_and_var(field, X, w)
    M = 0.5 * (M + M.T)
    _resolve_near_zero(_signal_check(M, var, p, signal_alpha), on_near_zero, extra)
    return eigen_basis(M, r, "second-order", extra)


def semi_first_order_fit(data: SemiSupervisedData, r: int, field: ScoreField,
                         label_weight: float = 1.0) -> LatentBasis:
    """Semi-supervised first-order estimator.

    The moment matrix is the horizontal concatenation
    [label_weight * (1/n) sum_{labeled} s(x) y~'  |  (1/N) sum_{all} s(x) x'],
    a p x (q - p) block beside a p x p block.
    """
    p = data.X_all.shape[1]
    m = data.Y_labeled.shape[1]
    if m > 0 and data.n == 0:
        raise InvalidDimensionError("labels requested but no labeled rows given")
    blocks = []
    if m > 0:
        blocks.append(label_weight * field.cross_moment(data.X_labeled, data.Y_labeled))
    blocks.append(field.cross_moment(data.X_all, data.X_all))
    M = np.hstack(blocks)
    _check_rank(r, p)
    return left_singular_basis(M, r, "semi-first-order")


def semi_second_order_fit(data: SemiSupervisedData, r: int, field: ScoreField,
                          label_weight: float = 1.0, signal_alpha: float | None = 1e-6,
                          on_near_zero: str = "raise") -> LatentBasis:
    """Semi-supervised second-order estimator.

    Sums label_weight * (1/(n m)) sum_i sum_j y~_ij T(x_i) over labeled rows
    and (1/(N p)) sum_i sum_j x_ij T(x_i) over the full pool, then takes
    the top-r eigenvectors by absolute eigenvalue. The signal check adds
    the two blocks' variances, ignoring their overlap.
    """
    p = data.X_all.shape[1]
    m = data.Y_labeled.shape[1]
    if m > 0 and data.n == 0:
        raise InvalidDimensionError("labels requested but no labeled rows given")
    _check_rank(r, p)
    M, var = _score2_mean_and_var(field, data.X_all, data.X_all.mean(axis=1))
    if m > 0:
        Ml, vl = _score2_mean_and_var(field, data.X_labeled, data.Y_labeled.mean(axis=1))
        M = M + label_weight * Ml
        var = var + label_weight**2 * vl
    M = 0.5 * (M + M.T)
    extra = [SMALL_SAMPLE] if data.N <= p * p else []
    _resolve_near_zero(_signal_check(M, var if signal_alpha is not None else None, p, signal_alpha),
                       on_near_zero, extra)
    return eigen_basis(M, r, "semi-second-order", extra)


def pca_fit(X, r: int) -> LatentBasis:
    """Top-r eigenvectors of the uncentered second moment (1/n) X'X."""
    X = _as_2d(X, "X")
    _check_rank(r, X.shape[1])
    S = X.T @ X / X.shape[0]
    return eigen_basis(S, r, "pca")


def rrr_fit(X, Y, r: int) -> LatentBasis:
    """Reduced-rank regression estimate of span(B).

    C_ols = argmin ||Y - X C||_F, V_r = top-r right singular vectors of
    X C_ols, C_hat = C_ols V_r V_r', and the basis is the top-r left singular
    frame of C_hat. A rank-deficient design falls back to the pseudo-inverse.
    """
    X, Y = _check_xy(X, Y)
    n, p = X.shape
    _check_rank(r, min(p, Y.shape[1]))
    C_ols, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    extra = []
    if n < p or rank < p:
        warnings.warn(f"design has rank {rank} < p={p}; using the pseudo-inverse", stacklevel=2)
        extra.append(RANK_DEFICIENT)
    _, _, Vt = np.linalg.svd(X @ C_ols, full_matrices=False)
    Vr = Vt[:r].T
    C_hat = C_ols @ Vr @ Vr.T
    basis = left_singular_basis(C_hat, r, "rrr", extra)
    return basis


@dataclass(frozen=True)
class LinearDecoder:
    coef: np.ndarray
    intercept: np.ndarray

    def predict(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.coef + self.intercept


def fit_linear_decoder(Z, Y) -> LinearDecoder:
    """Least-squares affine map from embeddings Z (n x r) to labels Y (n x m).

    Solved on centered data so that, for collinear Z, the slope matrix is
    the minimum-norm least-squares solution.
    """
    Z, Y = _check_xy(Z, Y)
    if Z.shape[0] <= Z.shape[1]:
        raise InvalidDimensionError(f"need n > r, got n={Z.shape[0]}, r={Z.shape[1]}")
    zbar, ybar = Z.mean(axis=0), Y.mean(axis=0)
    W, *_ = np.linalg.lstsq(Z - zbar, Y - ybar, rcond=None)
    return LinearDecoder(W, ybar - zbar @ W)
