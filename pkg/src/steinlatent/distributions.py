"""Design distributions: Gaussian, Student-t and multivariate hyperbolic.

All three are centred at zero and parameterised by a dispersion matrix.
The Student-t uses the ``nu - 2`` convention, under which ``dispersion``
is exactly the covariance:

    P(x) = (nu-2)**(nu/2) Gamma((nu+p)/2)
           / (pi**(p/2) |S|**(1/2) Gamma(nu/2) (nu - 2 + Q(x))**((nu+p)/2))

with Q(x) = x' S^{-1} x. The hyperbolic law is the normal variance mixture
x = sqrt(w) A z with A A' = S and w ~ GIG((p+1)/2, chi, psi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln, kve

from .exceptions import InvalidDimensionError, NumericalError, ParameterError
from .gig import sample_gig


class Kind(str, Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class DistributionSpec:
    """Zero-mean design distribution.

    ``dof`` is used only by the Student-t, ``chi`` and ``psi`` only by the
    hyperbolic law. The GIG index of the hyperbolic mixing variable is
    always ``(p + 1) / 2``.
    """

    kind: Kind
    dispersion: np.ndarray
    dof: float | None = None
    chi: float | None = None
    psi: float | None = None
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _inv: np.ndarray = field(init=False, repr=False, compare=False)
    _logdet: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        S = np.array(self.dispersion, dtype=float, copy=True)
        if S.ndim == 0:
            S = S.reshape(1, 1)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
            raise InvalidDimensionError(f"dispersion must be a non-empty square matrix, got shape {S.shape}")
        scale = max(np.abs(S).max(), np.finfo(float).tiny)
        if np.abs(S - S.T).max() > 1e-12 * scale:
            raise ParameterError("dispersion must be symmetric")
        S = 0.5 * (S + S.T)
        S.setflags(write=False)
        object.__setattr__(self, "dispersion", S)

        if kind is Kind.STUDENT_T:
            if self.dof is None or not self.dof > 2:
                raise ParameterError(f"Student-t requires dof > 2, got {self.dof}")
        if kind is Kind.HYPERBOLIC:
            if self.chi is None or self.psi is None or not (self.chi > 0 and self.psi > 0):
                raise ParameterError(f"hyperbolic requires chi > 0 and psi > 0, got chi={self.chi}, psi={self.psi}")

        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            ev = np.linalg.eigvalsh(S)
            raise NumericalError(
                f"dispersion is not positive definite: smallest eigenvalue {ev.min():.6g}"
            ) from None
        inv = np.linalg.inv(S)
        inv = 0.5 * (inv + inv.T)
        L.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "_chol", L)
        object.__setattr__(self, "_inv", inv)
        object.__setattr__(self, "_logdet", 2.0 * float(np.log(np.diag(L)).sum()))

    @property
    def dim(self) -> int:
        return self.dispersion.shape[0]

    @property
    def gig_index(self) -> float:
        return (self.dim + 1) / 2.0

    @property
    def precision(self) -> np.ndarray:
        return self._inv

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "dispersion": self.dispersion.tolist()}
        if self.kind is Kind.STUDENT_T:
            out["dof"] = self.dof
        if self.kind is Kind.HYPERBOLIC:
            out["chi"], out["psi"] = self.chi, self.psi
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        return cls(Kind(d["kind"]), np.asarray(d["dispersion"], dtype=float),
                   dof=d.get("dof"), chi=d.get("chi"), psi=d.get("psi"))


@dataclass(frozen=True)
class DispersionRecipe:
    """Random dispersion Q diag(|z| + shift) Q' with z ~ N(0, scale^2)."""

    dim: int
    shift: float = 1.0
    scale: float = 1.0


def sample_haar_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed p x p orthogonal matrix.

    QR of a standard Gaussian matrix, with column j of Q multiplied by
    sign(R_jj) so the result does not depend on the QR sign convention.
    """
    if p < 1:
        raise InvalidDimensionError(f"p must be >= 1, got {p}")
    Z = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def generate_dispersion(recipe: DispersionRecipe, rng: np.random.Generator) -> np.ndarray:
    if recipe.dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {recipe.dim}")
    if not recipe.shift > 0:
        raise ParameterError(f"shift must be positive, got {recipe.shift}")
    Q = sample_haar_orthogonal(recipe.dim, rng)
    lam = np.abs(recipe.scale * rng.standard_normal(recipe.dim)) + recipe.shift
    S = (Q * lam) @ Q.T
    return 0.5 * (S + S.T)


def sample(spec: DistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an n x p design matrix with i.i.d. rows from ``spec``."""
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    p = spec.dim
    Z = rng.standard_normal((n, p)) @ spec._chol.T
    if spec.kind is Kind.GAUSSIAN:
        return Z
    if spec.kind is Kind.STUDENT_T:
        nu = float(spec.dof)
        # textbook t_nu with scale S (nu-2)/nu has covariance S
        g = rng.chisquare(nu, size=n)
        return Z * np.sqrt((nu - 2.0) / g)[:, None]
    w = sample_gig(spec.gig_index, spec.chi, spec.psi, rng, size=n)
    return Z * np.sqrt(w)[:, None]


def mahalanobis(spec: DistributionSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.einsum("...i,ij,...j->...", X, spec._inv, X)


def log_density(spec: DistributionSpec, x) -> np.ndarray | float:
    """Normalised log-density at ``x`` (a p-vector or an n x p array)."""
    x = np.asarray(x, dtype=float)
    p = spec.dim
    if x.shape[-1] != p:
        raise InvalidDimensionError(f"expected last dimension {p}, got {x.shape}")
    Q = mahalanobis(spec, x)
    if spec.kind is Kind.GAUSSIAN:
        out = -0.5 * (p * math.log(2 * math.pi) + spec._logdet + Q)
    elif spec.kind is Kind.STUDENT_T:
        nu = float(spec.dof)
        const = (0.5 * nu * math.log(nu - 2.0) + gammaln(0.5 * (nu + p)) - gammaln(0.5 * nu)
                 - 0.5 * p * math.log(math.pi) - 0.5 * spec._logdet)
        out = const - 0.5 * (nu + p) * np.log(nu - 2.0 + Q)
    else:
        chi, psi = float(spec.chi), float(spec.psi)
        lam = spec.gig_index
        omega = math.sqrt(chi * psi)
        log_k = math.log(kve(lam, omega)) - omega
        # K_{1/2}(u) u^{1/2} = sqrt(pi/2) exp(-u) for u = sqrt((chi + Q) psi)
        const = (0.5 * lam * math.log(psi / chi) - 0.5 * math.log(psi)
                 - 0.5 * p * math.log(2 * math.pi) - 0.5 * spec._logdet - log_k
                 + 0.5 * math.log(math.pi / 2.0))
        out = const - np.sqrt((chi + Q) * psi)
    return float(out) if np.ndim(out) == 0 else out
