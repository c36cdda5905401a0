"""Synthetic multi-index data: bases, link functions, noise and splits.

Responses follow y_ij = f_j(B' x_i) + eps_ij with three link mechanisms:

* ``linear``: f_j(z) = a_j' z, a_j ~ N(0, 0.5^2 I_r)
* ``nonlinear_fixed``: f_j(z) = a_j' m_j(z) with elementwise m_j; the
  first q/2 responses use distinct elementary functions and response
  q/2 + j uses m_j + m_{j+1}, the neighbour wrapping from q/2 back to 1
* ``nonlinear_random_pairs``: as above but response q/2 + j uses
  m_{j1} + m_{j2} for a random pair j1 != j2

Nonlinear weights have i.i.d. entries |z| + 3, z ~ N(0, 1).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Callable

import numpy as np

from .distributions import DispersionRecipe, DistributionSpec, Kind, generate_dispersion, sample
from .exceptions import InvalidDimensionError, InvalidRankError, ParameterError


def _shift(f: Callable) -> Callable:
    return lambda x: f(x - 1.0)


ELEMENTARY: dict[int, Callable[[np.ndarray], np.ndarray]] = {
    1: _shift(np.sin),
    2: _shift(np.cosh),
    3: _shift(np.cos),
    4: _shift(np.tanh),
    5: _shift(np.arctan),
    6: lambda x: (x - 1.0) ** 3,
    7: lambda x: (x - 1.0) ** 5,
    8: lambda x: 1.0 / (1.0 + np.exp(-x)),
    9: lambda x: np.sqrt((x - 1.0) ** 2 + 1.0),
    10: np.exp,
}


class Mechanism(str, Enum):
    LINEAR = "linear"
    NONLINEAR_FIXED = "nonlinear_fixed"
    NONLINEAR_RANDOM_PAIRS = "nonlinear_random_pairs"


@dataclass(frozen=True)
class LinkSpec:
    """Materialised link functions.

    ``coefficients`` is q x r (row j is a_j). ``terms[j]`` lists the
    elementary-function ids summed inside f_j; empty for linear links.
    """

    mechanism: Mechanism
    coefficients: np.ndarray
    terms: tuple[tuple[int, ...], ...] = ()

    @property
    def q(self) -> int:
        return self.coefficients.shape[0]

    @property
    def r(self) -> int:
        return self.coefficients.shape[1]

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism.value,
            "coefficients": self.coefficients.tolist(),
            "terms": [list(t) for t in self.terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkSpec":
        return cls(Mechanism(d["mechanism"]), np.asarray(d["coefficients"], dtype=float),
                   tuple(tuple(int(i) for i in t) for t in d.get("terms", [])))


def generate_basis(p: int, r: int, mu_o: float, sigma_o: float, rng: np.random.Generator,
                   n_cols: int | None = None) -> np.ndarray:
    """Top-r left singular vectors of a p x n_cols matrix with N(mu_o, sigma_o^2) entries.

    ``n_cols`` defaults to r; the simulation studies draw p x q.
    """
    n_cols = r if n_cols is None else n_cols
    if not 1 <= r <= min(p, n_cols):
        raise InvalidRankError(f"need 1 <= r <= min(p, n_cols), got r={r}, p={p}, n_cols={n_cols}")
    Bo = mu_o + sigma_o * rng.standard_normal((p, n_cols))
    U, _, _ = np.linalg.svd(Bo, full_matrices=False)
    return U[:, :r]


def make_links(mechanism, q: int, r: int, rng: np.random.Generator,
               functions=None, shared_weights: bool = False) -> LinkSpec:
    """Draw a link specification.

    ``functions`` picks the elementary ids used by the first q/2
    responses (default 1, ..., q/2). ``shared_weights`` reuses a single
    weight vector for every response instead of one draw per response.
    """
    mechanism = Mechanism(mechanism)
    if q < 1 or r < 1:
        raise InvalidDimensionError(f"q and r must be positive, got q={q}, r={r}")
    if mechanism is Mechanism.LINEAR:
        return LinkSpec(mechanism, 0.5 * rng.standard_normal((q, r)))

    if q % 2:
        raise ParameterError(f"q must be even for nonlinear links, got q={q}")
    half = q // 2
    if functions is None:
        if half > len(ELEMENTARY):
            raise ParameterError(f"q/2={half} exceeds the {len(ELEMENTARY)} elementary functions")
        functions = tuple(range(1, half + 1))
    functions = tuple(int(f) for f in functions)
    if len(functions) != half:
        raise ParameterError(f"need q/2={half} elementary functions, got {len(functions)}")
    bad = [f for f in functions if f not in ELEMENTARY]
    if bad:
        raise ParameterError(f"unknown elementary function ids {bad}")

    if shared_weights:
        A = np.tile(np.abs(rng.standard_normal(r)) + 3.0, (q, 1))
    else:
        A = np.abs(rng.standard_normal((q, r))) + 3.0

    first = [(f,) for f in functions]
    if mechanism is Mechanism.NONLINEAR_FIXED:
        second = [(functions[j], functions[(j + 1) % half]) for j in range(half)]
    else:
        if half < 2:
            raise ParameterError("random pairs need q >= 4")
        second = []
        for _ in range(half):
            j1 = int(rng.integers(half))
            j2 = int(rng.choice([k for k in range(half) if k != j1]))
            second.append((functions[j1], functions[j2]))
    return LinkSpec(mechanism, A, tuple(first + second))


def apply_links(links: LinkSpec, Z) -> np.ndarray:
    """Noise-free responses F(Z) for latent coordinates Z (n x r)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != links.r:
        raise InvalidDimensionError(f"Z must be n x {links.r}, got {Z.shape}")
    if links.mechanism is Mechanism.LINEAR:
        return Z @ links.coefficients.T
    out = np.empty((Z.shape[0], links.q))
    with np.errstate(over="ignore", invalid="ignore"):
        cache = {f: ELEMENTARY[f](Z) for f in {f for t in links.terms for f in t}}
        for j, term in enumerate(links.terms):
            H = cache[term[0]] if len(term) == 1 else sum(cache[f] for f in term)
            out[:, j] = H @ links.coefficients[j]
    return out


@dataclass(frozen=True)
class SyntheticDataset:
    X: np.ndarray
    Y: np.ndarray
    B_true: np.ndarray
    provenance: dict = field(default_factory=dict)


def generate_dataset(dist: DistributionSpec, links: LinkSpec, B, n: int, sigma_eps: float,
                     rng: np.random.Generator, provenance: dict | None = None) -> SyntheticDataset:
    B = np.asarray(B, dtype=float)
    if B.shape != (dist.dim, links.r):
        raise InvalidDimensionError(f"B must be {dist.dim} x {links.r}, got {B.shape}")
    X = sample(dist, n, rng)
    Y = apply_links(links, X @ B)
    if sigma_eps > 0:
        Y = Y + sigma_eps * rng.standard_normal(Y.shape)
    return SyntheticDataset(X, Y, B, dict(provenance or {}))


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to regenerate one synthetic dataset."""

    p: int = 30
    q: int = 20
    r: int = 3
    n: int = 1000
    distribution: str = "gaussian"
    mechanism: str = "linear"
    sigma_eps: float = 0.5
    dof: float = 10.0
    chi: float | None = None
    psi: float | None = None
    dispersion_shift: float = 1.0
    dispersion_scale: float = 1.0
    mu_o: float = 0.0
    sigma_o: float = 1.0
    functions: tuple[int, ...] | None = None
    shared_weights: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.functions is not None:
            object.__setattr__(self, "functions", tuple(int(f) for f in self.functions))
        Kind(self.distribution)
        Mechanism(self.mechanism)
        if not 1 <= self.r <= min(self.p, self.q):
            raise InvalidRankError(f"need 1 <= r <= min(p, q), got r={self.r}, p={self.p}, q={self.q}")
        if self.n < 1:
            raise InvalidDimensionError("n must be positive")
        if self.mechanism != Mechanism.LINEAR.value and self.q % 2:
            raise ParameterError(f"q must be even for nonlinear links, got q={self.q}")

    @property
    def resolved_chi(self) -> float:
        return float(2 * self.p + 1) if self.chi is None else float(self.chi)

    @property
    def resolved_psi(self) -> float:
        return float(self.p) if self.psi is None else float(self.psi)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chi"], d["psi"] = self.resolved_chi, self.resolved_psi
        d["functions"] = None if self.functions is None else list(self.functions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParameterError(f"unknown simulation keys: {sorted(unknown)}")
        return cls(**d)


def build_distribution(cfg: SimulationConfig, rng: np.random.Generator) -> DistributionSpec:
    S = generate_dispersion(DispersionRecipe(cfg.p, cfg.dispersion_shift, cfg.dispersion_scale), rng)
    kind = Kind(cfg.distribution)
    if kind is Kind.STUDENT_T:
        return DistributionSpec(kind, S, dof=cfg.dof)
    if kind is Kind.HYPERBOLIC:
        return DistributionSpec(kind, S, chi=cfg.resolved_chi, psi=cfg.resolved_psi)
    return DistributionSpec(kind, S)


def simulate(cfg: SimulationConfig, rng: np.random.Generator | None = None):
    """Draw dispersion, basis, links and data in a fixed order.

    Returns ``(dataset, distribution, links)``. With ``rng`` omitted the
    generator is seeded from ``cfg.seed``, so the provenance alone
    regenerates the dataset bit for bit.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    dist = build_distribution(cfg, rng)
    B = generate_basis(cfg.p, cfg.r, cfg.mu_o, cfg.sigma_o, rng, n_cols=cfg.q)
    links = make_links(cfg.mechanism, cfg.q, cfg.r, rng, functions=cfg.functions,
                       shared_weights=cfg.shared_weights)
    ds = generate_dataset(dist, links, B, cfg.n, cfg.sigma_eps, rng)
    prov = {"simulation": cfg.to_dict(), "distribution": dist.to_dict(), "links": links.to_dict()}
    return SyntheticDataset(ds.X, ds.Y, ds.B_true, prov), dist, links


def regenerate(provenance: dict) -> SyntheticDataset:
    return simulate(SimulationConfig.from_dict(provenance["simulation"]))[0]


PRESETS: dict[str, dict] = {
    # parameters of the published simulation study
    "paper-default": dict(p=30, q=20, r=3, sigma_eps=0.5, dof=10.0, dispersion_shift=1.0,
                          dispersion_scale=1.0, mu_o=0.0, sigma_o=1.0),
    "desk": dict(p=10, q=10, r=2, sigma_eps=0.5, dof=10.0, dispersion_shift=1.0,
                 dispersion_scale=1.0, mu_o=0.0, sigma_o=1.0),
}


@dataclass(frozen=True)
class SplitProtocol:
    n_test: int
    n_train: int
    n_labeled: int

    def __post_init__(self):
        if min(self.n_test, self.n_train, self.n_labeled) < 0:
            raise ParameterError("split sizes must be non-negative")


def split_semi_supervised(n: int, protocol: SplitProtocol, rng: np.random.Generator):
    """Disjoint uniformly random (test, train, labeled) index arrays."""
    total = protocol.n_test + protocol.n_train + protocol.n_labeled
    if total > n:
        raise ParameterError(f"split sizes sum to {total} > n={n}")
    perm = rng.permutation(n)
    a, b = protocol.n_test, protocol.n_test + protocol.n_train
    return perm[:a], perm[a:b], perm[b:total]
