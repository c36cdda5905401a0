"""Fast invariant battery run by ``steinlatent check``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import DistributionSpec, Kind, generate_dispersion, DispersionRecipe, sample
from .estimators import first_order_fit, pca_fit
from .metrics import subspace_dist
from .scores import ScoreField, finite_diff_score1, finite_diff_score2, plugin_gaussian_field


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))


def _specs(p: int, rng) -> list[DistributionSpec]:
    S = generate_dispersion(DispersionRecipe(p), rng)
    return [DistributionSpec(Kind.GAUSSIAN, S), DistributionSpec(Kind.STUDENT_T, S, dof=10.0),
            DistributionSpec(Kind.HYPERBOLIC, S, chi=2 * p + 1.0, psi=float(p))]


def check_scores(rng, p: int = 4, n_points: int = 10) -> CheckResult:
    worst1 = worst2 = 0.0
    for spec in _specs(p, rng):
        field = ScoreField.closed_form(spec)
        for x in sample(spec, n_points, rng):
            worst1 = max(worst1, np.abs(field.score1(x) - finite_diff_score1(spec, x)).max())
            worst2 = max(worst2, np.abs(field.score2(x) - finite_diff_score2(spec, x)).max())
    ok = worst1 < 1e-5 and worst2 < 1e-4
    return CheckResult("score-finite-difference", ok, f"max err s={worst1:.2e} T={worst2:.2e}")


def _rot(t: float, reflect: bool) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [s, -c]]) if reflect else np.array([[c, -s], [s, c]])


def check_procrustes(rng, pairs: int = 5) -> CheckResult:
    worst = 0.0
    below = False
    for _ in range(pairs):
        A, B = rng.standard_normal((6, 1)), rng.standard_normal((6, 1))
        brute = min(np.linalg.norm(A - B), np.linalg.norm(A + B))
        d = subspace_dist(A, B).distance
        worst, below = max(worst, abs(d - brute)), below or d > brute + 1e-12
        A, B = rng.standard_normal((6, 2)), rng.standard_normal((6, 2))
        grid = np.linspace(0.0, 2 * np.pi, 1800, endpoint=False)
        brute = min(np.linalg.norm(A - B @ _rot(t, f)) for t, f in itertools.product(grid, (False, True)))
        d = subspace_dist(A, B).distance
        worst, below = max(worst, abs(d - brute)), below or d > brute + 1e-12
    ok = worst < 1e-3 and not below
    return CheckResult("procrustes-oracle", ok, f"max gap {worst:.2e}")


def check_pca_identity(rng, n: int = 200, p: int = 8, r: int = 3) -> CheckResult:
    """Plug-in first-order on Y = X equals PCA when X has rank r."""
    X = rng.standard_normal((n, r)) @ rng.standard_normal((r, p))
    d = subspace_dist(first_order_fit(X, X, r, plugin_gaussian_field(X)).matrix, pca_fit(X, r).matrix).distance
    return CheckResult("pca-equivalence-rank-r", d < 1e-8, f"distance {d:.2e}")


def check_stein_first_order(rng, n: int = 20000, p: int = 5, r: int = 2) -> CheckResult:
    """E[s(x) y'] = B A' for y = A B' x under every design law."""
    worst = 0.0
    B = np.linalg.qr(rng.standard_normal((p, r)))[0]
    A = rng.standard_normal((3, r))
    for spec in _specs(p, rng):
        X = sample(spec, n, rng)
        M = ScoreField.closed_form(spec).cross_moment(X, X @ B @ A.T)
        truth = B @ A.T
        worst = max(worst, np.linalg.norm(M - truth) / np.linalg.norm(truth))
    return CheckResult("stein-first-order", worst < 0.1, f"max relative error {worst:.3f}")


CHECKS: tuple[Callable, ...] = (check_scores, check_procrustes, check_pca_identity, check_stein_first_order)


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for check in CHECKS:
        try:
            out.append(check(rng))
        except Exception as exc:  # a crashing check is a failed check
            out.append(CheckResult(check.__name__.removeprefix("check_"), False, f"{type(exc).__name__}: {exc}"))
    return out
