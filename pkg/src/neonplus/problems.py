"""Benchmark objectives with analytically known curvature.

Two families:

* rotated quadratics ``f(x) = 1/2 x^T H x`` with ``H = Q^T diag(lam) Q``, which
  make the momentum recurrence exactly linear;
* separable quartics ``f(z) = sum(z_i^4/4 - a_i z_i^2/2)`` (optionally in a
  rotated basis ``z = Q x``) with a strict saddle at the origin and minima at
  ``z_i = +-sqrt(a_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .oracle import OracleProblem


def random_orthogonal(d: int, seed) -> np.ndarray:
    """Orthonormalized seeded Gaussian matrix (sign-fixed QR)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class SpectrumSpec:
    eigenvalues: Sequence[float]
    rotation_seed: Optional[int] = 0
    operating_radius: float = 10.0

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ConfigurationError("spectrum must be a non-empty list")
        if not np.all(np.isfinite(lam)):
            raise ConfigurationError("spectrum entries must be finite")
        if not self.operating_radius > 0:
            raise ConfigurationError("operating radius must be positive")


@dataclass(frozen=True)
class QuarticSpec:
    a: Sequence[float]
    bound: float
    rotation_seed: Optional[int] = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ConfigurationError("well depths must be a non-empty list")
        if not np.all(a > 0):
            raise ConfigurationError("well depths a_i must be positive")
        if not self.bound > np.sqrt(a.max()):
            raise ConfigurationError(
                f"box radius {self.bound} must exceed max sqrt(a_i) = {np.sqrt(a.max())}")


def make_quadratic(spec: SpectrumSpec, x0=None) -> OracleProblem:
    lam = np.sort(np.asarray(spec.eigenvalues, dtype=float))
    d = lam.size
    q = np.eye(d) if spec.rotation_seed is None else random_orthogonal(d, spec.rotation_seed)
    H = q.T @ (lam[:, None] * q)
    H = 0.5 * (H + H.T)
    lam_min = float(lam[0])
    R = float(spec.operating_radius)
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    # inf over the operating ball; -inf globally when H is indefinite
    f_star = 0.5 * min(lam_min, 0.0) * R ** 2

    def value(x):
        return 0.5 * float(x @ (H @ x))

    def gradient(x):
        return H @ x

    def hess_vec(x, v):
        return H @ v

    return OracleProblem(
        d=d, value=value, gradient=gradient, hess_vec=hess_vec,
        L1=float(np.max(np.abs(lam))), L2=0.0,
        delta_gap=value(x0) - f_star, operating_radius=R,
        name="quadratic", x0=x0, f_star=f_star,
        hessian=lambda x: H, lambda_min=lambda x: lam_min,
        meta={"H": H, "Q": q, "eigenvalues": lam},
    )


def make_separable_quartic(spec: QuarticSpec, x0=None) -> OracleProblem:
    a = np.asarray(spec.a, dtype=float)
    d = a.size
    B = float(spec.bound)
    rotated = spec.rotation_seed is not None
    q = random_orthogonal(d, spec.rotation_seed) if rotated else None
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    f_star = -float(np.sum(a ** 2)) / 4

    L1 = max(3 * B ** 2 - float(a.min()), float(a.max()))
    # third derivative is 6 z_i per coordinate; the rotated bound is padded by sqrt(d)
    L2 = 6 * B * (np.sqrt(d) if rotated else 1.0)

    if rotated:
        def to_z(x):
            return q @ x

        def from_z(z):
            return q.T @ z
    else:
        def to_z(x):
            return x

        def from_z(z):
            return z

    def value(x):
        z = to_z(x)
        return float(np.sum(0.25 * z ** 4 - 0.5 * a * z ** 2))

    def gradient(x):
        z = to_z(x)
        return from_z(z ** 3 - a * z)

    def hess_vec(x, v):
        z = to_z(x)
        return from_z((3 * z ** 2 - a) * to_z(v))

    def hessian(x):
        z = to_z(x)
        D = np.diag(3 * z ** 2 - a)
        return D if not rotated else q.T @ D @ q

    def lambda_min(x):
        return float(np.min(3 * to_z(x) ** 2 - a))

    minimizer = from_z(np.sqrt(a))
    problem = OracleProblem(
        d=d, value=value, gradient=gradient, hess_vec=hess_vec,
        L1=L1, L2=L2, delta_gap=None, operating_radius=B, region_ord=np.inf,
        name="quartic", x0=x0, f_star=f_star, hessian=hessian, lambda_min=lambda_min,
        meta={"a": a, "Q": q, "minimizer": minimizer},
    )
    if not rotated and not problem.in_region(x0):
        raise ConfigurationError(f"starting point lies outside the box of radius {B}")
    if rotated and np.max(np.abs(q @ x0)) > B:
        raise ConfigurationError(f"starting point lies outside the box of radius {B}")
    # clamp round-off below the analytic minimum
    object.__setattr__(problem, "delta_gap", max(value(x0) - f_star, 0.0))
    return problem


def quartic_minimizers(problem: OracleProblem, signs=None) -> np.ndarray:
    """An analytic minimizer of a quartic problem; ``signs`` picks the orthant."""
    a = problem.meta["a"]
    z = np.sqrt(a) * (np.ones_like(a) if signs is None else np.asarray(signs, dtype=float))
    q = problem.meta["Q"]
    return z if q is None else q.T @ z


def problem_constants(problem: OracleProblem, x0=None):
    """``(L1, L2, delta_gap)`` with ``delta_gap = f(x0) - f*`` from the analytic minimum."""
    if problem.f_star is None:
        raise ConfigurationError(f"{problem.name}: no analytic minimum value")
    x0 = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    if x0 is None:
        raise ConfigurationError(f"{problem.name}: no starting point declared")
    q = problem.meta.get("Q") if problem.name == "quartic" else None
    probe = x0 if q is None else q @ x0
    if np.linalg.norm(probe, ord=problem.region_ord) > problem.operating_radius * (1 + 1e-12):
        raise ConfigurationError(f"{problem.name}: starting point outside the operating region")
    return problem.L1, problem.L2, problem.value(x0) - problem.f_star


def random_spectrum(d: int, lam_min: float, rng, lam_max: float = 1.0) -> np.ndarray:
    """``lam_min`` and ``lam_max`` pinned, the rest uniform on ``[max(lam_min, 0), lam_max]``."""
    if d == 1:
        return np.array([lam_min])
    inner = rng.uniform(max(lam_min, 0.0), lam_max, size=max(d - 2, 0))
    return np.sort(np.concatenate([[lam_min], inner, [lam_max]]))
