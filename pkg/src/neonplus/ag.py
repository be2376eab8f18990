"""Accelerated gradient for strongly convex and almost-convex objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonConvergenceError, ParameterError
from .oracle import EvalCounter, OracleProblem


@dataclass(frozen=True)
class AgSscParams:
    epsilon: float
    L1: float
    sigma1: float
    max_iters: Optional[int] = None

    def __post_init__(self):
        if not self.sigma1 > 0:
            raise ParameterError(f"strong convexity modulus must be positive, got {self.sigma1!r}")
        if not self.L1 >= self.sigma1:
            raise ParameterError(f"smoothness {self.L1!r} below strong convexity {self.sigma1!r}")
        if not self.epsilon > 0:
            raise ParameterError("gradient tolerance must be positive")

    @property
    def kappa(self) -> float:
        return self.L1 / self.sigma1

    @property
    def zeta(self) -> float:
        s = math.sqrt(self.kappa)
        return (s - 1) / (s + 1)

    def iteration_cap(self, grad_norm0: float) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return math.ceil(20 * math.sqrt(self.kappa)
                         * math.log(max(grad_norm0, 1.0) / self.epsilon) + 100)


@dataclass(frozen=True)
class AgAcParams:
    epsilon: float
    gamma: float
    L1: float
    max_outer: int = 10_000

    def __post_init__(self):
        if not (self.epsilon > 0 and self.gamma > 0 and self.L1 > 0):
            raise ParameterError("epsilon, gamma and L1 must all be positive")

    @property
    def eps_inner(self) -> float:
        return self.epsilon * math.sqrt(self.gamma / (50 * (self.L1 + 2 * self.gamma)))


@dataclass
class AgResult:
    x: np.ndarray
    iterations: int
    grad_norm: float
    inner_iterations: list = field(default_factory=list)
    inner_grad_norms: list = field(default_factory=list)


def ag_ssc(g: OracleProblem, y1, params: AgSscParams,
           counter: Optional[EvalCounter] = None) -> AgResult:
    """Nesterov's constant-momentum method until ``||grad g(y)|| <= epsilon``."""
    y = np.array(y1, dtype=float)
    z = y.copy()
    L, zeta = params.L1, params.zeta
    gy = g.eval_grad(y, counter)
    gnorm = float(np.linalg.norm(gy))
    cap = params.iteration_cap(gnorm)
    best_x, best_norm = y.copy(), gnorm
    gz = gy
    for j in range(cap + 1):
        if gnorm <= params.epsilon:
            return AgResult(y, j, gnorm)
        if j == cap:
            break
        y_next = z - gz / L
        z = y_next + zeta * (y_next - y)
        y = y_next
        gy = g.eval_grad(y, counter)
        gnorm = float(np.linalg.norm(gy))
        if gnorm < best_norm:
            best_x, best_norm = y.copy(), gnorm
        gz = g.eval_grad(z, counter)
    raise NonConvergenceError(
        f"AG-SSC did not reach gradient norm {params.epsilon:g} in {cap} iterations",
        best=best_x, diagnostics={"best_grad_norm": best_norm, "kappa": params.kappa})


def proximal_problem(f: OracleProblem, center, weight: float) -> OracleProblem:
    """``g(z) = f(z) + weight * ||z - center||^2`` with smoothness ``L1 + 2 weight``."""
    center = np.array(center, dtype=float)

    def value(z):
        diff = z - center
        return f.value(z) + weight * float(diff @ diff)

    def gradient(z):
        return f.gradient(z) + 2 * weight * (z - center)

    hv = None
    if f.hess_vec is not None:
        def hv(z, v):
            return f.hess_vec(z, v) + 2 * weight * v

    return OracleProblem(d=f.d, value=value, gradient=gradient, hess_vec=hv,
                         L1=f.L1 + 2 * weight, L2=f.L2, operating_radius=f.operating_radius,
                         region_ord=f.region_ord, name=f"prox({f.name})")


def ag_ac(f: OracleProblem, z1, params: AgAcParams,
          counter: Optional[EvalCounter] = None) -> AgResult:
    """Proximal-point outer loop with AG-SSC inner solves.

    Each outer step minimizes ``f(z) + gamma ||z - z_j||^2`` to accuracy
    ``eps_inner``, treating it as ``(L1 + 2 gamma)``-smooth and ``gamma``-strongly
    convex.
    """
    z = np.array(z1, dtype=float)
    inner_its, inner_norms = [], []
    ssc = AgSscParams(params.eps_inner, params.L1 + 2 * params.gamma, params.gamma)
    gnorm = math.inf
    for j in range(params.max_outer + 1):
        gnorm = float(np.linalg.norm(f.eval_grad(z, counter)))
        if gnorm <= params.epsilon:
            return AgResult(z, j, gnorm, inner_its, inner_norms)
        if j == params.max_outer:
            break
        sub = proximal_problem(f, z, params.gamma)
        res = ag_ssc(sub, z, ssc, counter)
        inner_its.append(res.iterations)
        inner_norms.append(res.grad_norm)
        z = res.x
    raise NonConvergenceError(
        f"AG-AC did not reach gradient norm {params.epsilon:g} in {params.max_outer} rounds",
        best=z, diagnostics={"grad_norm": gnorm, "inner_iterations": inner_its})


def gradient_descent(g: OracleProblem, y1, epsilon: float, step: float,
                     max_iters: int = 10_000_000,
                     counter: Optional[EvalCounter] = None) -> AgResult:
    """Plain fixed-step gradient descent; the control arm for rate comparisons."""
    y = np.array(y1, dtype=float)
    for j in range(max_iters + 1):
        gy = g.eval_grad(y, counter)
        gnorm = float(np.linalg.norm(gy))
        if gnorm <= epsilon:
            return AgResult(y, j, gnorm)
        y = y - step * gy
    raise NonConvergenceError(f"gradient descent exceeded {max_iters} iterations", best=y)
