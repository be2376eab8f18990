"""First-order oracles, the anchored model and Hessian-vector verification.

The algorithm layer only ever touches ``value`` and ``gradient``.  Hessian-vector
products live in :func:`hessian_vec` and :func:`rayleigh_quotient`, which the
algorithms call exclusively with a separate certification counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NonFiniteEvaluationError

Vector = np.ndarray

FD_STEP = float(np.sqrt(np.finfo(float).eps))


@dataclass
class EvalCounter:
    """Oracle call accounting for one run."""

    gradient_calls: int = 0
    value_calls: int = 0
    hvp_calls: int = 0

    def snapshot(self) -> "EvalCounter":
        return replace(self)

    def __add__(self, other: "EvalCounter") -> "EvalCounter":
        return EvalCounter(self.gradient_calls + other.gradient_calls,
                           self.value_calls + other.value_calls,
                           self.hvp_calls + other.hvp_calls)

    def as_dict(self) -> dict:
        return {"gradient_calls": self.gradient_calls,
                "value_calls": self.value_calls,
                "hvp_calls": self.hvp_calls}


@dataclass(frozen=True, eq=False)
class OracleProblem:
    """A smooth objective on R^d exposed through value/gradient oracles.

    ``L1``/``L2`` are the gradient and Hessian Lipschitz constants, valid on the
    operating region ``{x : ||x||_region_ord <= operating_radius}``.
    ``delta_gap`` bounds ``f(x0) - inf f`` over that region.

    Optional ground truth (``hessian``, ``lambda_min``, ``f_star``,
    ``minimizers``) is only consumed by tests and the verification layer.
    """

    d: int
    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    L1: float
    L2: float
    delta_gap: Optional[float] = None
    operating_radius: float = np.inf
    hess_vec: Optional[Callable[[Vector, Vector], Vector]] = None
    name: str = "problem"
    x0: Optional[Vector] = None
    f_star: Optional[float] = None
    hessian: Optional[Callable[[Vector], np.ndarray]] = None
    lambda_min: Optional[Callable[[Vector], float]] = None
    region_ord: float = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.d) != self.d or self.d <= 0:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if not self.L1 > 0:
            raise DomainError(f"L1 must be positive, got {self.L1!r}")
        if not self.L2 >= 0:
            raise DomainError(f"L2 must be non-negative, got {self.L2!r}")

    def in_region(self, x: Vector, slack: float = 1e-12) -> bool:
        return bool(np.linalg.norm(x, ord=self.region_ord)
                    <= self.operating_radius * (1 + slack))

    def eval_value(self, x: Vector, counter: Optional[EvalCounter] = None) -> float:
        if counter is not None:
            counter.value_calls += 1
        fx = float(self.value(x))
        if not np.isfinite(fx):
            raise NonFiniteEvaluationError("objective value", x)
        return fx

    def eval_grad(self, x: Vector, counter: Optional[EvalCounter] = None) -> Vector:
        if counter is not None:
            counter.gradient_calls += 1
        g = np.asarray(self.gradient(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteEvaluationError("gradient", x)
        return g


class ShiftedModel:
    """The anchored model ``u -> f(x+u) - f(x) - grad f(x)^T u``.

    Construction spends one value and one gradient call at the anchor.
    """

    def __init__(self, problem: OracleProblem, anchor: Vector,
                 counter: Optional[EvalCounter] = None):
        self.problem = problem
        self.anchor = np.asarray(anchor, dtype=float)
        self.counter = counter if counter is not None else EvalCounter()
        self.anchor_value = problem.eval_value(self.anchor, self.counter)
        self.anchor_grad = problem.eval_grad(self.anchor, self.counter)
        self.anchor_grad_norm = float(np.linalg.norm(self.anchor_grad))

    def value(self, u: Vector) -> float:
        fu = self.problem.eval_value(self.anchor + u, self.counter)
        return fu - self.anchor_value - float(self.anchor_grad @ u)

    def grad(self, u: Vector) -> Vector:
        return self.problem.eval_grad(self.anchor + u, self.counter) - self.anchor_grad


def shifted_value(model: ShiftedModel, u: Vector) -> float:
    return model.value(u)


def shifted_grad(model: ShiftedModel, u: Vector) -> Vector:
    return model.grad(u)


def hessian_vec(problem: OracleProblem, x: Vector, v: Vector,
                counter: Optional[EvalCounter] = None) -> Vector:
    """Hessian-vector product, analytic when available, else central differences.

    The finite-difference fallback uses the unit direction ``v/||v||`` and step
    ``h = sqrt(machine eps) * (1 + ||x||)``, then rescales by ``||v||``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        raise DomainError("Hessian-vector product along the zero direction")
    if counter is not None:
        counter.hvp_calls += 1
    if problem.hess_vec is not None:
        hv = np.asarray(problem.hess_vec(x, v), dtype=float)
    else:
        h = FD_STEP * (1.0 + float(np.linalg.norm(x)))
        vhat = v / vnorm
        hv = (problem.gradient(x + h * vhat) - problem.gradient(x - h * vhat)) * (vnorm / (2 * h))
    if not np.all(np.isfinite(hv)):
        raise NonFiniteEvaluationError("Hessian-vector product", x)
    return hv


def rayleigh_quotient(problem: OracleProblem, x: Vector, u: Vector,
                      counter: Optional[EvalCounter] = None) -> float:
    u = np.asarray(u, dtype=float)
    nrm2 = float(u @ u)
    if nrm2 == 0.0:
        raise DomainError("Rayleigh quotient of the zero vector")
    return float(u @ hessian_vec(problem, x, u, counter)) / nrm2


# --- consistency checks used by tests and the acceptance suite -----------------

def gradient_check(problem: OracleProblem, x: Vector, direction: Vector,
                   h: Optional[float] = None) -> float:
    """Relative error between a central difference of ``value`` and ``grad^T dir``."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    if h is None:
        h = np.finfo(float).eps ** (1 / 3) * (1.0 + float(np.linalg.norm(x)))
    fd = (problem.value(x + h * direction) - problem.value(x - h * direction)) / (2 * h)
    an = float(problem.gradient(x) @ direction)
    return abs(fd - an) / max(abs(an), abs(fd), 1.0)


def hvp_check(problem: OracleProblem, x: Vector, v: Vector) -> float:
    """Relative error between the analytic HVP and its finite-difference estimate."""
    if problem.hess_vec is None:
        raise DomainError("problem exposes no analytic Hessian-vector product")
    fd_problem = replace(problem, hess_vec=None)
    an = hessian_vec(problem, x, v)
    fd = hessian_vec(fd_problem, x, v)
    return float(np.linalg.norm(an - fd) / max(np.linalg.norm(an), 1.0))
