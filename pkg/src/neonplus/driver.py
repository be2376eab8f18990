"""Negative-curvature descent and the NEAG double loop.

NEAG alternates two stages until the gradient is small:

1. NC descent: extract a negative-curvature direction at the current point
   and take a fixed step ``c*gamma/L2`` along it, until extraction returns Zero;
2. if the gradient is still large, minimize the hinge-regularized objective
   ``f_k`` with the proximal accelerated method.

The final report is re-certified by the spectral layer using its own counter.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ag import AgAcParams, ag_ac
from .errors import CertificationError, NonConvergenceError, ParameterError
from .neon import DEFAULT_C_HAT, NeonParams, derive_neon_params, neon_plus
from .oracle import EvalCounter, OracleProblem
from .spectral import min_hessian_eig

logger = logging.getLogger(__name__)


def _effective_L2(problem: OracleProblem, L2_eff: float) -> float:
    return problem.L2 if problem.L2 > 0 else L2_eff


@dataclass(frozen=True)
class NcdParams:
    gamma: float
    c: float
    delta: float
    delta_prime: float
    neon: NeonParams
    L2: float
    max_steps: int = 100_000

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError(f"step constant c must be positive, got {self.c!r}")
        if not 0 < self.delta_prime <= self.delta:
            raise ParameterError("delta' must lie in (0, delta]")

    @property
    def step(self) -> float:
        return self.c * self.gamma / self.L2


def derive_ncd_params(problem: OracleProblem, gamma, delta, c=1.0, c_hat=DEFAULT_C_HAT,
                      eta=None, L2_eff=1.0, delta_gap=None, early_exit=False,
                      max_steps=100_000) -> NcdParams:
    """``delta' = delta / (1 + 12 L2^2 Delta / gamma^3)`` and the matching extraction parameters."""
    L2 = _effective_L2(problem, L2_eff)
    gap = problem.delta_gap if delta_gap is None else delta_gap
    if gap is None or not gap >= 0:
        raise ParameterError(f"{problem.name}: a non-negative optimality gap is required")
    delta_prime = delta / (1 + 12 * L2 ** 2 * gap / gamma ** 3)
    neon = derive_neon_params(gamma, delta_prime, problem.d, problem.L1, problem.L2,
                              c_hat=c_hat, eta=eta, L2_eff=L2_eff, early_exit=early_exit)
    return NcdParams(gamma=gamma, c=c, delta=delta, delta_prime=delta_prime, neon=neon,
                     L2=L2, max_steps=max_steps)


@dataclass
class NcdResult:
    x: np.ndarray
    nc_steps: int
    neon_iterations: int
    f_values: list = field(default_factory=list)
    rayleighs: list = field(default_factory=list)
    uncertified: int = 0


def neon_ncd(problem: OracleProblem, x0, params: NcdParams, rng, *,
             counter: Optional[EvalCounter] = None,
             cert_counter: Optional[EvalCounter] = None) -> NcdResult:
    """Step along extracted NC directions until extraction returns Zero.

    Each direction is normalized and the step is
    ``x - (c gamma / L2) sign(v^T grad f(x)) v`` with ``sign(0) = +1``.  A step
    that does not strictly decrease ``f`` raises :class:`CertificationError`.
    """
    counter = EvalCounter() if counter is None else counter
    cert_counter = EvalCounter() if cert_counter is None else cert_counter
    x = np.array(x0, dtype=float)
    fx = problem.eval_value(x, counter)
    f_values, rqs = [fx], []
    iters = uncertified = 0
    s = params.step
    for j in range(params.max_steps + 1):
        out = neon_plus(problem, x, params.neon, rng, counter=counter,
                        cert_counter=cert_counter, trace_maxlen=1)
        iters += out.iterations
        if out.is_zero:
            return NcdResult(x, j, iters, f_values, rqs, uncertified)
        if j == params.max_steps:
            break
        uncertified += not out.certified
        rqs.append(out.rayleigh)
        v = out.direction / np.linalg.norm(out.direction)
        g = problem.eval_grad(x, counter)
        sign = 1.0 if float(v @ g) >= 0 else -1.0
        x_new = x - s * sign * v
        f_new = problem.eval_value(x_new, counter)
        if not f_new < fx:
            raise CertificationError(
                f"NC step {j} did not decrease f: {fx!r} -> {f_new!r} "
                f"(rayleigh {out.rayleigh!r}, step {s!r})",
                report={"x": x, "direction": v, "f_before": fx, "f_after": f_new})
        x, fx = x_new, f_new
        f_values.append(fx)
    raise NonConvergenceError(f"NC descent exceeded {params.max_steps} steps", best=x,
                              diagnostics={"f": fx})


def build_fk(problem: OracleProblem, anchor, L1: float, eps2_over_L2: float) -> OracleProblem:
    """``f(x) + L1 * max(||x - anchor|| - radius, 0)^2`` reported as ``5 L1``-smooth."""
    if not eps2_over_L2 > 0:
        raise ParameterError("hinge radius must be positive")
    anchor = np.array(anchor, dtype=float)
    radius = float(eps2_over_L2)

    def value(x):
        excess = np.linalg.norm(x - anchor) - radius
        fx = problem.value(x)
        return fx + L1 * excess ** 2 if excess > 0 else fx

    def gradient(x):
        diff = x - anchor
        dist = float(np.linalg.norm(diff))
        g = problem.gradient(x)
        if dist <= radius:
            return g
        return g + (2 * L1 * (dist - radius) / dist) * diff

    return OracleProblem(d=problem.d, value=value, gradient=gradient, L1=5 * L1, L2=problem.L2,
                         operating_radius=problem.operating_radius,
                         region_ord=problem.region_ord, name=f"fk({problem.name})",
                         meta={"anchor": anchor, "radius": radius})


@dataclass(frozen=True)
class NeagParams:
    epsilon: float
    gamma: float
    delta: float
    K: int
    c: float = 1.0
    c_hat: float = DEFAULT_C_HAT
    eta: Optional[float] = None
    L2_eff: float = 1.0
    ac_modulus: float = 3.0       # AG-AC modulus in units of gamma
    ac_smoothness: float = 5.0    # AG-AC smoothness in units of L1
    ac_epsilon_factor: float = 0.5
    early_exit: bool = False
    max_ncd_steps: int = 100_000
    max_outer: Optional[int] = None
    tol_eig: float = 1e-6

    @property
    def delta_per_round(self) -> float:
        return self.delta / self.K


def neag_round_budget(delta_gap, L1, L2, epsilon, gamma) -> int:
    """``ceil(1 + Delta (max(12 L2^2, 2 L1) / gamma^3 + 2 sqrt(10) L2 / (epsilon gamma)))``."""
    return math.ceil(1 + delta_gap * (max(12 * L2 ** 2, 2 * L1) / gamma ** 3
                                      + 2 * math.sqrt(10) * L2 / (epsilon * gamma)))


def derive_neag_params(problem: OracleProblem, epsilon, gamma=None, delta=0.01,
                       **overrides) -> NeagParams:
    """NEAG parameters; ``gamma`` defaults to ``sqrt(epsilon)``."""
    gamma = math.sqrt(epsilon) if gamma is None else gamma
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    L2 = _effective_L2(problem, overrides.get("L2_eff", 1.0))
    if problem.delta_gap is None or not problem.delta_gap >= 0:
        raise ParameterError(f"{problem.name}: a non-negative optimality gap is required")
    K = neag_round_budget(problem.delta_gap, problem.L1, L2, epsilon, gamma)
    return NeagParams(epsilon=epsilon, gamma=gamma, delta=delta, K=K, **overrides)


@dataclass
class SSPReport:
    point: np.ndarray
    grad_norm: float
    lambda_min_certified: float
    passed: bool
    outer_rounds: int
    counters: EvalCounter
    cert_counters: EvalCounter
    f_initial: float
    f_final: float
    epsilon: float
    gamma: float
    wall_time: float = 0.0
    timeline: list = field(default_factory=list)

    @property
    def point_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.point, dtype="<f8").tobytes()).hexdigest()[:16]

    def as_dict(self) -> dict:
        return {
            "point_digest": self.point_digest,
            "grad_norm": self.grad_norm,
            "lambda_min": self.lambda_min_certified,
            "passed": self.passed,
            "outer_rounds": self.outer_rounds,
            "gradient_calls": self.counters.gradient_calls,
            "value_calls": self.counters.value_calls,
            "hvp_calls": self.counters.hvp_calls,
            "certification_hvp_calls": self.cert_counters.hvp_calls,
            "f_initial": self.f_initial,
            "f_final": self.f_final,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "wall_time": self.wall_time,
            "timeline": self.timeline,
        }


def certify_ssp(problem: OracleProblem, x, epsilon, gamma, tol_eig=1e-6,
                counter: Optional[EvalCounter] = None):
    """``(grad_norm, lambda_min, passed)`` recomputed from the oracle and the spectral layer."""
    x = np.asarray(x, dtype=float)
    grad_norm = float(np.linalg.norm(problem.eval_grad(x, counter)))
    lam = min_hessian_eig(problem, x, counter)
    return grad_norm, lam, bool(grad_norm <= epsilon and lam >= -gamma - tol_eig)


def neag(problem: OracleProblem, x0, params: NeagParams, rng) -> SSPReport:
    """Find an ``(epsilon, gamma)``-second-order stationary point from ``x0``."""
    t0 = time.perf_counter()
    counter, cert_counter = EvalCounter(), EvalCounter()
    x = np.array(x0, dtype=float)
    f0 = problem.eval_value(x, counter)
    L2 = _effective_L2(problem, params.L2_eff)
    ncd = derive_ncd_params(problem, params.gamma, params.delta_per_round, c=params.c,
                            c_hat=params.c_hat, eta=params.eta, L2_eff=params.L2_eff,
                            early_exit=params.early_exit, max_steps=params.max_ncd_steps)
    ac = AgAcParams(params.ac_epsilon_factor * params.epsilon,
                    params.ac_modulus * params.gamma, params.ac_smoothness * problem.L1)
    max_outer = params.K if params.max_outer is None else min(params.K, params.max_outer)
    timeline = []

    for k in range(1, max_outer + 1):
        res = neon_ncd(problem, x, ncd, rng, counter=counter, cert_counter=cert_counter)
        x_hat = res.x
        g = problem.eval_grad(x_hat, counter)
        gnorm = float(np.linalg.norm(g))
        f_hat = res.f_values[-1]
        timeline.append({"round": k, "stage": "ncd", "f": f_hat, "grad_norm": gnorm,
                         "nc_steps": res.nc_steps, "iterations": res.neon_iterations,
                         "gradient_calls": counter.gradient_calls})
        if gnorm <= params.epsilon:
            g_cert, lam, passed = certify_ssp(problem, x_hat, params.epsilon, params.gamma,
                                              params.tol_eig, cert_counter)
            report = SSPReport(point=x_hat, grad_norm=g_cert, lambda_min_certified=lam,
                               passed=passed, outer_rounds=k, counters=counter.snapshot(),
                               cert_counters=cert_counter.snapshot(), f_initial=f0,
                               f_final=problem.value(x_hat), epsilon=params.epsilon,
                               gamma=params.gamma, wall_time=time.perf_counter() - t0,
                               timeline=timeline)
            if not passed:
                raise CertificationError(
                    f"returned point fails the SSP certificate: grad {g_cert:.3e}, "
                    f"lambda_min {lam:.3e}", report=report)
            return report
        fk = build_fk(problem, x_hat, problem.L1, params.gamma / L2)
        ac_res = ag_ac(fk, x_hat, ac, counter)
        x = ac_res.x
        timeline.append({"round": k, "stage": "ag-ac", "f": problem.value(x),
                         "grad_norm": float(np.linalg.norm(problem.gradient(x))),
                         "outer_iterations": ac_res.iterations,
                         "inner_iterations": int(sum(ac_res.inner_iterations)),
                         "gradient_calls": counter.gradient_calls})
    raise NonConvergenceError(f"NEAG exhausted {max_outer} rounds", best=x,
                              diagnostics={"timeline": timeline})
