"""Negative-curvature extraction from random noise.

:func:`neon_plus` runs Nesterov momentum on the anchored model
``fhat(u) = f(x+u) - f(x) - grad f(x)^T u`` started from a tiny random sphere
point; :func:`neon_gd_baseline` is the plain gradient-descent predecessor with
the same termination logic.  Both only consume gradient and value oracles.
Returned directions are certified afterwards with a Hessian-vector Rayleigh
quotient charged to a separate counter.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ParameterError
from .oracle import EvalCounter, OracleProblem, ShiftedModel, rayleigh_quotient

logger = logging.getLogger(__name__)

DEFAULT_C_HAT = 43.0
DEFAULT_ETA_SCALE = 0.1
# an iterate this many U-radii away can no longer enter the final selection
DEFAULT_ESCAPE_FACTOR = 100.0

EPS = float(np.finfo(float).eps)
ROUNDOFF_FACTOR = 32.0

NC_DELTA_TRIGGER = "delta-trigger"
NC_MIN_VALUE = "min-value"
NC_BASELINE = "baseline"


@dataclass(frozen=True)
class NeonParams:
    gamma: float
    delta: float
    eta: float
    zeta: float
    c_hat: float
    t: int
    F_threshold: float
    U_radius: float
    r_init: float
    log_term: float
    t_gd: int = 0
    early_exit: bool = False
    escape_factor: float = DEFAULT_ESCAPE_FACTOR

    def __post_init__(self):
        for name in ("t", "F_threshold", "U_radius", "r_init"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ParameterError(f"{name} must be positive and finite, got {val!r}")
        if not 0 <= self.zeta < 1:
            raise ParameterError(f"momentum must lie in [0, 1), got {self.zeta!r}")

    @property
    def certificate_threshold(self) -> float:
        """``gamma / (72 c_hat^2 log(d L1/(gamma delta)))``; certified NC lies below its negative."""
        return self.gamma / (72 * self.c_hat ** 2 * self.log_term)

    @property
    def ncfind_threshold(self) -> float:
        return self.zeta * math.sqrt(6 * self.eta * self.F_threshold)


def derive_neon_params(gamma, delta, d, L1, L2, c_hat=DEFAULT_C_HAT, eta=None,
                       L2_eff=1.0, early_exit=False) -> NeonParams:
    """Parameter bundle with iteration budget ``t = ceil(sqrt(c_hat log / (eta gamma)))``.

    ``eta`` defaults to ``0.1/L1``.  When ``L2 == 0`` the surrogate ``L2_eff`` is
    used in the ``F``, ``r`` and ``U`` formulas.  Logs are natural.
    """
    if not 0 < gamma < 1:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma!r}")
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if c_hat < 43:
        raise ParameterError(f"c_hat must be at least 43, got {c_hat!r}")
    if not L1 > 0:
        raise ParameterError(f"L1 must be positive, got {L1!r}")
    eta = DEFAULT_ETA_SCALE / L1 if eta is None else float(eta)
    if not eta > 0:
        raise ParameterError(f"step size must be positive, got {eta!r}")
    if eta * gamma >= 1:
        raise ParameterError(f"eta*gamma = {eta * gamma!r} must be below 1")
    arg = d * L1 / (gamma * delta)
    if not arg > 1:
        raise ParameterError(f"log argument d*L1/(gamma*delta) = {arg!r} must exceed 1")
    log_term = math.log(arg)
    L2 = float(L2) if L2 > 0 else float(L2_eff)
    if not L2 > 0:
        raise ParameterError("Hessian-Lipschitz surrogate must be positive")

    eg = eta * gamma
    t = math.ceil(math.sqrt(c_hat * log_term / eg))
    t_gd = math.ceil(c_hat * log_term / eg)
    F = eta * gamma ** 3 * L1 / L2 ** 2 / log_term ** 3
    r = math.sqrt(eta) * gamma ** 2 / math.sqrt(L1) / L2 / log_term ** 2
    U = 12 * c_hat * (math.sqrt(eta * L1) * F / L2) ** (1 / 3)
    zeta = 1 - math.sqrt(eg)
    return NeonParams(gamma=gamma, delta=delta, eta=eta, zeta=zeta, c_hat=c_hat, t=t,
                      F_threshold=F, U_radius=U, r_init=r, log_term=log_term,
                      t_gd=t_gd, early_exit=early_exit)


class NeonTrace:
    """Per-iteration scalars ``(tau, ||y||, ||y-u||, fhat(y), Delta)``.

    ``maxlen=None`` keeps the full history, otherwise a ring buffer.
    """

    columns = ("tau", "y_norm", "gap_norm", "fhat_y", "delta_gap")

    def __init__(self, maxlen: Optional[int] = None):
        self.rows = deque(maxlen=maxlen)

    def append(self, tau, y_norm, gap_norm, fhat_y, delta):
        self.rows.append((tau, y_norm, gap_norm, fhat_y, delta))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow(["" if v is None else repr(v) for v in row])


@dataclass
class NCOutcome:
    """Either a negative-curvature direction (``direction`` set) or Zero."""

    direction: Optional[np.ndarray]
    rayleigh: Optional[float] = None
    source: Optional[str] = None
    certified: Optional[bool] = None
    iterations: int = 0
    counter: EvalCounter = field(default_factory=EvalCounter)
    cert_counter: EvalCounter = field(default_factory=EvalCounter)
    trace: Optional[NeonTrace] = None
    flags: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.direction is not None

    @property
    def is_zero(self) -> bool:
        return self.direction is None


def sample_sphere(r: float, d: int, rng) -> np.ndarray:
    """Uniform point on the sphere of radius ``r`` in R^d."""
    if not r > 0:
        raise ParameterError(f"sphere radius must be positive, got {r!r}")
    while True:
        g = rng.standard_normal(d)
        n = np.linalg.norm(g)
        if n > 0:
            return r * (g / n)


def nag_step(y, u, model: ShiftedModel, eta, zeta, grad_u=None):
    """One momentum step on the anchored model; ``grad_u`` reuses a cached gradient."""
    if grad_u is None:
        grad_u = model.grad(u)
    y_next = u - eta * grad_u
    u_next = y_next + zeta * (y_next - y)
    return y_next, u_next


def delta_gap(model: ShiftedModel, y, u, fhat_y=None, fhat_u=None, grad_u=None) -> float:
    """``fhat(y) - fhat(u) - grad fhat(u)^T (y - u)``; cached pieces may be passed in."""
    if fhat_y is None:
        fhat_y = model.value(y)
    if fhat_u is None:
        fhat_u = model.value(u)
    if grad_u is None:
        grad_u = model.grad(u)
    return fhat_y - fhat_u - float(grad_u @ (y - u))


def first_crossing(gap_norms, threshold) -> Optional[int]:
    for j, g in enumerate(gap_norms):
        if g >= threshold:
            return j
    return None


def nc_find(ys, us, zeta, eta, F_threshold) -> np.ndarray:
    """History search: ``y_j`` at the first ``||y_j-u_j|| >= zeta sqrt(6 eta F)``, else ``y_tau-u_tau``."""
    threshold = zeta * math.sqrt(6 * eta * F_threshold)
    j = first_crossing((np.linalg.norm(y - u) for y, u in zip(ys, us)), threshold)
    if j is not None:
        return np.array(ys[j], dtype=float)
    return np.asarray(ys[-1], dtype=float) - np.asarray(us[-1], dtype=float)


def curvature_estimate(model: ShiftedModel, v, s) -> float:
    """First-order curvature along ``v``: ``vhat^T (grad f(x + s vhat) - grad f(x)) / s``."""
    vhat = v / np.linalg.norm(v)
    return float(vhat @ model.grad(s * vhat)) / s


def _pick_candidate(model, candidates, s):
    best, best_q = None, math.inf
    for v in candidates:
        if v is None or not np.any(v):
            continue
        q = curvature_estimate(model, v, s)
        if q < best_q:
            best, best_q = v, q
    return best, best_q


def _roundoff(model, fy, y_norm, u_norm, grad_u, gap_norm):
    # forward-error bound on the Delta evaluation; below it the sign of Delta is noise
    scale = (3 * abs(model.anchor_value) + 2 * abs(fy)
             + model.anchor_grad_norm * (y_norm + u_norm)
             + float(np.linalg.norm(grad_u)) * gap_norm)
    return ROUNDOFF_FACTOR * EPS * scale


def _ncfind_candidates(first_cross, gap):
    # NCFind's own pick (y_j or the final gap), plus the gap y_j - u_j at the crossing
    if first_cross is None:
        return [gap]
    return [first_cross[1], first_cross[2], gap]


def _run(problem: OracleProblem, x, params: NeonParams, rng, *, zeta, budget, trigger,
         source, counter, cert_counter, trace_maxlen, early_exit) -> NCOutcome:
    counter = EvalCounter() if counter is None else counter
    cert_counter = EvalCounter() if cert_counter is None else cert_counter
    x = np.asarray(x, dtype=float)
    model = ShiftedModel(problem, x, counter)
    eta, gamma = params.eta, params.gamma
    U, two_F = params.U_radius, 2 * params.F_threshold
    escape = params.escape_factor * U
    nc_thresh = params.ncfind_threshold
    trace = NeonTrace(trace_maxlen)
    flags = []

    y = sample_sphere(params.r_init, problem.d, rng)
    u = y.copy()
    first_cross = None           # (tau, y_tau, y_tau - u_tau)
    best_val, best_y = math.inf, None
    result_dir, result_src = None, None
    iterations = 0

    for tau in range(budget + 1):
        fy = model.value(y)
        gap = y - u
        gap_norm = float(np.linalg.norm(gap))
        y_norm = float(np.linalg.norm(y))
        if first_cross is None and gap_norm >= nc_thresh:
            first_cross = (tau, y.copy(), gap.copy())
        if y_norm <= U and fy < best_val:
            best_val, best_y = fy, y.copy()

        grad_u = model.grad(u)
        dval = None
        if trigger:
            dval = delta_gap(model, y, u, fhat_y=fy, grad_u=grad_u)
        trace.append(tau, y_norm, gap_norm, fy, dval)

        if trigger and dval < -0.5 * gamma * gap_norm ** 2 - _roundoff(
                model, fy, y_norm, float(np.linalg.norm(u)), grad_u, gap_norm):
            result_dir, _ = _pick_candidate(model, _ncfind_candidates(first_cross, gap),
                                            params.r_init)
            result_src = NC_DELTA_TRIGGER
            break
        if early_exit and best_val <= -two_F:
            result_dir, result_src = best_y, source
            break
        if y_norm > escape:
            flags.append("escaped")
            break
        if tau == budget:
            break
        y, u = nag_step(y, u, model, eta, zeta, grad_u=grad_u)
        iterations += 1

    if result_dir is None and result_src is None:
        if best_y is None:
            # nothing inside the U-ball: fall back to the history search
            flags.append("empty-U-filter")
            cand, q = _pick_candidate(model, _ncfind_candidates(first_cross, gap),
                                      params.r_init)
            if cand is not None and q < 0:
                result_dir, result_src = cand, source
        elif best_val <= -two_F:
            result_dir, result_src = best_y, source

    out = NCOutcome(direction=None, iterations=iterations, counter=counter,
                    cert_counter=cert_counter, trace=trace, flags=flags)
    if result_dir is not None:
        rq = rayleigh_quotient(problem, x, result_dir, cert_counter)
        out.direction = result_dir
        out.rayleigh = rq
        out.source = result_src
        out.certified = rq <= -params.certificate_threshold
        if not out.certified:
            logger.warning("uncertified NC direction at %s: rayleigh %.3e above -%.3e",
                           problem.name, rq, params.certificate_threshold)
            flags.append("uncertified")
    return out


def neon_plus(problem: OracleProblem, x, params: NeonParams, rng, *, counter=None,
              cert_counter=None, trace_maxlen=None, early_exit=None,
              trigger=True) -> NCOutcome:
    """Accelerated NC extraction at ``x``.

    Runs up to ``params.t`` momentum steps.  A negative ``Delta`` trigger hands
    the history to the NCFind search; otherwise the lowest ``fhat(y_tau)`` among
    iterates with ``||y_tau|| <= U`` is returned if it is at most ``-2F``.
    ``early_exit`` stops at the first such iterate instead of finishing the budget.
    """
    early = params.early_exit if early_exit is None else early_exit
    return _run(problem, x, params, rng, zeta=params.zeta, budget=params.t, trigger=trigger,
                source=NC_MIN_VALUE, counter=counter, cert_counter=cert_counter,
                trace_maxlen=trace_maxlen, early_exit=early)


def neon_gd_baseline(problem: OracleProblem, x, params: NeonParams, rng, *, counter=None,
                     cert_counter=None, trace_maxlen=None, early_exit=None) -> NCOutcome:
    """Gradient-descent extraction with budget ``ceil(c_hat log / (eta gamma))``."""
    early = params.early_exit if early_exit is None else early_exit
    return _run(problem, x, params, rng, zeta=0.0, budget=params.t_gd, trigger=False,
                source=NC_BASELINE, counter=counter, cert_counter=cert_counter,
                trace_maxlen=trace_maxlen, early_exit=early)


def with_delta(params: NeonParams, delta, d, L1, L2, L2_eff=1.0) -> NeonParams:
    """Re-derive ``params`` for a new failure probability, keeping eta/c_hat/flags."""
    fresh = derive_neon_params(params.gamma, delta, d, L1, L2, c_hat=params.c_hat,
                               eta=params.eta, L2_eff=L2_eff, early_exit=params.early_exit)
    return replace(fresh, escape_factor=params.escape_factor)
