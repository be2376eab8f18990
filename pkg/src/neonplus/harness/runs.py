"""Experiment execution and CSV emission."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..driver import derive_neag_params, neag
from ..errors import ConfigurationError, NeonError
from ..neon import derive_neon_params, neon_gd_baseline, neon_plus
from ..problems import (QuarticSpec, SpectrumSpec, make_quadratic, make_separable_quartic,
                        random_spectrum)
from ..spectral import eigen_gap_check, random_lemma1_hessian
from .config import ExperimentConfig

CSV_COLUMNS = ("config_digest", "mode", "problem", "d", "gamma", "eps", "seed", "outcome",
               "rayleigh", "iterations", "gradient_calls", "hvp_calls", "grad_norm",
               "lambda_min", "wall_time_ms")

LEMMA1_COLUMNS = ("config_digest", "seed", "d", "gamma", "eta", "zeta", "k", "gap",
                  "gap_bound", "max_formula_deviation", "max_eigvec_deviation", "outcome")

SWEEP_MODES = {"neon_plus": "sweep:neon_plus", "neon_gd": "sweep:neon_gd"}


@dataclass
class RunRecord:
    config_digest: str
    mode: str
    problem: str
    d: int
    gamma: Optional[float] = None
    eps: Optional[float] = None
    seed: Optional[int] = None
    outcome: str = ""
    rayleigh: Optional[float] = None
    iterations: Optional[int] = None
    gradient_calls: Optional[int] = None
    hvp_calls: Optional[int] = None
    grad_norm: Optional[float] = None
    lambda_min: Optional[float] = None
    wall_time_ms: Optional[float] = None
    error: Optional[str] = None


def format_field(value) -> str:
    """Shortest round-trip decimal for floats, empty string for missing fields."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_rows(fh, records, columns=CSV_COLUMNS):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        row = r if isinstance(r, dict) else asdict(r)
        w.writerow([format_field(row.get(c)) for c in columns])


def emit_csv(records, path, columns=CSV_COLUMNS):
    try:
        with open(path, "w", newline="") as fh:
            write_rows(fh, records, columns)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


# --- problem construction -----------------------------------------------------

def run_streams(seed):
    """Independent (problem, algorithm) generators for one run seed."""
    problem_ss, algo_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(problem_ss), np.random.default_rng(algo_ss)


def build_problem(spec: dict, gamma: Optional[float], problem_rng):
    kind = spec["kind"]
    d = int(spec.get("dim", 100 if kind == "quadratic" else 20))
    if kind == "quadratic":
        if "eigenvalues" in spec:
            lam = np.asarray(spec["eigenvalues"], dtype=float)
        else:
            lam_min = spec.get("lambda_min")
            if lam_min is None:
                if gamma is None:
                    raise ConfigurationError("quadratic needs lambda_min or a gamma")
                lam_min = -gamma
            lam = random_spectrum(d, float(lam_min), problem_rng, float(spec.get("lambda_max", 1.0)))
        rot = int(problem_rng.integers(2 ** 63))
        return make_quadratic(SpectrumSpec(lam, rotation_seed=rot,
                                           operating_radius=spec.get("operating_radius", 10.0)))
    if kind == "quartic":
        a = spec.get("a", {"low": 0.1, "high": 0.4})
        a = np.linspace(a["low"], a["high"], d) if isinstance(a, dict) else np.asarray(a, float)
        bound = spec.get("bound", 1.25 * math.sqrt(float(np.max(a))))
        rot = int(problem_rng.integers(2 ** 63)) if spec.get("rotated") else None
        return make_separable_quartic(QuarticSpec(a, bound, rotation_seed=rot))
    raise ConfigurationError(f"unknown problem kind {kind!r}")


def _eta(params, problem):
    return params.get("eta_scale", 0.1) / problem.L1


def _neon_params(params, problem, gamma):
    return derive_neon_params(gamma, params.get("delta", 0.01), problem.d, problem.L1,
                              problem.L2, c_hat=params.get("c_hat", 43.0),
                              eta=_eta(params, problem), L2_eff=params.get("L2_eff", 1.0),
                              early_exit=params.get("early_exit", False))


# --- single runs (module level so worker processes can import them) -----------

def _extract_task(task):
    raw, digest, mode, algo, gamma, seed = task
    problem_rng, algo_rng = run_streams(seed)
    rec = RunRecord(digest, mode, raw["problem"]["kind"], raw["problem"].get("dim", 0),
                    gamma=gamma, seed=seed)
    t0 = time.perf_counter()
    try:
        problem = build_problem(raw["problem"], gamma, problem_rng)
        rec.d = problem.d
        params = _neon_params(raw["params"], problem, gamma)
        run = neon_plus if algo == "neon_plus" else neon_gd_baseline
        out = run(problem, problem.x0, params, algo_rng, trace_maxlen=1)
        rec.outcome = "zero" if out.is_zero else ("nc" if out.certified else "nc-uncertified")
        rec.rayleigh = out.rayleigh
        rec.iterations = out.iterations
        rec.gradient_calls = out.counter.gradient_calls
        rec.hvp_calls = out.counter.hvp_calls
    except NeonError as exc:
        rec.outcome = f"error:{type(exc).__name__}"
        rec.error = str(exc)
    rec.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return rec


def _minimize_task(task):
    raw, digest, seed = task
    params = raw["params"]
    problem_rng, algo_rng = run_streams(seed)
    eps = float(params.get("eps", 1e-3))
    gamma = float(params["gamma"]) if "gamma" in params else math.sqrt(eps)
    rec = RunRecord(digest, "minimize", raw["problem"]["kind"], raw["problem"].get("dim", 0),
                    gamma=gamma, eps=eps, seed=seed)
    t0 = time.perf_counter()
    report = None
    try:
        problem = build_problem(raw["problem"], gamma, problem_rng)
        rec.d = problem.d
        extra = {k: params[k] for k in ("c", "c_hat", "L2_eff", "early_exit") if k in params}
        neag_params = derive_neag_params(problem, eps, gamma, params.get("delta", 0.01),
                                         eta=_eta(params, problem), **extra)
        rep = neag(problem, problem.x0, neag_params, algo_rng)
        report = rep.as_dict()
        rec.outcome = "ssp"
        rec.iterations = rep.outer_rounds
        rec.gradient_calls = rep.counters.gradient_calls
        rec.hvp_calls = rep.counters.hvp_calls
        rec.grad_norm = rep.grad_norm
        rec.lambda_min = rep.lambda_min_certified
    except NeonError as exc:
        rec.outcome = f"error:{type(exc).__name__}"
        rec.error = str(exc)
        partial = getattr(exc, "report", None)
        if partial is not None and hasattr(partial, "as_dict"):
            report = partial.as_dict()
    rec.wall_time_ms = (time.perf_counter() - t0) * 1e3
    if report is not None:
        report = {"seed": seed, "config_digest": digest, **report,
                  "wall_time": rec.wall_time_ms / 1e3}
    return rec, report


def _lemma1_task(task):
    raw, digest, seed = task
    params, d = raw["params"], int(raw["problem"].get("dim", 8))
    gamma = float(params.get("gamma", 0.01))
    eta = float(params.get("eta_gamma", 0.01)) / gamma
    L1 = min(1.0, 1.0 / eta)
    k = int(params.get("k", 3))
    rng = np.random.default_rng(seed)
    H = random_lemma1_hessian(d, k, gamma, L1, rng)
    try:
        rep = eigen_gap_check(H, eta, gamma)
        outcome = "pass" if rep.passed else "fail"
        row = {"gap": rep.gap_topk, "max_formula_deviation": rep.max_formula_deviation,
               "max_eigvec_deviation": rep.max_eigvec_deviation, "k": rep.k, "zeta": rep.zeta,
               "gap_bound": rep.gap_bound}
    except NeonError as exc:
        outcome, row = f"error:{type(exc).__name__}", {}
    return {"config_digest": digest, "seed": seed, "d": d, "gamma": gamma, "eta": eta,
            "outcome": outcome, **row}


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=1))


def _sort_key(rec):
    return (rec.gamma if rec.gamma is not None else -1.0, rec.seed or 0, rec.mode)


def run_extract(config: ExperimentConfig) -> list:
    tasks = [(config.raw, config.digest, "extract", "neon_plus", g, s)
             for g in config.gammas for s in config.seeds]
    return sorted(_map(_extract_task, tasks, config.jobs), key=_sort_key)


def run_sweep(config: ExperimentConfig) -> list:
    """Both extractors over the (gamma, seed) grid; child failures become error rows."""
    algos = config.params.get("algorithms", ["neon_plus", "neon_gd"])
    tasks = [(config.raw, config.digest, SWEEP_MODES[a], a, g, s)
             for a in algos for g in config.gammas for s in config.seeds]
    return sorted(_map(_extract_task, tasks, config.jobs), key=_sort_key)


def run_minimize(config: ExperimentConfig):
    tasks = [(config.raw, config.digest, s) for s in config.seeds]
    results = sorted(_map(_minimize_task, tasks, config.jobs), key=lambda r: r[0].seed)
    return [r for r, _ in results], [rep for _, rep in results]


def run_lemma1(config: ExperimentConfig) -> list:
    tasks = [(config.raw, config.digest, s) for s in config.seeds]
    return sorted(_map(_lemma1_task, tasks, config.jobs), key=lambda r: r["seed"])


def loglog_slope(gammas, values) -> Optional[float]:
    """Least-squares slope of log(values) against log(gammas); None when degenerate."""
    g = np.asarray(gammas, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) & (v > 0)
    g, v = g[ok], v[ok]
    if np.unique(g).size < 2:
        return None
    X = np.column_stack([np.log(g), np.ones_like(g)])
    coef, *_ = np.linalg.lstsq(X, np.log(v), rcond=None)
    return float(coef[0])


def summarize_sweep(records) -> dict:
    """Median iterations per (algorithm, gamma) over NC-found rows and the log-log slopes."""
    summary = {}
    for mode in sorted({r.mode for r in records}):
        rows = [r for r in records if r.mode == mode]
        gammas = sorted({r.gamma for r in rows}, reverse=True)
        med, found = [], []
        for g in gammas:
            its = [r.iterations for r in rows
                   if r.gamma == g and r.outcome.startswith("nc") and r.iterations is not None]
            found.append(len(its))
            med.append(float(np.median(its)) if its else math.nan)
        summary[mode] = {"gammas": gammas, "median_iterations": med, "nc_found": found,
                         "runs_per_gamma": [sum(r.gamma == g for r in rows) for g in gammas],
                         "slope": loglog_slope(gammas, med)}
    return summary


def error_rows(records) -> list:
    return [r for r in records if r.outcome.startswith("error")]

