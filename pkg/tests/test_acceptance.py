"""Acceptance criteria at their stated tolerances and runtime budgets.

Each test logs one ``[PASS]``/``[FAIL]`` line, repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from neonplus.ag import AgSscParams, ag_ssc, gradient_descent
from neonplus.driver import derive_neag_params, neag
from neonplus.harness.config import build_config
from neonplus.harness.runs import (emit_csv, run_extract, run_lemma1, run_streams, run_sweep,
                                   summarize_sweep, build_problem)
from neonplus.neon import derive_neon_params
from neonplus.oracle import gradient_check, hvp_check
from neonplus.problems import (QuarticSpec, SpectrumSpec, make_quadratic, make_separable_quartic,
                               random_spectrum)

pytestmark = pytest.mark.slow

GAMMA = 0.1
N_SEEDS = 50


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def extract_config(lambda_min):
    return build_config({"problem": {"kind": "quadratic", "dim": 100, "lambda_min": lambda_min,
                                     "lambda_max": 1.0},
                         "params": {"gamma": GAMMA, "delta": 0.01, "L2_eff": 1.0},
                         "seeds": {"base_seed": 0, "count": N_SEEDS}}, mode="extract")


@pytest.fixture(scope="module")
def indefinite_runs():
    return timed(run_extract, extract_config(-GAMMA))


@pytest.fixture(scope="module")
def convex_runs():
    return timed(run_extract, extract_config(GAMMA))


@pytest.fixture(scope="module")
def serial_sweep():
    return timed(run_sweep, build_config({"jobs": 1}, mode="sweep"))


@pytest.fixture(scope="module")
def saddle_run():
    cfg = build_config({"problem": {"kind": "quartic", "dim": 20}, "params": {"eps": 1e-3}},
                       mode="minimize")
    eps = cfg.params["eps"]
    gamma = math.sqrt(eps)
    problem_rng, algo_rng = run_streams(cfg.seeds[0])
    problem = build_problem(cfg.problem, gamma, problem_rng)
    params = derive_neag_params(problem, eps, gamma, cfg.params["delta"])
    report, elapsed = timed(neag, problem, problem.x0, params, algo_rng)
    return problem, params, report, elapsed


def test_rayleigh_certificate(criterion, indefinite_runs):
    records, elapsed = indefinite_runs
    threshold = derive_neon_params(GAMMA, 0.01, 100, 1.0, 0.0).certificate_threshold
    certified = [r for r in records if r.outcome == "nc" and r.rayleigh <= -threshold]
    frac = len(certified) / len(records)
    median = float(np.median([r.rayleigh for r in records if r.rayleigh is not None]))
    ok = frac >= 0.9 and elapsed < 30
    criterion(1, "rayleigh certificate", ok,
              f"certified {frac:.0%} of {len(records)} (need >= 90%), threshold -{threshold:.3e}, "
              f"median quotient {median:.6f}, {elapsed:.1f}s (< 30s)")
    assert ok


def test_zero_soundness(criterion, convex_runs):
    records, elapsed = convex_runs
    frac = sum(r.outcome == "zero" for r in records) / len(records)
    ok = frac >= 0.9 and elapsed < 30
    criterion(2, "zero soundness", ok,
              f"zero returned in {frac:.0%} of {len(records)} (need >= 90%), {elapsed:.1f}s (< 30s)")
    assert ok


def test_scaling_separation(criterion, serial_sweep):
    records, elapsed = serial_sweep
    summary = summarize_sweep(records)
    fast, slow = summary["sweep:neon_plus"], summary["sweep:neon_gd"]
    ok = (fast["slope"] is not None and -0.65 <= fast["slope"] <= -0.35
          and slow["slope"] is not None and -1.25 <= slow["slope"] <= -0.75
          and elapsed < 300)
    criterion(3, "scaling separation", ok,
              f"accelerated slope {fast['slope']:.3f} in [-0.65, -0.35], "
              f"baseline slope {slow['slope']:.3f} in [-1.25, -0.75], "
              f"medians {fast['median_iterations']} vs {slow['median_iterations']}, "
              f"{elapsed:.1f}s (< 300s)")
    assert ok


def test_lemma_numerics(criterion):
    cfg = build_config({"problem": {"dim": 8}, "params": {"gamma": 0.01, "eta_gamma": 0.01,
                                                         "k": 3},
                        "seeds": {"count": 100}}, mode="verify-lemma1")
    rows, elapsed = timed(run_lemma1, cfg)
    dev = max(r["max_formula_deviation"] for r in rows)
    slack = min(r["gap"] - r["gap_bound"] for r in rows)
    ok = (len(rows) == 100 and all(r["outcome"] == "pass" for r in rows) and dev <= 1e-8
          and slack >= -1e-12 and all(r["k"] == 3 for r in rows) and elapsed < 10)
    # smaller steps, recorded rather than asserted
    extra = []
    for scale in (0.5, 0.1, 0.01):
        alt = run_lemma1(build_config({"problem": {"dim": 8},
                                       "params": {"gamma": 0.01, "eta_gamma": 0.01 * scale},
                                       "seeds": {"count": 100}}, mode="verify-lemma1"))
        extra.append(f"eta={scale}/L1: {sum(r['outcome'] == 'pass' for r in alt)}/100")
    criterion(4, "augmented spectrum", ok,
              f"{sum(r['outcome'] == 'pass' for r in rows)}/100 pass, max formula deviation "
              f"{dev:.2e} (<= 1e-8), min gap slack {slack:.3e} (>= -1e-12), {elapsed:.2f}s "
              f"(< 10s); {', '.join(extra)}")
    assert ok


def test_accelerated_rate(criterion):
    t0 = time.perf_counter()
    kappa, eps = 1e4, 1e-6
    g = make_quadratic(SpectrumSpec(np.geomspace(1 / kappa, 1.0, 50), rotation_seed=0))
    y1 = np.ones(g.d)
    g0 = float(np.linalg.norm(g.gradient(y1)))
    ag = ag_ssc(g, y1, AgSscParams(eps, 1.0, 1 / kappa))
    gd = gradient_descent(g, y1, eps, 1.0)
    elapsed = time.perf_counter() - t0
    bound = 10 * math.sqrt(kappa) * math.log(g0 / eps)
    ok = ag.iterations <= bound and gd.iterations >= 10 * ag.iterations and elapsed < 10
    criterion(5, "accelerated rate", ok,
              f"{ag.iterations} iterations (<= {bound:.0f}), gradient descent {gd.iterations} "
              f"({gd.iterations / ag.iterations:.1f}x, need >= 10x), {elapsed:.2f}s (< 10s)")
    assert ok


def test_second_order_point(criterion, saddle_run):
    problem, params, rep, elapsed = saddle_run
    at_saddle = (np.all(problem.x0 == 0) and np.linalg.norm(problem.gradient(problem.x0)) == 0
                 and problem.lambda_min(problem.x0) < 0)
    dense = float(np.linalg.eigvalsh(problem.hessian(rep.point))[0])
    ok = (at_saddle and rep.grad_norm <= 1e-3 and rep.lambda_min_certified >= -params.gamma - 1e-6
          and dense >= -params.gamma - 1e-6 and rep.f_final < rep.f_initial and elapsed < 120)
    criterion(6, "second-order stationary point", ok,
              f"grad {rep.grad_norm:.3e} (<= 1e-3), lambda_min {rep.lambda_min_certified:.4f} / "
              f"analytic {dense:.4f} (>= {-params.gamma - 1e-6:.4f}), f {rep.f_initial:.4f} -> "
              f"{rep.f_final:.4f}, {rep.outer_rounds} rounds, {elapsed:.1f}s (< 120s)")
    assert ok


def test_oracle_honesty(criterion, indefinite_runs, convex_runs, serial_sweep, saddle_run):
    records = indefinite_runs[0] + convex_runs[0] + serial_sweep[0]
    path_hvp = sum(r.hvp_calls for r in records) + saddle_run[2].counters.hvp_calls
    cert_hvp = saddle_run[2].cert_counters.hvp_calls
    ok = path_hvp == 0 and all(r.hvp_calls == 0 for r in records)
    criterion(7, "oracle honesty", ok,
              f"algorithm-path hvp calls {path_hvp} over {len(records) + 1} runs; "
              f"verification-layer hvp calls {cert_hvp}")
    assert ok


def benchmark_problems():
    rng = np.random.default_rng(0)
    a = np.linspace(0.1, 0.4, 20)
    return [
        ("indefinite quadratic", make_quadratic(SpectrumSpec(random_spectrum(100, -0.1, rng), 1))),
        ("convex quadratic", make_quadratic(SpectrumSpec(random_spectrum(100, 0.1, rng), 2))),
        ("ill-conditioned quadratic",
         make_quadratic(SpectrumSpec(np.geomspace(1e-4, 1.0, 50), rotation_seed=0))),
        ("quartic", make_separable_quartic(QuarticSpec(a, 0.8))),
        ("rotated quartic", make_separable_quartic(QuarticSpec(a, 0.8, rotation_seed=3))),
    ]


def test_derivative_consistency(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_g, worst_h = 0.0, 0.0
    for _, p in benchmark_problems():
        radius = p.operating_radius if np.isfinite(p.operating_radius) else 1.0
        for _ in range(100):
            if p.region_ord == np.inf:
                x = rng.uniform(-1, 1, p.d) * radius
                if p.meta.get("Q") is not None:
                    x = p.meta["Q"].T @ x
            else:
                x = rng.standard_normal(p.d)
                x *= radius * rng.uniform() / np.linalg.norm(x)
            v = rng.standard_normal(p.d)
            worst_g = max(worst_g, gradient_check(p, x, v))
            worst_h = max(worst_h, hvp_check(p, x, v))
    elapsed = time.perf_counter() - t0
    ok = worst_g <= 1e-6 and worst_h <= 1e-6 and elapsed < 10
    criterion(8, "derivative consistency", ok,
              f"worst gradient rel. error {worst_g:.2e}, worst HVP rel. error {worst_h:.2e} "
              f"(<= 1e-6) over 5 problems x 100 points, {elapsed:.2f}s (< 10s)")
    assert ok


def test_parallel_determinism(criterion, serial_sweep, tmp_path):
    serial, serial_time = serial_sweep
    parallel, parallel_time = timed(run_sweep, build_config({"jobs": 8}, mode="sweep"))
    a, b = tmp_path / "jobs1.csv", tmp_path / "jobs8.csv"
    emit_csv(serial, a)
    emit_csv(parallel, b)

    def rows(path):
        lines = [line.split(",") for line in path.read_text().splitlines()]
        col = lines[0].index("wall_time_ms")
        return [line[:col] + line[col + 1:] for line in lines]

    same = rows(a) == rows(b)
    total = serial_time + parallel_time
    ok = same and len(serial) == 200 and total < 600
    criterion(9, "parallel determinism", ok,
              f"{len(serial)} rows {'identical' if same else 'DIFFER'} across jobs=1 and jobs=8 "
              f"(modulo wall_time_ms), {total:.1f}s total (< 600s)")
    assert ok
