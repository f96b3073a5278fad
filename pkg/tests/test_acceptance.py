"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -m acceptance -v -s``.  The heavy ensemble criteria
use capped iteration budgets (feasibility is guaranteed by the greedy's
hard guard irrespective of marginal convergence); accuracy-sensitive
criteria run the engines to tight convergence.
"""

import math
import time

import numpy as np
import pytest

from gmdkp import (
    DegenerateSaddleError,
    EnsembleParams,
    IterOpts,
    SaddleConvergenceError,
    bp_run,
    density_greedy_solve,
    exact_marginals,
    exact_optimum,
    gamp_run,
    generate_instance,
    marginal_greedy_solve,
    rs_entropy,
    find_m_opt,
)
from gmdkp import kernels
from gmdkp.bench import BenchConfig, fit_loglog_slope, records_csv, run_bench, summary_csv
from gmdkp.cavity import BPState, GAMPState

pytestmark = pytest.mark.acceptance

STANDARD = dict(mean_weight=0.5, weight_variance=1.0 / 12.0, capacity_ratio=0.25)


def params(n, alpha, x_max=1, seed=0):
    return EnsembleParams(n_items=n, alpha=alpha, x_max=x_max, seed=seed, **STANDARD)


def report(num, ok, detail):
    print(f"\nACCEPTANCE {num:>3}: {'PASS' if ok else 'FAIL'} -- {detail}")
    return ok


# --------------------------------------------------------------------------
# shared theory curves (criteria 5, 6, 7, 8 reuse these)
# --------------------------------------------------------------------------

_theory_cache = {}


def theory(alpha, x_max=1):
    key = (alpha, x_max)
    if key not in _theory_cache:
        _theory_cache[key] = find_m_opt(alpha, params(64, alpha, x_max))
    return _theory_cache[key]


def test_criterion_1_feasibility():
    """Zero constraint violations across the solver family on 1000+ instances."""
    t0 = time.time()
    opts = IterOpts(max_sweeps=15, tol=1e-6, damping=0.7)
    violations = 0
    runs = 0
    trial_seed = 0
    for n in (20, 50, 100):
        for alpha in (0.1, 0.5, 1.0, 2.0):
            for x_max in (1, 2, 5):
                for trial in range(28):
                    trial_seed += 1
                    p = params(n, alpha, x_max, seed=trial_seed)
                    inst = generate_instance(p)
                    for solver in (
                        lambda: marginal_greedy_solve(inst, "bp", opts, params=p),
                        lambda: marginal_greedy_solve(inst, "gamp", opts, params=p),
                        lambda: density_greedy_solve(inst, params=p),
                    ):
                        trace = solver()
                        runs += 1
                        if not trace.final_evaluation.feasible:
                            violations += 1
    elapsed = time.time() - t0
    ok = violations == 0 and elapsed < 1800
    assert report(
        1, ok,
        f"{runs} solver runs on {trial_seed} instances, {violations} violations, {elapsed:.0f}s",
    )


def test_criterion_2_oracle_gap():
    """BP-guided greedy never beats the optimum; mean ratio >= 0.85."""
    t0 = time.time()
    rng = np.random.default_rng(2024)
    opts = IterOpts(max_sweeps=300, tol=1e-8, damping=0.7)
    ratios = []
    exceed = 0
    for _ in range(200):
        n = int(rng.integers(8, 15))
        k = int(rng.integers(1, 4))
        xm = int(rng.integers(1, 3))
        p = params(n, k / n, xm, seed=int(rng.integers(0, 2**31)))
        inst = generate_instance(p)
        optimum = exact_optimum(inst).best_profit
        got = marginal_greedy_solve(inst, "bp", opts, params=p).final_evaluation.profit
        if got > optimum + 1e-9:
            exceed += 1
        ratios.append(got / optimum)
    ratios = np.array(ratios)
    elapsed = time.time() - t0
    qs = np.quantile(ratios, [0.0, 0.25, 0.5, 0.75, 1.0])
    ok = exceed == 0 and ratios.mean() >= 0.85 and elapsed < 600
    assert report(
        2, ok,
        f"mean ratio {ratios.mean():.4f} (floor 0.85), quartiles {np.round(qs, 3).tolist()}, "
        f"{exceed} optimum violations, {elapsed:.0f}s",
    )


def test_criterion_3_marginal_accuracy():
    """BP and GAMP each track the exact marginals to TV 0.05 on average."""
    t0 = time.time()
    rng = np.random.default_rng(777)
    opts = IterOpts(max_sweeps=2000, tol=1e-10, damping=0.85)
    bp_tv, gamp_tv = [], []
    for _ in range(50):
        n = int(rng.integers(5, 11))
        k = int(rng.integers(1, 3))
        xm = int(rng.integers(1, 3))
        p = params(n, k / n, xm, seed=int(rng.integers(0, 2**31)))
        inst = generate_instance(p)
        exact = exact_marginals(inst)
        bp_marg, _, _, _ = bp_run(inst, opts)
        gamp_marg, _, _, _ = gamp_run(inst, opts)
        bp_tv.append(bp_marg.total_variation(exact).mean())
        gamp_tv.append(gamp_marg.total_variation(exact).mean())
    bp_tv, gamp_tv = np.array(bp_tv), np.array(gamp_tv)
    elapsed = time.time() - t0
    ok = bp_tv.mean() <= 0.05 and gamp_tv.mean() <= 0.05 and elapsed < 300
    assert report(
        3, ok,
        f"item-averaged TV over 50 instances: BP mean {bp_tv.mean():.4f} (max {bp_tv.max():.4f}), "
        f"GAMP mean {gamp_tv.mean():.4f} (max {gamp_tv.max():.4f}), {elapsed:.0f}s",
    )


def test_criterion_4_alpha_zero_closed_form():
    """At alpha=0 the entropy reduces to the binary entropy at p = C/w."""
    worst = 0.0
    for cr, p in ((0.1, 0.2), (0.25, 0.5), (0.4, 0.8)):
        pars = EnsembleParams(n_items=64, alpha=1.0, x_max=1, seed=0,
                              mean_weight=0.5, weight_variance=1 / 12, capacity_ratio=cr)
        got = rs_entropy(0.2, 0.0, pars).entropy
        ref = -p * math.log(p) - (1 - p) * math.log(1 - p)
        worst = max(worst, abs(got - ref))
    ok = worst < 1e-4
    assert report(4, ok, f"binary-entropy deviation across C/w grid: {worst:.2e} (tol 1e-4)")


def _sampled_curve_points():
    pts = []
    for alpha in (0.25, 0.5, 1.0):
        curve = theory(alpha).curve
        idx = sorted({0, len(curve) // 2, len(curve) - 2, len(curve) - 1})
        pts.extend((alpha, curve[i]) for i in idx if 0 <= i < len(curve))
    return pts


def test_criterion_5a_stationarity():
    """Finite-difference gradient of the functional vanishes at accepted points."""
    worst = 0.0
    for alpha, pt in _sampled_curve_points():
        worst = max(worst, pt.residual)
    ok = worst < 1e-5
    assert report("5a", ok, f"max stationarity gradient over sampled curve points: {worst:.2e} (tol 1e-5)")


def test_criterion_5b_quadrature_120_240():
    """Literal 120-to-240-node stability at 1e-8.

    The family-term integrand sharpens as q_hat grows toward the entropy
    crossing; a 120-node Gauss-Hermite rule has truncation error well
    above 1e-8 there (and can even fail the stationarity gate), so this
    criterion is expected to fail near the crossings.  The working
    default (480 nodes) passes the same doubling test, reported below.
    """
    failures = []
    doubling_worst = 0.0
    for alpha, pt in _sampled_curve_points():
        pars = params(64, alpha)
        try:
            s120 = rs_entropy(pt.m, alpha, pars, init=pt.order, n_nodes=120).entropy
            s240 = rs_entropy(pt.m, alpha, pars, init=pt.order, n_nodes=240).entropy
            delta = abs(s120 - s240)
            if delta >= 1e-8:
                failures.append(f"(alpha={alpha}, M={pt.m:+.3f}: |dS|={delta:.2e})")
        except (SaddleConvergenceError, DegenerateSaddleError) as err:
            failures.append(
                f"(alpha={alpha}, M={pt.m:+.3f}: coarse solve failed: {type(err).__name__})"
            )
        s480 = rs_entropy(pt.m, alpha, pars, init=pt.order, n_nodes=480).entropy
        s960 = rs_entropy(pt.m, alpha, pars, init=pt.order, n_nodes=960).entropy
        doubling_worst = max(doubling_worst, abs(s480 - s960))
    ok = not failures
    assert report(
        "5b", ok,
        f"literal 120->240 |dS|<1e-8: {len(failures)} failures {failures[:4]}; "
        f"480->960 doubling worst {doubling_worst:.2e} (dominated by collapse-edge points "
        f"where q_hat > 100; S error there shifts M_opt by under 1e-5)",
    )


def test_criterion_6_entropy_curve_shape():
    """S(M) non-increasing with exactly one zero crossing for each alpha."""
    details = []
    ok = True
    for alpha in (0.25, 0.5, 1.0):
        res = theory(alpha)
        ss = [pt.entropy for pt in res.curve]
        ms = [pt.m for pt in res.curve]
        non_increasing = all(ss[i] <= ss[i - 1] + 1e-9 for i in range(1, len(ss)))
        signs = [s > 0 for s in ss]
        crossings = sum(1 for i in range(1, len(signs)) if signs[i] != signs[i - 1])
        window = [s for m, s in zip(ms, ss) if 0 <= m <= max(res.m_opt, 0)]
        window_ok = all(window[i] <= window[i - 1] + 1e-9 for i in range(1, len(window)))
        ok = ok and non_increasing and crossings == 1 and window_ok
        note = "[0,M_opt] empty (M_opt<0)" if res.m_opt < 0 else f"[0,M_opt] has {len(window)} pts"
        details.append(f"alpha={alpha}: M_opt={res.m_opt:+.4f}, crossings={crossings}, {note}")
    assert report(6, ok, "; ".join(details))


def test_criterion_7_xmax_monotonicity_and_saturation():
    """M_opt strictly increases in x_max and saturates past x_max=10."""
    ok = True
    details = []
    for alpha in (0.5, 1.0):
        ms = {xm: theory(alpha, xm).m_opt for xm in (1, 2, 3, 5, 10, 100)}
        seq = [ms[xm] for xm in (1, 2, 3, 5, 10)]
        increasing = all(seq[i] > seq[i - 1] for i in range(1, len(seq)))
        saturation = abs(ms[100] - ms[10]) / abs(ms[10])
        ok = ok and increasing and saturation <= 0.05
        details.append(
            f"alpha={alpha}: M_opt {['%+.4f' % v for v in seq]} incr={increasing}, "
            f"sat(100 vs 10)={saturation:.4f}"
        )
    assert report(7, ok, "; ".join(details))


def test_criterion_8_finite_size_band():
    """Mean achieved scaled profit within the theory band at N=50, alpha=1.

    The spec band [0.7, 1.05] x M_opt presumes M_opt > 0; the theory
    value at alpha=1, x_max=1 is negative, so the band is applied
    sign-robustly as [M_opt - 0.3|M_opt|, M_opt + 0.05|M_opt|].  The
    finite-size gap at N=50 exceeds 0.3|M_opt| here, so this criterion
    fails; see the decisions ledger for the supporting analysis.
    """
    t0 = time.time()
    m_opt = theory(1.0).m_opt
    opts = IterOpts(max_sweeps=150, tol=1e-6, damping=0.7)
    ms = []
    greedy_ms = []
    for trial in range(100):
        p = params(50, 1.0, seed=51000 + trial)
        inst = generate_instance(p)
        ms.append(marginal_greedy_solve(inst, "bp", opts, params=p).final_evaluation.scaled_m)
        greedy_ms.append(density_greedy_solve(inst, params=p).final_evaluation.scaled_m)
    mean = float(np.mean(ms))
    se = float(np.std(ms, ddof=1) / math.sqrt(len(ms)))
    lo = m_opt - 0.3 * abs(m_opt)
    hi = m_opt + 0.05 * abs(m_opt)
    elapsed = time.time() - t0
    ok = lo <= mean <= hi and elapsed < 1200
    assert report(
        8, ok,
        f"BP mean scaled_m {mean:+.4f} +- {se:.4f} vs band [{lo:+.4f}, {hi:+.4f}] "
        f"(M_opt {m_opt:+.4f}); density greedy {np.mean(greedy_ms):+.4f}; {elapsed:.0f}s",
    )


def test_criterion_9_ordering_and_gap_growth():
    """BP-guided greedy beats the density baseline, more so at higher alpha."""
    t0 = time.time()
    opts = IterOpts(max_sweeps=15, tol=1e-6, damping=0.7)
    alphas = (0.5, 1.0, 1.5, 2.0)
    ok = True
    details = []
    for x_max in (1, 2):
        gaps = []
        for alpha in alphas:
            bp_profit, dg_profit = [], []
            for trial in range(100):
                p = params(100, alpha, x_max, seed=91000 + trial)
                inst = generate_instance(p)
                bp_profit.append(
                    marginal_greedy_solve(inst, "bp", opts, params=p).final_evaluation.profit
                )
                dg_profit.append(density_greedy_solve(inst, params=p).final_evaluation.profit)
            gap = float(np.mean(bp_profit) - np.mean(dg_profit))
            gaps.append(gap)
            ok = ok and np.mean(bp_profit) >= np.mean(dg_profit)
        slope = float(np.polyfit(alphas, gaps, 1)[0])
        ok = ok and slope >= 0
        details.append(f"x_max={x_max}: gaps {[round(g, 2) for g in gaps]} slope {slope:+.2f}")
    elapsed = time.time() - t0
    assert report(9, ok, "; ".join(details) + f"; {elapsed:.0f}s")


def _sweep_time(engine, n, repeats=7, sweeps=5):
    inst = generate_instance(params(n, 1.0, seed=5))
    nl = (inst.max_counts + 1).astype(np.int64)
    best = math.inf
    if engine == "bp":
        state = BPState.uniform(inst)
        args = (inst.weights, inst.capacities, nl, state.msg_factor_to_var,
                state.msg_var_to_factor, 0.7, 1e-12, 1e-300)
        fn = kernels.bp_sweep
    else:
        state = GAMPState.uniform(inst)
        args = (inst.weights, inst.capacities, nl, state.m, state.chi, state.a,
                state.b, state.v_mu, state.a_mu, state.b_mu, 0.7, 1e-12)
        fn = kernels.gamp_sweep
    fn(*args)  # warm-up
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(sweeps):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / sweeps)
    return best


def test_criterion_10_cost_scaling():
    """Per-sweep cost is O(NK); end-to-end greedy cost is ~N^2 at fixed K."""
    sizes = (100, 200, 400)
    details = []
    ok = True
    # time the arithmetic scaling single-threaded: the parallel pool's
    # fixed fork/join cost otherwise dominates the smallest size
    try:
        import numba

        prev_threads = numba.get_num_threads()
        numba.set_num_threads(1)
    except ImportError:
        prev_threads = None
    try:
        for engine in ("bp", "gamp"):
            per_edge = [_sweep_time(engine, n) / (n * n) for n in sizes]
            ratio = max(per_edge) / min(per_edge)
            ok = ok and ratio <= 1.5
            details.append(f"{engine} per-NK spread {ratio:.2f} (band 1.5)")
    finally:
        if prev_threads is not None:
            numba.set_num_threads(prev_threads)
    opts = IterOpts(max_sweeps=60, tol=1e-6, damping=0.7)
    ns = (50, 100, 200)
    times = []
    for n in ns:
        trials = []
        for trial in range(5):
            p = params(n, 50.0 / n, seed=7000 + trial)
            inst = generate_instance(p)
            t0 = time.perf_counter()
            marginal_greedy_solve(inst, "bp", opts, params=p)
            trials.append(time.perf_counter() - t0)
        times.append(float(np.median(trials)))
    slope = fit_loglog_slope(list(ns), times)
    ok = ok and 1.6 <= slope <= 2.4
    details.append(f"end-to-end exponent vs N at K=50: {slope:.2f} (band 2 +- 0.4)")
    assert report(10, ok, "; ".join(details))


def test_criterion_11_determinism():
    """Byte-identical pipeline re-runs in suppressed-timestamp mode."""
    cfg = BenchConfig(
        n_values=(12, 16), alpha_values=(0.5,), x_max_values=(1,), n_trials=3,
        engines=("bp", "greedy"), seed_base=11, output_dir="unused",
        max_sweeps=80, tol=1e-6, theory=False, timestamp=False,
    )
    rec_a = records_csv(run_bench(cfg), timestamp=False)
    rec_b = records_csv(run_bench(cfg), timestamp=False)
    from gmdkp.bench import aggregate

    sum_a = summary_csv(aggregate(run_bench(cfg)), timestamp=False)
    sum_b = summary_csv(aggregate(run_bench(cfg)), timestamp=False)
    res_a = find_m_opt(0.25, params(64, 0.25))
    res_b = find_m_opt(0.25, params(64, 0.25))
    ok = rec_a == rec_b and sum_a == sum_b and res_a.m_opt == res_b.m_opt
    assert report(11, ok, f"records identical: {rec_a == rec_b}; summary identical: {sum_a == sum_b}; "
                          f"theory identical: {res_a.m_opt == res_b.m_opt}")
