"""Monte Carlo drivers shared by the CLI and the acceptance tests.

Every driver takes a base ``seed`` and derives trial ``i``'s seed as
``seed + i``; rows come back sorted so output does not depend on scheduling.
"""

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

from .altmin import SolverConfig, decay_ratios, fast_matrix_sensing
from .diagnostics import check_all, orthogonal_complement, shrinking_step_report
from .errors import Rank1SenseError
from .linalg import thin_qr
from .regression import RegressionProblem, solve_naive, solve_sketched
from .sensing import evaluate, make_ground_truth, make_rng, sample_ensemble

__all__ = [
    "OPERATOR_COLUMNS",
    "SWEEP_COLUMNS",
    "TRACE_COLUMNS",
    "BENCH_COLUMNS",
    "thread_count",
    "loglog_slope",
    "perturbed_basis",
    "operator_sweep",
    "run_trials",
    "sweep_m",
    "proof_diagnostics",
    "bench_regression",
]

OPERATOR_COLUMNS = ["m", "d", "k", "seed", "init_error", "bx_error", "by_error",
                    "gx_norm", "gy_norm"]
SWEEP_COLUMNS = ["m", "median_rel_error", "median_decay_ratio", "success_fraction"]
TRACE_COLUMNS = ["seed", "t", "dist_U", "dist_V", "rel_error", "residual", "millis"]
BENCH_COLUMNS = ["d", "k", "m", "rep", "method", "build_millis", "solve_millis",
                 "residual", "residual_ratio"]


def thread_count():
    try:
        return max(1, int(os.environ.get("RANK1SENSE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def _kappa_for(k, kappa):
    return 1.0 if k == 1 else kappa


def operator_sweep(d, k, kappa, m_values, trials, seed=0, eps=0.1, probes=1):
    """One ``check_all`` report per ``(m, trial)``.

    Trial ``i`` uses ground truth seed ``seed + i``; initialization and probe
    ensembles are independent blocks of that seed.
    """
    def one(task):
        m, i = task
        s = seed + i
        G = make_ground_truth(d, k, _kappa_for(k, kappa), seed=s)
        rep = check_all(G, sample_ensemble(d, m, s, block=0),
                        sample_ensemble(d, m, s, block=1), eps, probes=probes, seed=s)
        row = dict(m=m, d=d, k=k, seed=s, init_error=rep.init_error,
                   bx_error=rep.b_x_error, by_error=rep.b_y_error,
                   gx_norm=rep.g_x_norm, gy_norm=rep.g_y_norm)
        row["report"] = rep
        return row

    rows = _map(one, product(sorted(m_values), range(trials)))
    return sorted(rows, key=lambda r: (r["m"], r["seed"]))


def run_trials(d, k, kappa, m, T, seeds, method="naive", eps0=1e-6,
               sketch_eps=1e-6, sketch_delta=0.01, final_fit="extra-block"):
    """Run the solver once per seed; ground truth and measurements share the seed."""
    def one(s):
        G = make_ground_truth(d, k, _kappa_for(k, kappa), seed=s)
        cfg = SolverConfig(d, k, m, T, eps0=eps0, method=method, sketch_eps=sketch_eps,
                           sketch_delta=sketch_delta, seed=s, final_fit=final_fit)
        W, trace = fast_matrix_sensing(cfg, G)
        return dict(seed=s, config=cfg, trace=trace, W=W, ground_truth=G,
                    decay=decay_ratios(trace))

    return sorted(_map(one, seeds), key=lambda r: r["seed"])


def sweep_m(d, k, kappa, m_values, T, trials, seed=0, eps0=1e-6, method="naive"):
    """Success fraction and medians of final error and decay ratio per ``m``.

    Runs that abort (rank collapse at very small ``m``) count as failures
    with infinite error.
    """
    def one(task):
        m, s = task
        try:
            run = run_trials(d, k, kappa, m, T, [s], method=method, eps0=eps0)[0]
        except Rank1SenseError:
            return m, math.inf, math.inf
        r = run["decay"].ratios
        return m, run["trace"].final_rel_error, float(np.median(r)) if r else math.nan

    results = _map(one, product(sorted(m_values), range(seed, seed + trials)))
    rows = []
    for m in sorted(set(m_values)):
        errs = np.array([e for mm, e, _ in results if mm == m])
        ratios = [r for mm, _, r in results if mm == m]
        rows.append(dict(
            m=m,
            median_rel_error=float(np.median(errs)),
            median_decay_ratio=float(np.median(ratios)),
            success_fraction=float(np.mean(errs <= eps0)),
        ))
    return rows


def perturbed_basis(U, max_dist, rng):
    """Orthonormal basis at principal-angle distance ``<= max_dist`` from ``U``.

    Column ``j`` is rotated toward a random direction orthogonal to ``span(U)``
    by an angle with sine uniform in ``(0, max_dist]``.
    """
    d, k = U.shape
    comp = orthogonal_complement(U)
    P, _ = thin_qr(comp @ rng.standard_normal((comp.shape[1], k)))
    sines = max_dist * (1.0 - rng.random(k))
    return U * np.sqrt(1.0 - sines ** 2) + P * sines


def proof_diagnostics(d, k, kappa, m, trials, seed=0, max_dist=0.1, eps=None):
    """``shrinking_step_report`` for ``trials`` random ``U_t`` near ``U*``."""
    def one(i):
        s = seed + i
        G = make_ground_truth(d, k, _kappa_for(k, kappa), seed=s)
        U_t = perturbed_basis(G.U, max_dist, make_rng(s, 5))
        E = sample_ensemble(d, m, s, block=0)
        rep = shrinking_step_report(G, U_t, E, eps=eps)
        row = rep.to_dict()
        row.update(seed=s, checks_passed=all(rep.checks.values()))
        row.pop("checks")
        row["report"] = rep
        return row

    return sorted(_map(one, range(trials)), key=lambda r: r["seed"])


def bench_regression(ds, ks, ms, reps=1, seed=0, eps=1e-6, delta=0.01):
    """Time design-matrix construction and both solvers on identical problems.

    Each problem takes a regression step at a random orthonormal ``U`` against
    exact measurements of a random rank-``k`` truth, so the minimum residual
    is nonzero.
    """
    rows = []
    for d, k, m in product(sorted(ds), sorted(ks), sorted(ms)):
        for rep in range(reps):
            s = seed + rep
            G = make_ground_truth(d, k, _kappa_for(k, 2.0), seed=s)
            E = sample_ensemble(d, m, s, block=0)
            b = evaluate(G.W, E)
            U, _ = thin_qr(make_rng(s, 6).standard_normal((d, k)))
            tic = time.perf_counter()
            P = RegressionProblem.from_sensing(U, E, b)
            build = 1e3 * (time.perf_counter() - tic)

            tic = time.perf_counter()
            v_naive = solve_naive(P)
            t_naive = 1e3 * (time.perf_counter() - tic)
            tic = time.perf_counter()
            v_sk = solve_sketched(P, eps=eps, delta=delta, seed=s)
            t_sk = 1e3 * (time.perf_counter() - tic)

            r_naive = P.residual(v_naive)
            r_sk = P.residual(v_sk)
            ratio = r_sk / r_naive if r_naive > 0 else (1.0 if r_sk == 0 else math.inf)
            for method, t, r, rr in (("naive", t_naive, r_naive, 1.0),
                                     ("sketched", t_sk, r_sk, ratio)):
                rows.append(dict(d=d, k=k, m=m, rep=rep, method=method,
                                 build_millis=build, solve_millis=t,
                                 residual=r, residual_ratio=rr))
    return rows
