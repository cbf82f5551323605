"""Command-line front end.

Settings resolve as flags > ``--config`` JSON file > per-command defaults.
Every output starts with the resolved configuration so a run can be replayed.
Exit codes: 0 success, 2 usage error, 1 runtime failure (JSON on stderr).
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .altmin import SolverConfig, required_iterations
from .errors import Rank1SenseError
from .experiments import (
    BENCH_COLUMNS,
    OPERATOR_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    bench_regression,
    operator_sweep,
    proof_diagnostics,
    run_trials,
    sweep_m,
)
from .io import _jsonable, csv_text
from .linalg import top_k_left_singular_vectors
from .regression import solve_sensing_step
from .sensing import evaluate, sample_ensemble

COMMANDS = ("run", "sweep-m", "check-operators", "proof-diagnostics", "bench-regression")

DEFAULTS = {
    "run": dict(kappa=1.0, iters=None, eps0=1e-6, method="naive", sketch_eps=1e-6,
                sketch_delta=0.01, seed=0, trials=1, final_fit="extra-block"),
    "sweep-m": dict(kappa=1.0, iters=None, eps0=1e-6, method="naive", seed=0, trials=5),
    "check-operators": dict(d=20, k=2, kappa=1.0, m=[100000], seed=0, trials=1, eps=0.1,
                            probes=1),
    "proof-diagnostics": dict(d=8, k=2, kappa=2.0, m=[800], seed=0, trials=20,
                              max_dist=0.1, eps=None),
    "bench-regression": dict(d=[20], k=[2], m=[2000], seed=0, trials=1, sketch_eps=1e-6,
                             sketch_delta=0.01),
}
REQUIRED = {"run": ("d", "k", "m"), "sweep-m": ("d", "k", "m")}
LIST_DIMS = {"bench-regression"}

OPERATOR_OUT = OPERATOR_COLUMNS + ["z_max_norm", "all_passed"]
PROOF_OUT = ["m", "d", "k", "seed", "dist_U", "bd_minus_c_norm", "bd_minus_c_ratio",
             "f_norm", "f_bound_refined", "sigma_min_B", "sigma_min_R",
             "sigma_min_R_bound", "f_identity_residual", "rewrite_residual",
             "dist_V_next", "checks_passed"]
TIMING = {"millis", "build_millis", "solve_millis"}


class UsageError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="rank1sense", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        s = sub.add_parser(name)
        many = "+" if name in LIST_DIMS else None
        s.add_argument("--d", type=int, nargs=many)
        s.add_argument("--k", type=int, nargs=many)
        s.add_argument("--kappa", type=float)
        s.add_argument("--m", type=int, nargs="+", help="measurements per block (list allowed)")
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int, help="seeds seed .. seed+trials-1")
        s.add_argument("--config", type=Path, help="JSON file of defaults; flags win")
        s.add_argument("--out", type=Path, help="output file (stdout if omitted)")
        s.add_argument("--format", choices=("csv", "json"), default=None)
        s.add_argument("--no-timing", action="store_true", default=None,
                       help="drop wall-clock columns so output is byte-reproducible")
        s.add_argument("--figures", action="store_true", default=None,
                       help="also write a PNG next to --out (needs matplotlib)")
        if name in ("run", "sweep-m"):
            s.add_argument("--iters", type=int)
            s.add_argument("--eps0", type=float)
            s.add_argument("--method", choices=("naive", "sketched"))
        if name in ("run", "bench-regression"):
            s.add_argument("--sketch-eps", type=float)
            s.add_argument("--sketch-delta", type=float)
        if name == "run":
            s.add_argument("--final-fit", choices=("extra-block", "literal"))
        if name in ("check-operators", "proof-diagnostics"):
            s.add_argument("--eps", type=float, help="operator accuracy target")
        if name == "check-operators":
            s.add_argument("--probes", type=int)
        if name == "proof-diagnostics":
            s.add_argument("--max-dist", type=float)
    return p


def _resolve(args):
    cfg = dict(DEFAULTS[args.command], format="csv", no_timing=False, figures=False)
    if args.config is not None:
        try:
            loaded = json.loads(args.config.read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        loaded.pop("command", None)
        loaded.pop("version", None)
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key not in ("command", "config") and val is not None:
            cfg[key] = val
    cfg["out"] = str(cfg["out"]) if cfg.get("out") is not None else None
    for key in REQUIRED.get(args.command, ()):
        if cfg.get(key) is None:
            raise UsageError(f"--{key} is required for {args.command}")
    if isinstance(cfg.get("m"), int):
        cfg["m"] = [cfg["m"]]
    if args.command in LIST_DIMS:
        for key in ("d", "k"):
            if isinstance(cfg[key], int):
                cfg[key] = [cfg[key]]
    if not cfg["m"]:
        raise UsageError("--m needs at least one value")
    if cfg["trials"] < 1:
        raise UsageError("--trials must be >= 1")
    if cfg["figures"] and not cfg["out"]:
        raise UsageError("--figures needs --out")
    return cfg


def _validate(cmd, cfg):
    """Range checks through the library's own validators, before any compute."""
    d, k = cfg["d"], cfg["k"]
    if cmd in ("run", "sweep-m"):
        if cfg["iters"] is None:
            cfg["iters"] = required_iterations(cfg["eps0"], k, cfg["kappa"], cfg["kappa"])
        if cmd == "run" and len(cfg["m"]) != 1:
            raise UsageError("run takes a single --m")
        for m in cfg["m"]:
            SolverConfig(d, k, m, cfg["iters"], eps0=cfg["eps0"], method=cfg["method"],
                         sketch_eps=cfg.get("sketch_eps", 1e-6),
                         sketch_delta=cfg.get("sketch_delta", 0.01),
                         final_fit=cfg.get("final_fit", "extra-block"))
    elif cmd == "bench-regression":
        if min(d) < 1 or min(k) < 1 or any(kk > dd for kk in k for dd in d):
            raise UsageError("need 1 <= k <= d")
        if min(cfg["m"]) < 2 * max(d) * max(k):
            raise UsageError("bench needs m >= 2 d k for the sketched solver")
    else:
        if not 1 <= k <= d:
            raise UsageError("need 1 <= k <= d")
        if min(cfg["m"]) < 1:
            raise UsageError("--m must be positive")
        if cmd == "check-operators" and cfg["probes"] < 1:
            raise UsageError("--probes must be >= 1")
    if cmd != "bench-regression" and k > 1 and cfg["kappa"] < 1:
        raise UsageError("--kappa must be >= 1")


def _check_writable(out):
    if out is None:
        return
    parent = Path(out).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"output directory {parent} is not writable")


def _pick(rows, columns):
    return [{c: r[c] for c in columns} for r in rows]


def _cmd_run(cfg):
    seeds = range(cfg["seed"], cfg["seed"] + cfg["trials"])
    runs = run_trials(cfg["d"], cfg["k"], cfg["kappa"], cfg["m"][0], cfg["iters"], seeds,
                      method=cfg["method"], eps0=cfg["eps0"], sketch_eps=cfg["sketch_eps"],
                      sketch_delta=cfg["sketch_delta"], final_fit=cfg["final_fit"])
    rows, summaries = [], []
    for run in runs:
        trace = run["trace"]
        for t, du, dv, rel, res, ms in trace.rows():
            rows.append(dict(seed=run["seed"], t=t, dist_U=du, dist_V=dv, rel_error=rel,
                             residual=res, millis=ms))
        s = dict(seed=run["seed"], final_rel_error=trace.final_rel_error,
                 success=trace.final_rel_error <= cfg["eps0"],
                 total_samples=trace.total_samples,
                 solver_residual=trace.residual[-1],
                 decay_ratios=run["decay"].ratios, flagged_iterations=run["decay"].flagged,
                 phase_millis=trace.phase_millis, total_millis=trace.total_millis)
        if cfg["method"] == "sketched":
            s.update(_naive_equivalence(run, cfg))
        summaries.append(s)
    summary = dict(runs=summaries,
                   successes=sum(s["success"] for s in summaries),
                   total_samples=summaries[0]["total_samples"])
    return rows, TRACE_COLUMNS, summary


def _naive_equivalence(run, cfg):
    # Refit the last block with the exact solver on the returned column space;
    # the minimum residual does not depend on the basis chosen for it.
    c = run["config"]
    block = c.num_blocks - 1 if c.final_fit == "extra-block" else 2 * c.T - 1
    E = sample_ensemble(c.d, c.m_per_block, c.seed, block=block)
    b = evaluate(run["ground_truth"].W, E)
    if c.final_fit == "extra-block":
        U = top_k_left_singular_vectors(run["W"], c.k)
        _, naive = solve_sensing_step(U, E, b, method="naive", return_residual=True)
        bn = float(np.linalg.norm(b))
        naive = naive / bn if bn > 0 else naive
        sk = run["trace"].residual[-1]
        # Residuals here are relative to ||b||; the eps^2 term admits the
        # absolute slack of the gradient stopping rule when the fit is exact.
        eps = cfg["sketch_eps"]
        ok = sk ** 2 <= ((1 + eps) * naive) ** 2 + eps ** 2
        return dict(naive_residual=naive, naive_equivalent=bool(ok))
    return dict(naive_residual=math.nan, naive_equivalent=None)


def _cmd_sweep(cfg):
    rows = sweep_m(cfg["d"], cfg["k"], cfg["kappa"], cfg["m"], cfg["iters"], cfg["trials"],
                   seed=cfg["seed"], eps0=cfg["eps0"], method=cfg["method"])
    return rows, SWEEP_COLUMNS, None


def _cmd_operators(cfg):
    rows = operator_sweep(cfg["d"], cfg["k"], cfg["kappa"], cfg["m"], cfg["trials"],
                          seed=cfg["seed"], eps=cfg["eps"], probes=cfg["probes"])
    for r in rows:
        r["z_max_norm"] = r["report"].z_max_norm
        r["all_passed"] = r["report"].all_passed
    summary = dict(all_passed=all(r["all_passed"] for r in rows))
    return rows, OPERATOR_OUT, summary


def _cmd_proof(cfg):
    rows = []
    for m in sorted(cfg["m"]):
        rows += proof_diagnostics(cfg["d"], cfg["k"], cfg["kappa"], m, cfg["trials"],
                                  seed=cfg["seed"], max_dist=cfg["max_dist"], eps=cfg["eps"])
    medians = {m: float(np.median([r["bd_minus_c_ratio"] for r in rows if r["m"] == m]))
               for m in sorted(cfg["m"])}
    summary = dict(max_f_identity_residual=max(r["f_identity_residual"] for r in rows),
                   max_rewrite_residual=max(r["rewrite_residual"] for r in rows),
                   all_checks_passed=all(r["checks_passed"] for r in rows),
                   median_bd_minus_c_ratio=medians)
    return rows, PROOF_OUT, summary


def _cmd_bench(cfg):
    rows = bench_regression(cfg["d"], cfg["k"], cfg["m"], reps=cfg["trials"], seed=cfg["seed"],
                            eps=cfg["sketch_eps"], delta=cfg["sketch_delta"])
    worst = max(r["residual_ratio"] for r in rows)
    return rows, BENCH_COLUMNS, dict(max_residual_ratio=worst,
                                     all_within_eps=worst <= 1 + cfg["sketch_eps"])


HANDLERS = {"run": _cmd_run, "sweep-m": _cmd_sweep, "check-operators": _cmd_operators,
            "proof-diagnostics": _cmd_proof, "bench-regression": _cmd_bench}
FIGURES = {"run": "plot_trace", "sweep-m": "plot_sweep", "check-operators": "plot_operators",
           "proof-diagnostics": "plot_proof", "bench-regression": "plot_bench"}


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items()
                if str(k) not in TIMING and not str(k).endswith("_millis")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _emit(cmd, cfg, rows, columns, summary):
    echo = dict(cfg, command=cmd, version=__version__)
    if cfg["no_timing"]:
        columns = [c for c in columns if c not in TIMING]
        summary = _strip_timing(summary)
    out = Path(cfg["out"]) if cfg["out"] else None
    if cfg["format"] == "json":
        doc = dict(config=echo, rows=_pick(rows, columns))
        if summary is not None:
            doc["summary"] = summary
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    else:
        text = csv_text(rows, columns, echo=echo)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        if cfg["format"] == "csv" and summary is not None:
            doc = dict(config=echo, summary=summary)
            out.with_suffix(".summary.json").write_text(
                json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    if cfg["figures"]:
        from . import plotting

        getattr(plotting, FIGURES[cmd])(rows, out.with_suffix(".png"))


def _fail(exc):
    err = dict(error=type(exc).__name__, message=str(exc))
    sys.stderr.write(json.dumps(err) + "\n")
    return 1


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    cmd = args.command
    try:
        cfg = _resolve(args)
        _validate(cmd, cfg)
    except (UsageError, Rank1SenseError) as exc:
        parser.exit(2, f"{parser.prog} {cmd}: error: {exc}\n")
    except (KeyError, TypeError) as exc:
        parser.exit(2, f"{parser.prog} {cmd}: error: bad configuration ({exc})\n")
    try:
        _check_writable(cfg["out"])
        rows, columns, summary = HANDLERS[cmd](cfg)
        _emit(cmd, cfg, rows, columns, summary)
    except Exception as exc:  # any failure becomes a JSON error record
        return _fail(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
