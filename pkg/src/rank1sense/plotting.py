"""PNG figures next to CLI output; matplotlib is imported only when asked for."""

from collections import defaultdict


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    fig.clf()


def plot_trace(rows, path):
    """Relative error and subspace distances against iteration, one line per seed."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    by_seed = defaultdict(list)
    for r in rows:
        by_seed[r["seed"]].append(r)
    for seed, rs in sorted(by_seed.items()):
        t = [r["t"] for r in rs]
        axes[0].semilogy(t, [max(r["rel_error"], 1e-17) for r in rs], marker="o", ms=3,
                         label=f"seed {seed}")
        axes[1].semilogy(t, [max(r["dist_U"], 1e-17) for r in rs], ls="-", color="C0", alpha=0.6)
        axes[1].semilogy(t, [max(r["dist_V"], 1e-17) for r in rs], ls="--", color="C1", alpha=0.6)
    axes[0].set(xlabel="iteration", ylabel="relative spectral error")
    axes[1].set(xlabel="iteration", ylabel="dist to true subspace (U solid, V dashed)")
    if len(by_seed) <= 10:
        axes[0].legend(fontsize=7)
    _save(fig, path)
    plt.close(fig)


def plot_sweep(rows, path):
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    m = [r["m"] for r in rows]
    axes[0].semilogx(m, [r["success_fraction"] for r in rows], marker="o")
    axes[0].set(xlabel="m per block", ylabel="success fraction", ylim=(-0.05, 1.05))
    axes[1].loglog(m, [max(r["median_rel_error"], 1e-17) for r in rows], marker="o")
    axes[1].set(xlabel="m per block", ylabel="median final relative error")
    _save(fig, path)
    plt.close(fig)


def plot_operators(rows, path, columns=("init_error", "bx_error", "by_error", "gx_norm", "gy_norm")):
    """Median of each operator norm against ``m`` on log-log axes."""
    import numpy as np

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ms = sorted({r["m"] for r in rows})
    for c in columns:
        med = [np.median([r[c] for r in rows if r["m"] == m]) for m in ms]
        ax.loglog(ms, med, marker="o", label=c)
    ax.set(xlabel="m", ylabel="median norm")
    ax.legend(fontsize=8)
    _save(fig, path)
    plt.close(fig)


def plot_proof(rows, path):
    import numpy as np

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ms = sorted({r["m"] for r in rows})
    for m in ms:
        ys = [r["bd_minus_c_ratio"] for r in rows if r["m"] == m]
        ax.scatter([m] * len(ys), ys, s=8, alpha=0.5, color="C0")
    ax.plot(ms, [np.median([r["bd_minus_c_ratio"] for r in rows if r["m"] == m]) for m in ms],
            color="C1", marker="o", label="median")
    ax.set(xscale="log", yscale="log", xlabel="m", ylabel="||BD - C|| / (k dist)")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def plot_bench(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = sorted({(r["d"], r["k"], r["m"]) for r in rows})
    for j, method in enumerate(("naive", "sketched")):
        ys = []
        for key in labels:
            t = [r["solve_millis"] for r in rows if (r["d"], r["k"], r["m"]) == key
                 and r["method"] == method]
            ys.append(sum(t) / len(t))
        ax.bar([i + 0.4 * j for i in range(len(labels))], ys, width=0.4, label=method)
    ax.set_xticks([i + 0.2 for i in range(len(labels))])
    ax.set_xticklabels([f"d={d} k={k}\nm={m}" for d, k, m in labels], fontsize=7)
    ax.set(ylabel="mean solve time (ms)")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
