"""Figures rendered from a run trace (PNG files, Agg backend)."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

ESTIMATE = dict(color="0.6", lw=1.6)
TRUTH = dict(color="k", lw=0.8)


def _fig(nrows, height_per_row=1.6):
    fig, axes = plt.subplots(nrows, 1, sharex=True, figsize=(6.4, max(2.4, height_per_row * nrows)), squeeze=False)
    return fig, axes[:, 0]


def plot_states(trace, path, window=None):
    """True states (black) against the fused estimate (grey)."""
    x, x_hat, k = trace.array("x"), trace.array("x_hat"), np.asarray(trace.k)
    sl = slice(None) if window is None else slice(window[0], window[1] + 1)
    fig, axes = _fig(x.shape[1])
    for i, ax in enumerate(axes):
        ax.plot(k[sl], x_hat[sl, i], label=r"$\hat{x}$", **ESTIMATE)
        ax.plot(k[sl], x[sl, i], label="$x$", **TRUTH)
        ax.set_ylabel(f"$x_{i + 1}$")
    axes[0].legend(loc="upper right", fontsize=8, frameon=False)
    axes[-1].set_xlabel("$k$")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_error(trace, path):
    err = trace.array("err")
    fig, ax = plt.subplots(figsize=(6.4, 2.8))
    ax.semilogy(trace.k, np.maximum(err, 1e-300), **TRUTH)
    ax.set_xlabel("$k$")
    ax.set_ylabel(r"$|\hat{x}-x|$")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_attack(trace, path, window):
    """a_hat(k) against the attack that actually entered at k-1."""
    a_hat, a_app = trace.array("a_hat"), trace.array("a_applied")
    lo, hi = max(window[0], 1), min(window[1], len(trace) - 1)
    ks = np.arange(lo, hi + 1)
    fig, axes = _fig(a_hat.shape[1])
    for i, ax in enumerate(axes):
        ax.plot(ks, a_hat[ks, i], label=r"$\hat{a}(k)$", **ESTIMATE)
        ax.plot(ks, a_app[ks - 1, i], label="$a(k-1)$", **TRUTH)
        ax.set_ylabel(f"$a_{i + 1}$")
    axes[0].legend(loc="upper right", fontsize=8, frameon=False)
    axes[-1].set_xlabel("$k$")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_isolation(trace, path):
    p = trace.p
    grid = np.zeros((p, len(trace)))
    for k, W in enumerate(trace.W_hat):
        grid[list(W), k] = 1.0
    fig, ax = plt.subplots(figsize=(6.4, 0.6 + 0.4 * p))
    ax.imshow(grid, aspect="auto", cmap="Greys", interpolation="nearest",
              extent=(-0.5, len(trace) - 0.5, p + 0.5, 0.5))
    ax.set_yticks(range(1, p + 1))
    ax.set_ylabel("isolated")
    ax.set_xlabel("$k$")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_all(trace, outdir, window, prefix="") -> list:
    os.makedirs(outdir, exist_ok=True)
    name = lambda s: os.path.join(outdir, f"{prefix}{s}.png")
    paths = [name("states"), name("error"), name("attack"), name("isolation")]
    plot_states(trace, paths[0])
    plot_error(trace, paths[1])
    plot_attack(trace, paths[2], window)
    plot_isolation(trace, paths[3])
    return paths
