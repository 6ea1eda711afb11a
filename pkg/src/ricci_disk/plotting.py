"""Static figures written next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_series(series, path):
    t = series.column("t")
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    ax = axes[0]
    ax.semilogy(t, np.abs(series.column("r_max")), label="R max")
    ax.semilogy(t, np.abs(series.column("r_min")), label="|R min|")
    ax.set_xlabel("t")
    ax.legend()
    axes[1].plot(t, series.column("area"), label="area")
    axes[1].plot(t, series.column("length"), label="boundary length")
    axes[1].set_xlabel("t")
    axes[1].legend()
    w = series.column("w_inf")
    if np.all(np.isnan(w)):
        axes[2].plot(t, series.column("h_boundary"))
        axes[2].set_ylabel("H")
    else:
        axes[2].plot(t, w)
        axes[2].set_ylabel("W")
    axes[2].set_xlabel("t")
    return _save(fig, path)


def plot_normalized(ns, path):
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    axes[0].plot(ns.t_tilde, ns.r_max, label="R max")
    axes[0].plot(ns.t_tilde, ns.r_min, label="R min")
    axes[0].set_xlabel("normalized time")
    axes[0].legend()
    axes[1].plot(ns.t_tilde, ns.h)
    axes[1].set_xlabel("normalized time")
    axes[1].set_ylabel("H")
    return _save(fig, path)


def plot_blowup(record, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.8))
    cmap = plt.get_cmap("viridis")
    n = max(len(record.levels) - 1, 1)
    for i, lv in enumerate(record.levels):
        axes[0].plot(lv.s, lv.w, color=cmap(i / n), lw=1)
    last = record.levels[-1]
    if last.hemisphere_K:
        k = np.sqrt(last.hemisphere_K)
        axes[0].plot(last.s, np.sin(k * last.s) / k, "k--", lw=1, label="round template")
        axes[0].legend()
    axes[0].set_xlabel("rescaled s")
    axes[0].set_ylabel("rescaled w")
    axes[1].semilogy(range(len(record.levels)), np.abs(record.ratios - 1.0) + 1e-16, "o-")
    axes[1].set_xlabel("level")
    axes[1].set_ylabel("|R max / R min - 1|")
    return _save(fig, path)


def plot_kappa(r, kappa, path):
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.loglog(r, kappa, "o-")
    ax.set_xlabel("r")
    ax.set_ylabel("volume ratio")
    return _save(fig, path)


def plot_profile(s, phi, path):
    fig, ax = plt.subplots(figsize=(5, 3.8))
    ax.plot(s, phi)
    ax.set_xlabel("s")
    ax.set_ylabel("Phi")
    return _save(fig, path)
