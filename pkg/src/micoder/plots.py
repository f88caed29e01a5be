"""Figure rendering for the report path.

Each function takes already-computed rows (the same data written to
CSV) and renders a PNG next to the delimited output.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .channel import ebn0_db_to_noise_variance
from .qam import SUPPORTED_ORDERS, qam_ser_theoretical


def render_bler_figure(path, points, qam_order=None, rate=None, label="MI+CE"):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    x = [p.ebn0_db for p in points]
    y = [max(p.bler, 1e-12) for p in points]
    ax.semilogy(x, y, "o-", label=label)
    if qam_order in SUPPORTED_ORDERS and rate:
        grid = np.linspace(min(x), max(x), 200)
        theory = [qam_ser_theoretical(qam_order, ebn0_db_to_noise_variance(db, rate)) for db in grid]
        ax.semilogy(grid, theory, "k--", label=f"{qam_order}-QAM theory")
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel("block error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_constellation_figure(path, table, title=None):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    pts = np.asarray(table).ravel()
    ax.scatter(pts.real, pts.imag, s=30)
    ax.axhline(0, color="gray", lw=0.5)
    ax.axvline(0, color="gray", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_mi_sweep_figure(path, rows):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    by_symbols = {}
    for symbols, ebn0, bits, stderr in rows:
        by_symbols.setdefault(symbols, []).append((ebn0, bits, stderr))
    for symbols, pts in sorted(by_symbols.items()):
        pts.sort()
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        err = [p[2] for p in pts]
        ax.errorbar(x, y, yerr=err, marker="o", label=f"{symbols} symbols")
        ax.axhline(np.log2(symbols), color="gray", lw=0.5, ls=":")
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel("MI estimate [bits]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace_figure(path, trace, ylabel="estimator value [nats]"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(trace, lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_qam_figure(path, rows, order):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    x = [r[0] for r in rows]
    ax.semilogy(x, [max(r[1], 1e-12) for r in rows], "k--", label="theory")
    ax.semilogy(x, [max(r[2], 1e-12) for r in rows], "o", label="simulated")
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel(f"{order}-QAM symbol error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
