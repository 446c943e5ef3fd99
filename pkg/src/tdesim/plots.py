"""Figure rendering for the CLI report path (saved alongside the data files)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .events import Event
from .mismatch import McResult, summarize
from .network import Orientation, Raster

_ORIENT_ORDER = [Orientation.UP, Orientation.DOWN,
                 Orientation.LEFT, Orientation.RIGHT]


def save_step_figure(path: Path, times, fac, epsc, v_mem, spikes,
                     delta_t: float) -> None:
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 6))
    axes[0].plot(times * 1e3, fac, color="tab:blue")
    axes[0].set_ylabel("FAC trace")
    axes[1].plot(times * 1e3, epsc, color="tab:orange")
    axes[1].set_ylabel("EPSC")
    axes[2].plot(times * 1e3, v_mem, color="tab:green")
    for s in spikes:
        axes[2].axvline(s * 1e3, color="k", alpha=0.4, lw=0.8)
    axes[2].set_ylabel("membrane")
    axes[2].set_xlabel("time [ms]")
    axes[0].set_title(f"step response, FAC->TRG delta = {delta_t * 1e3:g} ms "
                      f"({len(spikes)} spikes)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(path: Path, delta_ts: Sequence[float],
                      rows: Mapping[str, tuple[Sequence[float], Sequence[int]]]
                      ) -> None:
    """``rows`` maps variant name -> (charges, spike_counts) over delta_ts."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    dt_ms = np.asarray(delta_ts) * 1e3
    for name, (charges, counts) in rows.items():
        ax1.semilogy(dt_ms, charges, "o-", label=name)
        ax2.plot(dt_ms, counts, "s-", label=name)
    ax1.set_xlabel("delta t [ms]")
    ax1.set_ylabel("transmitted charge")
    ax1.legend()
    ax2.set_xlabel("delta t [ms]")
    ax2.set_ylabel("output spike count")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_mc_figures(hist_path: Path, errorbar_path: Path,
                    old: McResult, new: McResult) -> None:
    n_dt = len(old.delta_ts)
    fig, axes = plt.subplots(2, n_dt, figsize=(2.2 * n_dt, 5),
                             sharex="col", sharey=False)
    for row, (label, result) in enumerate((("old", old), ("new", new))):
        for j in range(n_dt):
            ax = axes[row, j]
            ax.hist(result.normalized[:, j], bins=50, color="tab:blue")
            if row == 0:
                ax.set_title(f"{result.delta_ts[j] * 1e3:g} ms", fontsize=9)
            if j == 0:
                ax.set_ylabel(f"{label} variant")
    fig.suptitle("normalized transmitted charge across Monte Carlo instances")
    fig.tight_layout()
    fig.savefig(hist_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, result in (("old", old), ("new", new)):
        stats = summarize(result)
        dt_ms = [r[0] * 1e3 for r in stats]
        ax.errorbar(dt_ms, [r[1] for r in stats], yerr=[r[2] for r in stats],
                    fmt="o-", capsize=3, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("delta t [ms]")
    ax.set_ylabel("mean transmitted charge")
    ax.legend()
    fig.tight_layout()
    fig.savefig(errorbar_path, dpi=120)
    plt.close(fig)


def save_optical_flow_figures(raster_path: Path, fractions_path: Path,
                              raster: Raster,
                              fractions: Mapping[Orientation, float]) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    colors = {Orientation.UP: "tab:green", Orientation.DOWN: "tab:red",
              Orientation.LEFT: "tab:blue", Orientation.RIGHT: "tab:orange"}
    for idx, (train, orientation) in enumerate(
            zip(raster.trains, raster.orientations)):
        times = np.fromiter(train, dtype=float)
        ax.scatter(times * 1e3, np.full(len(times), idx), s=2,
                   color=colors[orientation])
    ax.set_xlabel("time [ms]")
    ax.set_ylabel("unit index")
    handles = [plt.Line2D([], [], marker="o", ls="", color=colors[o],
                          label=o.value) for o in _ORIENT_ORDER]
    ax.legend(handles=handles, loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(raster_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 4))
    names = [o.value for o in _ORIENT_ORDER]
    values = [fractions[o] for o in _ORIENT_ORDER]
    ax.bar(names, values, color=[colors[o] for o in _ORIENT_ORDER])
    ax.set_ylabel("fraction of network activity")
    fig.tight_layout()
    fig.savefig(fractions_path, dpi=120)
    plt.close(fig)


def save_events_figure(path: Path, events: Sequence[Event],
                       geometry: tuple[int, int]) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if events:
        t = np.array([ev.t for ev in events]) * 1e-3
        y = np.array([ev.y for ev in events])
        p = np.array([ev.polarity for ev in events])
        ax.scatter(t[p > 0], y[p > 0], s=1, color="tab:green", label="+1")
        ax.scatter(t[p < 0], y[p < 0], s=1, color="tab:red", label="-1")
        ax.legend(markerscale=6, fontsize=8)
    ax.set_xlabel("time [ms]")
    ax.set_ylabel("pixel row")
    ax.set_ylim(geometry[1], 0)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
