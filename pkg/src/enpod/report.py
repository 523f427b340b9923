"""Figure rendering for the report stage.

Reads the pipeline's CSV artifacts and renders PNG figures next to them.
All functions take explicit paths so tests can point them at fixtures.
"""

import glob
import os
import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import artifacts
from .errors import ConfigError

FIGSIZE = (6.4, 4.2)
DPI = 140


def _series_by_label(path):
    header, rows = artifacts.read_csv(path)
    if header[:3] != ["time", "label", "value"]:
        raise ConfigError(f"{os.path.basename(path)} lacks time,label,value columns")
    series = {}
    for t, lab, v in rows:
        series.setdefault(lab, ([], []))
        series[lab][0].append(float(t))
        series[lab][1].append(float(v))
    return series


def render_singular_values(csv_path, png_path):
    header, rows = artifacts.read_csv(csv_path)
    idx = [int(r[header.index("i")]) for r in rows]
    sigma = [float(r[header.index("sigma")]) for r in rows]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogy(idx, sigma, "o-", markersize=3)
    ax.set_xlabel("mode index")
    ax.set_ylabel("singular value")
    ax.set_title("Snapshot singular value decay")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=DPI)
    plt.close(fig)


def _render_timeseries(full_csv, rom_csvs, png_path, quantity):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    if full_csv is not None:
        series = _series_by_label(full_csv)
        if "mean" in series:
            t, v = series["mean"]
            ax.plot(t, v, "k-", linewidth=1.8, label="full order (mean)")
    for path in rom_csvs:
        m = re.search(r"_R(\d+)\.csv$", os.path.basename(path))
        label = f"reduced R={m.group(1)}" if m else os.path.basename(path)
        series = _series_by_label(path)
        if "mean" in series:
            t, v = series["mean"]
            ax.plot(t, v, "--", linewidth=1.2, label=label)
    ax.set_xlabel("time")
    ax.set_ylabel(quantity)
    ax.set_title(f"Ensemble mean {quantity} over time")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=DPI)
    plt.close(fig)


def render_energy(full_csv, rom_csvs, png_path):
    _render_timeseries(full_csv, rom_csvs, png_path, "kinetic energy")


def render_enstrophy(full_csv, rom_csvs, png_path):
    _render_timeseries(full_csv, rom_csvs, png_path, "enstrophy")


def render_error_vs_R(csv_path, png_path):
    header, rows = artifacts.read_csv(csv_path)
    R = [int(r[header.index("R")]) for r in rows]
    err = [float(r[header.index("relative_error")]) for r in rows]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogy(R, err, "s-", markersize=5)
    ax.set_xlabel("basis size R")
    ax.set_ylabel("relative error")
    ax.set_title("Reduced ensemble accuracy vs basis size")
    ax.set_xticks(R)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=DPI)
    plt.close(fig)


def render_all(out_dir, force=False):
    """Render every figure whose inputs exist; returns the written names."""
    plans = []
    sv = os.path.join(out_dir, "singular_values.csv")
    if os.path.exists(sv):
        plans.append(("sv_decay.png", render_singular_values, (sv,)))
    full_energy = os.path.join(out_dir, "full_energy.csv")
    rom_energy = sorted(glob.glob(os.path.join(out_dir, "rom_energy_R*.csv")))
    if os.path.exists(full_energy) or rom_energy:
        plans.append(("energy.png", render_energy,
                      (full_energy if os.path.exists(full_energy) else None,
                       rom_energy)))
    full_ens = os.path.join(out_dir, "full_enstrophy.csv")
    rom_ens = sorted(glob.glob(os.path.join(out_dir, "rom_enstrophy_R*.csv")))
    if os.path.exists(full_ens) or rom_ens:
        plans.append(("enstrophy.png", render_enstrophy,
                      (full_ens if os.path.exists(full_ens) else None,
                       rom_ens)))
    err = os.path.join(out_dir, "error_vs_R.csv")
    if os.path.exists(err):
        plans.append(("error_vs_R.png", render_error_vs_R, (err,)))
    if not plans:
        raise ConfigError(
            "nothing to render: run the pod, rom, and compare stages first")

    clashes = [name for name, _, _ in plans
               if os.path.exists(os.path.join(out_dir, name))]
    if clashes and not force:
        raise ConfigError("refusing to overwrite " + ", ".join(clashes)
                          + "; pass --force")
    written = []
    for name, fn, extra in plans:
        fn(*extra, os.path.join(out_dir, name))
        written.append(name)
    return written
