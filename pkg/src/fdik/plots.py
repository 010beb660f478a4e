"""SVG renderings of the experiment CSVs. Plots are derived artifacts only."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import (HOMOGENIZATION_HEADER, SQUARE_HEADER, STEP_HEADER, TRACK_HEADER,  # noqa: E402
                          VARIANTS)


class SchemaError(ValueError):
    pass


SCHEMAS = {
    "homogenization": HOMOGENIZATION_HEADER,
    "step": STEP_HEADER,
    "square": SQUARE_HEADER,
    "track": TRACK_HEADER,
}


def read_csv(path):
    """Read a result CSV and identify its schema from the header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    for kind, expected in SCHEMAS.items():
        if header == expected:
            break
    else:
        raise SchemaError(f"{path}: unrecognized header {header}")
    if not body:
        raise SchemaError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in body):
        raise SchemaError(f"{path}: ragged rows")
    return kind, {name: [r[i] for r in body] for i, name in enumerate(header)}


def _save(fig, path):
    # fixed hash salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": "fdik", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_homogenization(cols, path):
    fig, axes = plt.subplots(3, 3, figsize=(9, 9))
    variants = np.array(cols["variant"])
    for j, v in enumerate(VARIANTS):
        sel = variants == v
        rr = np.array(cols["entry_row"], dtype=int)[sel]
        cc = np.array(cols["entry_col"], dtype=int)[sel]
        for i, stat in enumerate(("mean", "variance", "std")):
            mat = np.zeros((6, 6))
            mat[rr, cc] = np.array(cols[stat], dtype=float)[sel]
            im = axes[i, j].imshow(mat, cmap="viridis")
            fig.colorbar(im, ax=axes[i, j], fraction=0.046)
            axes[i, j].set_title(f"{v}: {stat}", fontsize=9)
            axes[i, j].set_xticks([])
            axes[i, j].set_yticks([])
    fig.tight_layout()
    return _save(fig, path)


def plot_step(cols, path):
    labels = STEP_HEADER[1:7]
    fig, axes = plt.subplots(2, 3, figsize=(12, 6), sharex=True)
    solver = np.array(cols["solver"])
    it = np.array(cols["iter"], dtype=int)
    for ax, name in zip(axes.flat, labels):
        for s in sorted(set(solver)):
            ax.plot(it[solver == s], np.array(cols[name], dtype=float)[solver == s], label=s)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_title(name)
    axes[0, 0].legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_square(cols, path):
    fig, ax = plt.subplots(figsize=(6, 6))
    solver = np.array(cols["solver"])
    y = np.array(cols["y"], dtype=float)
    z = np.array(cols["z"], dtype=float)
    for s, marker in zip(sorted(set(solver)), ("o", "x")):
        ax.plot(y[solver == s], z[solver == s], marker, ms=2, ls="", label=s)
    ax.set_xlabel("y [m]")
    ax.set_ylabel("z [m]")
    ax.set_aspect("equal")
    ax.legend()
    return _save(fig, path)


def plot_track(cols, path):
    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    gain = np.array(cols["gain"], dtype=float)
    t = np.array(cols["t"], dtype=float)
    for g in sorted(set(gain)):
        sel = gain == g
        axes[0].plot(np.array(cols["y"], dtype=float)[sel], np.array(cols["z"], dtype=float)[sel],
                     label=f"kp={g:g}")
        axes[1].plot(t[sel], np.array(cols["err_trans"], dtype=float)[sel])
        axes[2].plot(t[sel], np.array(cols["err_rot"], dtype=float)[sel])
    axes[0].set_aspect("equal")
    axes[0].set_title("tip path (y-z)")
    axes[1].set_title("translational error [m]")
    axes[2].set_title("rotational error [rad]")
    axes[0].legend()
    fig.tight_layout()
    return _save(fig, path)


PLOTTERS = {
    "homogenization": plot_homogenization,
    "step": plot_step,
    "square": plot_square,
    "track": plot_track,
}


def emit_plots(csv_paths, out_dir=None):
    """Render one SVG per CSV next to it (or into ``out_dir``); returns the image paths."""
    out = []
    for p in csv_paths:
        p = Path(p)
        kind, cols = read_csv(p)
        target = (Path(out_dir) if out_dir else p.parent) / (p.stem + ".svg")
        out.append(PLOTTERS[kind](cols, target))
    return out
