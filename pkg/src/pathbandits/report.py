"""Figure rendering for emitted run records and sweep tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmitError


def render_record(record: dict, out_dir, stem: str) -> list[Path]:
    """Render the figures for one loaded record; returns the written paths."""
    out_dir = Path(out_dir)
    summary = record.get("summary", {})
    if summary.get("kind") == "sweep":
        return [_render_sweep(record, out_dir, stem)]
    return [_render_run(record, out_dir, stem)]


def _regret_curve(summary: dict, rows: list) -> tuple[np.ndarray, str]:
    cumulative = np.cumsum([row["loss"] for row in rows])
    if all("loss_vector" in row for row in rows):
        table = np.array([row["loss_vector"] for row in rows])
        prefix = table.cumsum(axis=0)
        if summary.get("kind") == "linear":
            comparator = -np.linalg.norm(prefix, axis=1)
        else:
            comparator = prefix.min(axis=1)
        return cumulative - comparator, "cumulative regret"
    # adaptive streams do not replay full loss vectors per row
    return cumulative, "cumulative loss"


def _render_run(record: dict, out_dir: Path, stem: str) -> Path:
    rows = record.get("rows", [])
    if not rows:
        raise EmitError("record has no per-round rows to plot; rerun with record_rows=true")
    summary = record.get("summary", {})
    rounds = np.array([row["t"] for row in rows])
    curve, label = _regret_curve(summary, rows)
    gaps = np.cumsum([(row["loss"] - row["prediction"]) ** 2 for row in rows])

    fig, (ax_regret, ax_gap) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax_regret.plot(rounds, curve, lw=1.2)
    ax_regret.set_xlabel("round")
    ax_regret.set_ylabel(label)
    ax_regret.set_title(str(summary.get("learner", "run")))
    ax_regret.grid(True, alpha=0.3)

    ax_gap.plot(rounds, gaps, lw=1.2, color="tab:orange")
    ax_gap.set_xlabel("round")
    ax_gap.set_ylabel("cumulative squared prediction gap")
    ax_gap.grid(True, alpha=0.3)

    fig.tight_layout()
    path = out_dir / f"{stem}_curves.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _render_sweep(record: dict, out_dir: Path, stem: str) -> Path:
    cells = [row for row in record.get("rows", []) if "regret_mean" in row]
    if not cells:
        raise EmitError("sweep has no successful cells to plot")
    grid_keys = record.get("summary", {}).get("grid_keys", [])
    key = grid_keys[0] if len(grid_keys) == 1 else None
    if key is not None and all(isinstance(c.get(key), (int, float)) for c in cells):
        xs = [c[key] for c in cells]
        xlabel = key
    else:
        xs = list(range(len(cells)))
        xlabel = "cell"
    ys = [c["regret_mean"] for c in cells]
    errs = [c.get("regret_stderr", 0.0) for c in cells]

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean regret")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out_dir / f"{stem}_sweep.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
