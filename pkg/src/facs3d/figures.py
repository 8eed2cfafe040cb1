"""Matplotlib figures written next to the tabular reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .evaluation import MlpReport, SvmReport
from .mlp import TrainHistory

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}
# PNG metadata without a version string keeps files stable across installs
_META = {"Software": None}


def _new(width=6.4, height=3.2, ncols=1):
    fig = Figure(figsize=(width, height))
    axes = fig.subplots(1, ncols)
    return fig, axes


def _style(ax):
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    ax.tick_params(direction="out")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    return path


def svm_figure(report: SvmReport, path) -> Path:
    """Grouped bars of mean fold accuracy per AU and kernel; skipped cells are left empty."""
    with matplotlib.rc_context(RC):
        fig, ax = _new()
        aus = report.aus
        width = 0.8 / len(report.kernels)
        x = np.arange(len(aus))
        for i, kern in enumerate(report.kernels):
            vals = [report.cell(au, kern).mean for au in aus]
            ax.bar(x + (i - (len(report.kernels) - 1) / 2) * width,
                   [np.nan if v is None else v for v in vals], width, label=kern.capitalize())
        ax.set_xticks(x, [f"AU{au}" for au in aus])
        ax.set_ylabel("correct classification (%)")
        lo = min([c.mean for c in report.cells if c.mean is not None] or [0.0])
        ax.set_ylim(max(0.0, np.floor(lo / 5) * 5 - 5), 100.5)
        ax.legend(frameon=False, ncols=len(report.kernels), loc="lower right", bbox_to_anchor=(1.0, 1.0))
        _style(ax)
        return _save(fig, path)


def mlp_figure(report: MlpReport, path) -> Path:
    with matplotlib.rc_context(RC):
        fig, (ax_ce, ax_e) = _new(width=8.0, ncols=2)
        rows = [r for r in report.rows if r.skipped is None]
        x = np.arange(len(rows))
        for i, (split, label) in enumerate((("train", "Training"), ("val", "Validation"), ("test", "Testing"))):
            off = (i - 1) * 0.27
            ax_ce.bar(x + off, [getattr(r, f"{split}_ce") for r in rows], 0.27, label=label)
            ax_e.bar(x + off, [getattr(r, f"{split}_e") for r in rows], 0.27, label=label)
        for ax, ylabel in ((ax_ce, "cross-entropy"), (ax_e, "percent error")):
            ax.set_xticks(x, [f"AU{r.au}" for r in rows])
            ax.set_ylabel(ylabel)
            _style(ax)
        # percent error lives in [0, 100]; keep an all-zero panel readable
        top = max([getattr(r, f"{s}_e") for r in rows for s in ("train", "val", "test")] or [0.0])
        ax_e.set_ylim(0, max(5.0, 1.1 * top))
        ax_ce.set_ylim(bottom=0)
        ax_ce.legend(frameon=False)
        return _save(fig, path)


def history_figure(hist: TrainHistory, path, title: str | None = None) -> Path:
    with matplotlib.rc_context(RC):
        fig, ax = _new(width=4.8)
        epochs = np.arange(len(hist.train_ce))
        ax.semilogy(epochs, hist.train_ce, label="train")
        ax.semilogy(epochs, hist.val_ce, label="validation")
        ax.axvline(hist.best_epoch, color="0.5", lw=0.8, ls="--")
        ax.set_xlabel("epoch")
        ax.set_ylabel("cross-entropy")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        _style(ax)
        return _save(fig, path)
