"""Cross-validated SVM accuracy and split-based MLP metrics per AU, plus report rendering."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .features import AUS, DEFAULT_PROPERTIES, DistanceProperty, FeatureRecord
from .mlp import MlpConfig, cross_entropy, forward_batch, percent_error, train_mlp
from .svm import KernelSpec, SingleClassError, train_svm

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
Labeled = Sequence[tuple[FeatureRecord, dict[int, int]]]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    seed: int

    def folds(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(train indices, test indices) per fold."""
        a = np.asarray(self.assignments)
        out = []
        for f in range(self.k):
            test = np.flatnonzero(a == f)
            train = np.flatnonzero(a != f)
            assert not np.intersect1d(train, test).size
            out.append((train, test))
        return out


def kfold_split(n: int, k: int = 5, seed: int = 0, strata: Sequence[int] | None = None,
                groups: Sequence[str] | None = None) -> FoldPlan:
    """Seeded, optionally stratified k-fold assignment.

    With ``groups`` the unit of assignment is a group (all its members share a
    fold) and a group's stratum is the largest label among its members.
    Units are shuffled, ordered by stratum and dealt round-robin, so unit
    counts per fold, and per stratum within a fold, differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if groups is not None:
        if len(groups) != n:
            raise ValueError("groups length differs from n")
        units = sorted(set(groups))
        unit_of = {g: i for i, g in enumerate(units)}
        member = np.array([unit_of[g] for g in groups], dtype=int)
    else:
        units = list(range(n))
        member = np.arange(n)
    n_units = len(units)
    if n_units < k:
        raise ValueError(f"cannot split {n_units} units into {k} folds")
    unit_strata = np.zeros(n_units, dtype=int)
    if strata is not None:
        if len(strata) != n:
            raise ValueError("strata length differs from n")
        np.maximum.at(unit_strata, member, np.asarray(strata, dtype=int))
    order = np.random.default_rng(seed).permutation(n_units)
    order = order[np.argsort(unit_strata[order], kind="stable")]
    unit_fold = np.empty(n_units, dtype=int)
    unit_fold[order] = np.arange(n_units) % k
    return FoldPlan(k, tuple(int(f) for f in unit_fold[member]), seed)


def stratified_split(labels: Sequence[int], ratios=(0.7, 0.15, 0.15), seed: int = 0
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise ValueError("ratios must be three positive fractions summing to 1")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        n_tr = int(round(ratios[0] * len(idx)))
        n_va = int(round(ratios[1] * len(idx)))
        parts[0].extend(idx[:n_tr])
        parts[1].extend(idx[n_tr:n_tr + n_va])
        parts[2].extend(idx[n_tr + n_va:])
    return tuple(np.sort(np.asarray(p, dtype=int)) for p in parts)


def _au_data(labeled: Labeled, au: int, props) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([rec.vector(au, props) for rec, _ in labeled], dtype=float)
    ys = np.array([lab[au] for _, lab in labeled], dtype=int)
    return xs, ys


@dataclass
class SvmCell:
    au: int
    kernel: str
    mean: float | None
    folds: list[float | None]
    skipped: list[str] = field(default_factory=list)
    converged: bool = True


@dataclass
class SvmReport:
    kernels: list[str]
    cells: list[SvmCell]
    config: dict

    def cell(self, au: int, kernel: str) -> SvmCell:
        for c in self.cells:
            if c.au == au and c.kernel == kernel:
                return c
        raise KeyError((au, kernel))

    @property
    def aus(self) -> list[int]:
        return sorted({c.au for c in self.cells})

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "svm",
            "kernels": self.kernels,
            "config": self.config,
            "cells": [vars(c) for c in self.cells],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmReport":
        if d.get("kind") != "svm":
            raise ValueError("not an SVM report")
        return cls(d["kernels"], [SvmCell(**c) for c in d["cells"]], d["config"])


def evaluate_svm(labeled: Labeled, kernels: Sequence[KernelSpec] = (KernelSpec("linear"),
                 KernelSpec("gaussian"), KernelSpec("quadratic")), k: int = 5, seed: int = 0,
                 c: float = 1.0, tol: float = 1e-3, max_passes: int = 100, by_sequence: bool = True,
                 aus: Sequence[int] = AUS, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES
                 ) -> SvmReport:
    """Mean held-out accuracy (percent) per AU and kernel over k stratified folds.

    Folds whose training part holds a single class are skipped and noted; an
    AU whose folds are all skipped gets ``mean=None``.
    """
    if not labeled:
        raise ValueError("empty dataset")
    names = [ks.kind for ks in kernels]
    if len(set(names)) != len(names):
        raise ValueError("each kernel kind may appear once")
    groups = [rec.subject_id for rec, _ in labeled] if by_sequence else None
    cells = []
    for au in aus:
        xs, ys = _au_data(labeled, au, props)
        plan = kfold_split(len(xs), k, seed, strata=ys, groups=groups)
        for spec in kernels:
            accs, skipped, converged = [], [], True
            for f, (train, test) in enumerate(plan.folds()):
                try:
                    model = train_svm(xs[train], 2 * ys[train] - 1, spec, c=c, tol=tol,
                                      max_passes=max_passes, seed=seed + f)
                except SingleClassError as exc:
                    accs.append(None)
                    skipped.append(f"fold {f + 1}: {exc}")
                    continue
                converged &= model.converged
                pred = model.predict(xs[test])
                accs.append(100.0 * float(np.mean(pred == 2 * ys[test] - 1)))
            done = [a for a in accs if a is not None]
            mean = float(np.mean(done)) if done else None
            if mean is None:
                log.warning("AU%d/%s skipped: every training fold is single-class", au, spec.kind)
            cells.append(SvmCell(au, spec.kind, mean, accs, skipped, converged))
    config = {"k": k, "seed": seed, "c": c, "tol": tol, "max_passes": max_passes,
              "by_sequence": by_sequence, "n_records": len(labeled),
              "kernels": [{"kind": s.kind, "gamma": s.gamma, "coef0": s.coef0} for s in kernels]}
    return SvmReport(names, cells, config)


@dataclass
class MlpRow:
    au: int
    train_ce: float | None = None
    train_e: float | None = None
    val_ce: float | None = None
    val_e: float | None = None
    test_ce: float | None = None
    test_e: float | None = None
    stop_epoch: int | None = None
    best_epoch: int | None = None
    restarts: int | None = None
    skipped: str | None = None


@dataclass
class MlpReport:
    rows: list[MlpRow]
    config: dict

    def row(self, au: int) -> MlpRow:
        for r in self.rows:
            if r.au == au:
                return r
        raise KeyError(au)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "mlp", "config": self.config,
                "rows": [vars(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpReport":
        if d.get("kind") != "mlp":
            raise ValueError("not an MLP report")
        return cls([MlpRow(**r) for r in d["rows"]], d["config"])


def evaluate_mlp(labeled: Labeled, cfg: MlpConfig | None = None, ratios=(0.7, 0.15, 0.15),
                 seed: int = 0, aus: Sequence[int] = AUS,
                 props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES,
                 models: dict | None = None) -> MlpReport:
    """CE and percent error on train/validation/test splits for one network per AU.

    ``cfg.n_inputs`` is replaced per AU. Pass a dict as ``models`` to collect
    the trained (model, history) pairs.
    """
    if not labeled:
        raise ValueError("empty dataset")
    cfg = cfg or MlpConfig(n_inputs=1)
    rows = []
    for au in aus:
        xs, ys = _au_data(labeled, au, props)
        if len(np.unique(ys)) < 2:
            rows.append(MlpRow(au, skipped=f"all labels are {int(ys[0])}"))
            continue
        split = stratified_split(ys, ratios, seed)
        au_cfg = replace(cfg, n_inputs=xs.shape[1])
        model, hist, _, _ = train_mlp(xs, ys, split, au_cfg)
        metrics = []
        for part in split:
            p = forward_batch(model, xs[part])
            metrics += [cross_entropy(p, ys[part]), percent_error(p, ys[part])]
        rows.append(MlpRow(au, *metrics, hist.stop_epoch, hist.best_epoch, hist.restarts))
        if models is not None:
            models[au] = (model, hist, au_cfg)
    config = {"seed": seed, "ratios": list(ratios), "n_records": len(labeled),
              "n_hidden": cfg.n_hidden, "learning_rate": cfg.learning_rate,
              "max_epochs": cfg.max_epochs, "patience": cfg.patience, "init_seed": cfg.seed,
              "restarts": cfg.restarts, "restart_threshold": cfg.restart_threshold}
    return MlpReport(rows, config)


def _md(v) -> str:
    return "skipped" if v is None else f"{v:.2f}"


def _full(v) -> str:
    return "" if v is None else f"{v:.17g}"


def render_report(report: SvmReport | MlpReport, fmt: str = "markdown") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(report, SvmReport):
        return _render_svm(report, fmt)
    return _render_mlp(report, fmt)


def _render_svm(report: SvmReport, fmt: str) -> str:
    if fmt == "markdown":
        lines = ["| AU | " + " | ".join(k.capitalize() for k in report.kernels) + " |",
                 "|---" * (len(report.kernels) + 1) + "|"]
        for au in report.aus:
            vals = [_md(report.cell(au, k).mean) for k in report.kernels]
            lines.append(f"| AU{au} | " + " | ".join(vals) + " |")
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n_folds = max(len(c.folds) for c in report.cells)
    w.writerow(["au", "kernel", "mean"] + [f"fold_{i + 1}" for i in range(n_folds)])
    for cell in report.cells:
        w.writerow([cell.au, cell.kernel, _full(cell.mean)] + [_full(v) for v in cell.folds])
    return buf.getvalue()


_MLP_FIELDS = ("train_ce", "train_e", "val_ce", "val_e", "test_ce", "test_e")


def _render_mlp(report: MlpReport, fmt: str) -> str:
    if fmt == "markdown":
        lines = ["| AU | Training CE | Training E | Validation CE | Validation E | Testing CE | Testing E |",
                 "|---|---|---|---|---|---|---|"]
        for r in report.rows:
            lines.append(f"| AU{r.au} | " + " | ".join(_md(getattr(r, f)) for f in _MLP_FIELDS) + " |")
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["au", *_MLP_FIELDS, "stop_epoch", "best_epoch", "restarts", "skipped"])
    for r in report.rows:
        w.writerow([r.au, *(_full(getattr(r, f)) for f in _MLP_FIELDS),
                    "" if r.stop_epoch is None else r.stop_epoch,
                    "" if r.best_epoch is None else r.best_epoch,
                    "" if r.restarts is None else r.restarts, r.skipped or ""])
    return buf.getvalue()


def load_report(text: str) -> SvmReport | MlpReport:
    d = json.loads(text)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {d.get('schema_version')!r}")
    return SvmReport.from_dict(d) if d.get("kind") == "svm" else MlpReport.from_dict(d)
