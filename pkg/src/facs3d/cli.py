"""Command-line front end: gen, extract, label, train, eval, report, pipeline.

Exit codes: 0 success, 2 usage error, 3 data error, 4 a solver hit its
iteration budget (results are still written). Errors go to stderr as one
line: ``facs3d: <kind> error: <message>``.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import figures
from .au_rules import RuleConfig, label_dataset, read_labeled_csv, write_labeled_csv
from .evaluation import (
    MlpReport,
    SvmReport,
    evaluate_mlp,
    evaluate_svm,
    load_report,
    render_report,
    stratified_split,
)
from .features import AUS, extract_dataset, read_feature_csv, write_feature_csv
from .landmark_io import LandmarkFormatError, read_manifest, write_dataset, write_text_atomic
from .mlp import MlpConfig, train_mlp
from .svm import KERNELS, KernelSpec, SingleClassError, train_svm
from .synthgen import GenConfig, generate_dataset

log = logging.getLogger("facs3d")

SEED_ENV = "FACS3D_SEED"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _aus(text: str) -> list[int]:
    try:
        aus = [int(t.strip().lower().removeprefix("au")) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad AU list {text!r}") from None
    bad = [a for a in aus if a not in AUS]
    if bad or not aus:
        raise argparse.ArgumentTypeError(f"AUs must be drawn from {list(AUS)}")
    return aus


def _kernels(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in KERNELS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"kernels must be drawn from {list(KERNELS)}")
    return names


def _add_gen(p):
    p.add_argument("--happy", type=int, default=30, help="happy sequences (default 30)")
    p.add_argument("--sad", type=int, default=30, help="sad sequences (default 30)")
    p.add_argument("--scale", type=float, default=5.0, help="peak distance change (default 5.0)")
    p.add_argument("--noise", type=float, default=0.0, help="per-coordinate noise sigma (default 0)")
    p.add_argument("--variation", type=float, default=0.05, help="per-subject template scaling sd (default 0.05)")
    p.add_argument("--au4-fraction", type=float, default=1 / 3,
                   help="share of sad subjects that lower their brows (default 1/3)")
    p.add_argument("--subtle-fraction", type=float, default=0.5,
                   help="share of subjects with a subtle mouth-corner movement (default 0.5)")
    p.add_argument("--subtle-gain", type=float, default=0.25,
                   help="mouth-corner gain for subtle subjects (default 0.25)")


def _add_svm(p):
    p.add_argument("--c", type=float, default=1.0, help="SVM box constraint (default 1.0)")
    p.add_argument("--gamma", type=float, default=None,
                   help="gaussian gamma (default 1/(n_features*var(X)) per training set)")
    p.add_argument("--coef0", type=float, default=1.0, help="quadratic offset (default 1.0)")
    p.add_argument("--tol", type=float, default=1e-3, help="SMO stopping tolerance (default 1e-3)")
    p.add_argument("--max-passes", type=int, default=100, help="SMO budget in passes over the data (default 100)")


def _add_mlp(p):
    p.add_argument("--hidden", type=int, default=10, help="hidden nodes (default 10)")
    p.add_argument("--lr", type=float, default=0.5, help="learning rate (default 0.5)")
    p.add_argument("--epochs", type=int, default=2000, help="max epochs (default 2000)")
    p.add_argument("--patience", type=int, default=50, help="early-stopping patience (default 50)")
    p.add_argument("--restarts", type=int, default=3, help="max reinitialisations (default 3)")
    p.add_argument("--restart-threshold", type=float, default=5.0,
                   help="test percent error that triggers a restart (default 5)")


def _add_eval(p):
    p.add_argument("--svm", action="store_true", help="run the SVM cross-validation")
    p.add_argument("--mlp", action="store_true", help="run the MLP evaluation")
    p.add_argument("--kernels", type=_kernels, default=list(KERNELS),
                   help="comma-separated kernels (default linear,gaussian,quadratic)")
    p.add_argument("--k", type=int, default=5, help="folds (default 5)")
    p.add_argument("--split", choices=("by-sequence", "by-record"), default="by-sequence",
                   help="fold unit (default by-sequence)")
    p.add_argument("--aus", type=_aus, default=list(AUS), help="comma-separated AUs (default all seven)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    _add_svm(p)
    _add_mlp(p)


def build_parser() -> _Parser:
    parser = _Parser(prog="facs3d", description="3D facial action unit recognition pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate synthetic landmark sequences")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)
    _add_gen(p)

    p = sub.add_parser("extract", help="landmark sequences -> feature CSV")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--lenient", action="store_true", help="accept 2+ frames and unknown keys")

    p = sub.add_parser("label", help="feature CSV -> labeled CSV")
    p.add_argument("--features", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--epsilon", type=float, default=0.0, help="activation threshold (default 0)")

    p = sub.add_parser("train", help="fit one model per AU on a labeled CSV")
    p.add_argument("--labeled", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model", choices=("svm", "mlp"), default="svm")
    p.add_argument("--kernel", choices=KERNELS, default="quadratic")
    p.add_argument("--aus", type=_aus, default=list(AUS))
    p.add_argument("--seed", type=int)
    _add_svm(p)
    _add_mlp(p)

    p = sub.add_parser("eval", help="cross-validate and write reports")
    p.add_argument("--labeled", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)
    _add_eval(p)

    p = sub.add_parser("report", help="re-render a saved json report")
    p.add_argument("input", type=Path)
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("--out", type=Path, help="write here instead of stdout")
    p.add_argument("--figure", type=Path, help="also render a PNG figure")

    p = sub.add_parser("pipeline", help="gen -> extract -> label -> eval in one go")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float, default=0.0)
    _add_gen(p)
    _add_eval(p)
    return parser


# -- configuration built up front so bad flags fail before any work ---------

@contextlib.contextmanager
def _flags():
    try:
        yield
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _gen_kwargs(a) -> dict:
    template = GenConfig(deformation_scale=a.scale, noise_sigma=a.noise, subject_variation=a.variation)
    if a.happy < 0 or a.sad < 0:
        raise ValueError("--happy/--sad must be >= 0")
    for name in ("au4_fraction", "subtle_fraction"):
        if not 0 <= getattr(a, name) <= 1:
            raise ValueError(f"--{name.replace('_', '-')} must lie in [0, 1]")
    if a.subtle_gain < 0:
        raise ValueError("--subtle-gain must be >= 0")
    return dict(n_happy=a.happy, n_sad=a.sad, base_seed=a.seed, template=template,
                au4_fraction=a.au4_fraction, subtle_fraction=a.subtle_fraction, subtle_gain=a.subtle_gain)


def _svm_params(a):
    if a.tol <= 0:
        raise ValueError("--tol must be > 0")
    if a.max_passes < 1:
        raise ValueError("--max-passes must be >= 1")
    if not a.c > 0:
        raise ValueError("--c must be > 0")
    return dict(c=a.c, tol=a.tol, max_passes=a.max_passes)


def _kernel(kind, a) -> KernelSpec:
    return KernelSpec(kind, a.gamma if kind == "gaussian" else None, a.coef0)


def _mlp_cfg(a, seed) -> MlpConfig:
    return MlpConfig(n_inputs=1, n_hidden=a.hidden, learning_rate=a.lr, max_epochs=a.epochs,
                     patience=a.patience, seed=seed, restarts=a.restarts,
                     restart_threshold=a.restart_threshold)


# -- subcommands -------------------------------------------------------------

def cmd_gen(a) -> int:
    with _flags():
        kwargs = _gen_kwargs(a)
    seqs = generate_dataset(**kwargs)
    manifest = write_dataset(seqs, a.out)
    print(f"wrote {len(seqs)} sequences ({a.happy} happy, {a.sad} sad) and {manifest}")
    return EXIT_OK


def cmd_extract(a) -> int:
    seqs = read_manifest(a.manifest, strict=not a.lenient)
    records = extract_dataset(seqs)
    write_text_atomic(a.out, write_feature_csv(records))
    print(f"wrote {len(records)} feature records to {a.out}")
    return EXIT_OK


def cmd_label(a) -> int:
    with _flags():
        cfg = RuleConfig(epsilon=a.epsilon)
    records, _ = read_feature_csv(_read(a.features))
    labeled = label_dataset(records, cfg)
    write_text_atomic(a.out, write_labeled_csv(labeled))
    print(f"wrote {len(labeled)} labeled records to {a.out}")
    return EXIT_OK


def cmd_train(a) -> int:
    with _flags():
        svm_params = _svm_params(a)
        cfg = _mlp_cfg(a, a.seed)
        kernel = _kernel(a.kernel, a)
    labeled = read_labeled_csv(_read(a.labeled))
    status = EXIT_OK
    for au in a.aus:
        xs = [rec.vector(au) for rec, _ in labeled]
        ys = [lab[au] for _, lab in labeled]
        path = a.out / f"model_au{au}.json"
        if a.model == "svm":
            try:
                model = train_svm(xs, [2 * y - 1 for y in ys], kernel, seed=a.seed, **svm_params)
            except SingleClassError as exc:
                log.warning("AU%d skipped: %s", au, exc)
                continue
            if not model.converged:
                status = EXIT_CONVERGENCE
            write_text_atomic(path, model.to_json() + "\n")
        else:
            if len(set(ys)) < 2:
                log.warning("AU%d skipped: single-class labels", au)
                continue
            split = stratified_split(ys, seed=a.seed)
            au_cfg = MlpConfig(**{**vars(cfg), "n_inputs": len(xs[0])})
            model, hist, _, _ = train_mlp(xs, ys, split, au_cfg)
            write_text_atomic(path, model.to_json(au_cfg) + "\n")
            write_text_atomic(a.out / f"history_au{au}.csv", hist.to_csv())
        print(f"AU{au}: wrote {path}")
    return status


def _run_eval(a, labeled, out: Path) -> int:
    run_svm, run_mlp = a.svm, a.mlp
    if not (run_svm or run_mlp):
        run_svm = run_mlp = True
    if a.k < 2:
        raise UsageError("--k must be >= 2")
    with _flags():
        svm_params = _svm_params(a)
        cfg = _mlp_cfg(a, a.seed)
        kernels = [_kernel(k, a) for k in a.kernels]
    status = EXIT_OK
    if run_svm:
        rep = evaluate_svm(labeled, kernels, k=a.k, seed=a.seed, by_sequence=a.split == "by-sequence",
                           aus=a.aus, **svm_params)
        _write_report(rep, out / "report_svm", not a.no_figures)
        if not all(c.converged for c in rep.cells):
            status = EXIT_CONVERGENCE
    if run_mlp:
        rep = evaluate_mlp(labeled, cfg, seed=a.seed, aus=a.aus)
        _write_report(rep, out / "report_mlp", not a.no_figures)
    return status


def cmd_eval(a) -> int:
    labeled = read_labeled_csv(_read(a.labeled))
    return _run_eval(a, labeled, a.out)


def cmd_report(a) -> int:
    rep = load_report(_read(a.input))
    text = render_report(rep, a.format)
    if a.out:
        write_text_atomic(a.out, text)
    else:
        sys.stdout.write(text)
    if a.figure:
        (figures.svm_figure if isinstance(rep, SvmReport) else figures.mlp_figure)(rep, a.figure)
    return EXIT_OK


def cmd_pipeline(a) -> int:
    with _flags():
        gen_kwargs = _gen_kwargs(a)
        rules = RuleConfig(epsilon=a.epsilon)
        _svm_params(a)
        _mlp_cfg(a, a.seed)
        [_kernel(k, a) for k in a.kernels]
    if a.k < 2:
        raise UsageError("--k must be >= 2")
    out = a.out
    manifest = write_dataset(generate_dataset(**gen_kwargs), out / "data")
    records = extract_dataset(read_manifest(manifest))
    write_text_atomic(out / "features.csv", write_feature_csv(records))
    labeled = label_dataset(records, rules)
    write_text_atomic(out / "labeled.csv", write_labeled_csv(labeled))
    # evaluate from the CSV so the pipeline sees exactly what `eval` would
    labeled = read_labeled_csv(_read(out / "labeled.csv"))
    status = _run_eval(a, labeled, out)
    print(f"pipeline finished: {len(records)} records, reports in {out}")
    return status


def _read(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_report(rep: SvmReport | MlpReport, stem: Path, with_figure: bool) -> None:
    for fmt, ext in (("markdown", "md"), ("csv", "csv"), ("json", "json")):
        write_text_atomic(stem.with_suffix(f".{ext}"), render_report(rep, fmt))
    if with_figure:
        (figures.svm_figure if isinstance(rep, SvmReport) else figures.mlp_figure)(rep, stem.with_suffix(".png"))
    print(f"wrote {stem}.{{md,csv,json}}")


COMMANDS = {
    "gen": cmd_gen, "extract": cmd_extract, "label": cmd_label, "train": cmd_train,
    "eval": cmd_eval, "report": cmd_report, "pipeline": cmd_pipeline,
}


def _fail(kind: str, message: str, code: int) -> int:
    message = " ".join(str(message).split())
    print(f"facs3d: {kind} error: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", "absent") is None:
            args.seed = _default_seed()
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except LandmarkFormatError as exc:
        return _fail("data", exc, EXIT_DATA)
    except FileNotFoundError as exc:
        return _fail("data", f"{exc.filename}: no such file", EXIT_DATA)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail("data", exc, EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())
