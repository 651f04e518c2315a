"""Command-line entry point: train, eval, compress, reconstruct, inspect.

Machine-readable CSV goes to stdout; progress and errors go to stderr.
Exit status is 0 on success, 1 for an invalid stage spec, 2 for data errors.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import classifier, dataset, diagnostics, formats, pipeline, reconstruction
from .errors import CuboidPCAError, DimMismatch, ParseError


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _log(msg):
    print(msg, file=sys.stderr)


def _emit(rows, header=("metric", "value"), out=None):
    w = csv.writer(out or sys.stdout, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else x


def cmd_train(args):
    try:
        spec = pipeline.read_spec(args.spec)
    except (ParseError, OSError) as exc:
        raise CliError(f"cannot read spec: {exc}", 1)
    if args.channels is not None:
        spec = pipeline.PipelineSpec(spec.input_dims, args.channels, spec.stages)
    problems = pipeline.validate_spec(spec)
    if problems:
        raise CliError("invalid spec:\n" + "\n".join(f"  {p}" for p in problems), 1)

    manifest = dataset.load_manifest(args.manifest)
    images = dataset.load_dataset(manifest, spec.input_dims, spec.channels)
    if args.augment:
        images = dataset.augment_flips(images)
    X, labels = dataset.stack(images)
    _log(f"training on {len(labels)} images ({len(manifest)} listed)")

    t0 = time.perf_counter()
    model = pipeline.fit(X, spec)
    feats = pipeline.forward(model, X)
    lda = classifier.fit_lda(feats, labels)
    elapsed = time.perf_counter() - t0

    formats.save_model(args.out, model, lda)
    _log(f"wrote {args.out}")
    _emit([
        ("n_train", len(labels)),
        ("n_classes", len(lda.labels)),
        ("feature_dim", spec.feature_dim),
        ("compression_ratio", _fmt(reconstruction.compression_ratio(spec))),
        ("train_seconds", _fmt(elapsed)),
    ])


def cmd_eval(args):
    model, lda = formats.load_model(args.model)
    if lda is None:
        raise CliError("model file has no classifier")
    spec = model.spec
    if lda.feature_dim != spec.feature_dim:
        raise DimMismatch(f"classifier expects {lda.feature_dim} features, transform gives {spec.feature_dim}")
    manifest = dataset.load_manifest(args.manifest)
    images = dataset.load_dataset(manifest, spec.input_dims, spec.channels)
    X, labels = dataset.stack(images)
    ks = sorted(set(k for k in args.top if 1 <= k <= len(lda.labels)))
    if not ks:
        raise CliError(f"no usable --top value for a {len(lda.labels)}-class model")

    t0 = time.perf_counter()
    feats = pipeline.forward(model, X)
    acc = classifier.topk_accuracy(lda, feats, labels, sorted({1, *ks}))
    elapsed = time.perf_counter() - t0

    if args.candidates:
        order = classifier.rank(lda, feats)
        post = classifier.posterior(lda, feats)
        kmax = max(ks)
        with open(args.candidates, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "label", "rank", "candidate", "probability"])
            for n, e in enumerate(manifest):
                for r, m in enumerate(order[n, :kmax], start=1):
                    w.writerow([e.path, e.label, r, lda.labels[m], repr(float(post[n, m]))])

    _emit([("n_test", len(labels)), ("accuracy", _fmt(acc[1])), ("test_seconds", _fmt(elapsed))])
    print()
    _emit([(k, _fmt(acc[k])) for k in ks], header=("rank", "accuracy"))


def cmd_compress(args):
    model, _ = formats.load_model(args.model)
    spec = model.spec
    px = dataset.preprocess(dataset.load_image(args.image, spec.input_dims, spec.channels))
    rec = reconstruction.compress(model, px)
    formats.save_features(args.out, rec)
    ratio = reconstruction.compression_ratio(spec)
    _emit([
        ("channels", rec.channels),
        ("coefficients_per_channel", rec.final_dim),
        ("compression_ratio", f"{ratio:.2f}:1"),
    ])


def cmd_reconstruct(args):
    model, _ = formats.load_model(args.model)
    rec = formats.load_features(args.features)
    out = reconstruction.decompress(model, rec, postprocess=not args.raw)
    dataset.save_image(args.out, out)
    rows = [("output", args.out)]
    if args.report_deviation:
        spec = model.spec
        orig = dataset.preprocess(dataset.load_image(args.report_deviation, spec.input_dims, spec.channels))
        dev = np.mean([reconstruction.percent_deviation(orig[..., c], out[..., c]) for c in range(spec.channels)])
        rows.append(("percent_deviation", repr(float(dev))))
    _emit(rows)


def cmd_inspect(args):
    model, lda = formats.load_model(args.model)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    def put(name, text):
        if out_dir:
            (out_dir / name).write_text(text, encoding="utf-8")
            _log(f"wrote {out_dir / name}")
        else:
            sys.stdout.write(text)
            sys.stdout.write("\n")

    put("eigenspectrum.csv", diagnostics.eigenspectrum_csv(diagnostics.eigenspectrum_report(model)))
    if args.features_from:
        spec = model.spec
        manifest = dataset.load_manifest(args.features_from)
        X, labels = dataset.stack(dataset.load_dataset(manifest, spec.input_dims, spec.channels))
        feats = pipeline.forward(model, X)
        rho = diagnostics.correlation_matrix(feats)
        put("correlation.csv", diagnostics.correlation_csv(rho, spec.channels))
        report = diagnostics.gaussianity_report(feats, labels if args.per_class else None)
        put("gaussianity.csv", diagnostics.gaussianity_csv(report))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuboid-pca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit transform kernels and the classifier")
    p.add_argument("--manifest", required=True, help="training manifest CSV (path,label)")
    p.add_argument("--spec", required=True, help="stage-spec text file")
    p.add_argument("--out", required=True, help="output ICCM model file")
    p.add_argument("--augment", action="store_true", help="add horizontally mirrored copies")
    p.add_argument("--channels", type=int, choices=(1, 3), help="override the spec's channel count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="classify a labelled manifest and report top-k accuracy")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, nargs="+", default=[1, 3, 5])
    p.add_argument("--candidates", help="write per-image ranked candidates to this CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compress", help="store one image as reduced features (ICCF)")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("reconstruct", help="rebuild an image from an ICCF file")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report-deviation", metavar="ORIGINAL", help="print percent deviation against this image")
    p.add_argument("--raw", action="store_true", help="skip equalization; only add the brightness gap back")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("inspect", help="eigen-spectra and feature diagnostics")
    p.add_argument("--model", required=True)
    p.add_argument("--features-from", metavar="MANIFEST", help="also report feature correlation and moments")
    p.add_argument("--per-class", action="store_true", help="group moment statistics by label")
    p.add_argument("--out-dir", help="write one CSV per report here instead of stdout")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        _log(f"error: {exc}")
        return exc.code
    except (CuboidPCAError, OSError, ValueError) as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
