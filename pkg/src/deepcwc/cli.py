"""Command-line driver.

Subcommands: fit, eval-single, eval-fused, dump-residuals, time, synth.
Reports go to stdout and optionally to ``--out``; ``--figures DIR`` renders
matplotlib figures next to the delimited output.  Exit codes are stable for
scripting: 0 success, 2 input/format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from . import bench, crc
from .dataset import (
    SplitSpec,
    load_dataset,
    pair_views,
    save_features,
    split_paired,
    split as split_dataset,
    write_labels,
)
from .errors import CwcError, InputError
from .linalg import DEFAULT_LAMBDA
from .synth import complementary_views

VARIANT_FLAGS = {"plain": "plain", "coefnorm": "coef_normalized"}


def parse_split_flag(text: str) -> SplitSpec:
    """Parse the --split flag: ``firstk:K`` or ``frac:F:SEED``."""
    parts = text.split(":")
    try:
        if parts[0] == "firstk" and len(parts) == 2:
            return SplitSpec.first_k(int(parts[1]))
        if parts[0] == "frac" and len(parts) == 3:
            return SplitSpec.per_fraction(float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise InputError(f"bad --split value {text!r}: {exc}") from exc
    raise InputError(f"bad --split value {text!r}; expected firstk:K or frac:F:SEED")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _hash_config(paths: dict) -> dict:
    return {f"sha256_{name}": _sha256(p) for name, p in paths.items() if p}


def _emit(text: str, out_path) -> None:
    print(text, end="" if text.endswith("\n") else "\n")
    if out_path:
        bench.write_report(text, out_path)


def _add_common_eval_flags(sub, fused: bool):
    sub.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA,
                     help="regularization weight (default 0.001)")
    if fused:
        sub.add_argument("--lambda-deep", dest="lam_deep", type=float, default=None,
                         help="regularization for the deep view (default: --lambda)")
    sub.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain",
                     help="residual variant (coefnorm divides by the coefficient norm)")
    sub.add_argument("--format", choices=("cwcf", "csv"), default="cwcf",
                     help="feature file format (default cwcf)")
    sub.add_argument("--out", default=None, help="write the report here as well")
    sub.add_argument("--figures", default=None, metavar="DIR",
                     help="render figures for the report into DIR")


def _add_single_inputs(sub):
    sub.add_argument("--features", required=True)
    sub.add_argument("--labels", required=True)
    sub.add_argument("--split", default=None, help="firstk:K or frac:F:SEED")
    sub.add_argument("--test-features", default=None)
    sub.add_argument("--test-labels", default=None)


def _add_fused_inputs(sub):
    sub.add_argument("--image-features", required=True)
    sub.add_argument("--image-labels", required=True)
    sub.add_argument("--deep-features", required=True)
    sub.add_argument("--deep-labels", required=True)
    sub.add_argument("--split", default=None, help="firstk:K or frac:F:SEED")
    sub.add_argument("--test-image-features", default=None)
    sub.add_argument("--test-image-labels", default=None)
    sub.add_argument("--test-deep-features", default=None)
    sub.add_argument("--test-deep-labels", default=None)


def _single_train_test(args):
    ds = load_dataset(args.features, args.labels, fmt=args.format)
    config = _hash_config({"features": args.features, "labels": args.labels})
    if args.split:
        spec = parse_split_flag(args.split)
        config["split"] = spec.as_config()
        train, test = split_dataset(ds, spec)
    elif args.test_features and args.test_labels:
        train = ds
        test = load_dataset(args.test_features, args.test_labels, fmt=args.format)
        config.update(_hash_config({
            "test_features": args.test_features, "test_labels": args.test_labels,
        }))
    else:
        raise InputError("need either --split or --test-features/--test-labels")
    return train, test, config


def _fused_train_test(args):
    image = load_dataset(args.image_features, args.image_labels, fmt=args.format,
                         provenance=args.image_features)
    deep = load_dataset(args.deep_features, args.deep_labels, fmt=args.format,
                        provenance=args.deep_features)
    pair = pair_views(image, deep)
    config = _hash_config({
        "image_features": args.image_features, "image_labels": args.image_labels,
        "deep_features": args.deep_features, "deep_labels": args.deep_labels,
    })
    if args.split:
        spec = parse_split_flag(args.split)
        config["split"] = spec.as_config()
        train, test = split_paired(pair, spec)
    elif all((args.test_image_features, args.test_image_labels,
              args.test_deep_features, args.test_deep_labels)):
        train = pair
        test_image = load_dataset(args.test_image_features, args.test_image_labels,
                                  fmt=args.format, provenance=args.test_image_features)
        test_deep = load_dataset(args.test_deep_features, args.test_deep_labels,
                                 fmt=args.format, provenance=args.test_deep_features)
        test = pair_views(test_image, test_deep)
        config.update(_hash_config({
            "test_image_features": args.test_image_features,
            "test_image_labels": args.test_image_labels,
            "test_deep_features": args.test_deep_features,
            "test_deep_labels": args.test_deep_labels,
        }))
    else:
        raise InputError("need either --split or the four explicit test files")
    return train, test, config


def cmd_fit(args) -> int:
    ds = load_dataset(args.features, args.labels, fmt=args.format)
    model = crc.fit(ds, lam=args.lam, residual_variant=VARIANT_FLAGS[args.variant],
                    view=args.view)
    crc.save_model(model, args.out)
    print(f"model: {args.out}")
    print(f"n: {model.n}")
    print(f"d: {model.d}")
    print(f"num_classes: {model.num_classes}")
    print(f"lambda: {model.lam:g}")
    print(f"residual_variant: {model.residual_variant}")
    print(f"storage: {'explicit_projection' if model.projection is not None else 'dual_factor'}")
    return 0


def cmd_eval_single(args) -> int:
    train, test, config = _single_train_test(args)
    report = bench.eval_single(
        train, test, lam=args.lam,
        residual_variant=VARIANT_FLAGS[args.variant], config=config,
    )
    _emit(bench.render_report(report), args.out)
    if args.figures:
        from . import plots

        for path in plots.render_report_figures(report, args.figures, stem="eval_single"):
            print(f"figure: {path}", file=sys.stderr)
    return 0


def cmd_eval_fused(args) -> int:
    train, test, config = _fused_train_test(args)
    report = bench.eval_fused(
        train, test, lambda_image=args.lam, lambda_deep=args.lam_deep,
        residual_variant=VARIANT_FLAGS[args.variant],
        additive_fusion=args.additive_fusion, config=config,
    )
    _emit(bench.render_report(report), args.out)
    if args.figures:
        from . import plots

        for path in plots.render_report_figures(report, args.figures, stem="eval_fused"):
            print(f"figure: {path}", file=sys.stderr)
    return 0


def cmd_dump_residuals(args) -> int:
    train, test, config = _fused_train_test(args)
    lam_deep = args.lam_deep if args.lam_deep is not None else args.lam
    variant = VARIANT_FLAGS[args.variant]
    model_image = crc.fit(train.image, lam=args.lam, residual_variant=variant, view="image")
    model_deep = crc.fit(train.deep, lam=lam_deep, residual_variant=variant, view="deep")
    table = bench.dump_residuals(
        test, model_image, model_deep, args.out, max_queries=args.max_queries
    )
    print(f"dump: {args.out}")
    print(f"queries: {int(table[:, 0].max()) + 1 if table.size else 0}")
    print(f"rows: {table.shape[0] if table.size else 0}")
    if args.figures:
        from . import plots

        for path in plots.render_residual_figures(table, args.figures,
                                                  max_queries=args.figure_queries):
            print(f"figure: {path}", file=sys.stderr)
    return 0


def cmd_time(args) -> int:
    train, test, config = _fused_train_test(args)
    timing = bench.time_runs(
        train, test, reps=args.reps, lambda_image=args.lam,
        lambda_deep=args.lam_deep, residual_variant=VARIANT_FLAGS[args.variant],
        config=config,
    )
    _emit(bench.render_timing(timing), args.out)
    return 0


def cmd_synth(args) -> int:
    train, test = complementary_views(
        num_classes=args.classes,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        dim_image=args.dim_image,
        dim_deep=args.dim_deep,
        noise=args.noise,
        seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = "cwcf" if args.format == "cwcf" else "csv"

    # Per class: training columns first, then test columns, so that
    # --split firstk:<train-per-class> reproduces the generator's split.
    import numpy as np

    from .linalg import FeatureMatrix

    def interleave(view_train, view_test):
        cols = []
        raw = []
        for c in range(args.classes):
            tr = view_train.class_columns(c)
            te = view_test.class_columns(c)
            cols.append(np.concatenate([
                view_train.features.data[:, tr], view_test.features.data[:, te]
            ], axis=1))
            raw.extend([c] * (tr.size + te.size))
        return FeatureMatrix(np.concatenate(cols, axis=1)), raw

    image_all, raw_labels = interleave(train.image, test.image)
    deep_all, _ = interleave(train.deep, test.deep)

    paths = {
        "image_features": out_dir / f"image_features.{ext}",
        "deep_features": out_dir / f"deep_features.{ext}",
        "image_labels": out_dir / "image_labels.txt",
        "deep_labels": out_dir / "deep_labels.txt",
    }
    save_features(image_all, paths["image_features"], fmt=args.format)
    save_features(deep_all, paths["deep_features"], fmt=args.format)
    write_labels(raw_labels, paths["image_labels"])
    write_labels(raw_labels, paths["deep_labels"])
    for name, path in paths.items():
        print(f"{name}: {path}")
    print(f"suggested_split: firstk:{args.train_per_class}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepcwc",
        description="Two-view collaborative representation benchmark driver",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit a model and save it")
    fit.add_argument("--features", required=True)
    fit.add_argument("--labels", required=True)
    fit.add_argument("--format", choices=("cwcf", "csv"), default="cwcf")
    fit.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    fit.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain")
    fit.add_argument("--view", choices=("image", "deep"), default="image")
    fit.add_argument("--out", required=True, help="model file (.npz)")
    fit.set_defaults(func=cmd_fit)

    single = subs.add_parser("eval-single", help="single-view evaluation")
    _add_single_inputs(single)
    _add_common_eval_flags(single, fused=False)
    single.set_defaults(func=cmd_eval_single)

    fused = subs.add_parser("eval-fused", help="two-view fused evaluation")
    _add_fused_inputs(fused)
    _add_common_eval_flags(fused, fused=True)
    fused.add_argument("--additive-fusion", action="store_true",
                       help="sum residuals instead of multiplying (comparison only)")
    fused.set_defaults(func=cmd_eval_fused)

    dump = subs.add_parser("dump-residuals", help="write the per-class residual table")
    _add_fused_inputs(dump)
    dump.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    dump.add_argument("--lambda-deep", dest="lam_deep", type=float, default=None)
    dump.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain")
    dump.add_argument("--format", choices=("cwcf", "csv"), default="cwcf")
    dump.add_argument("--out", required=True, help="output CSV path")
    dump.add_argument("--max-queries", type=int, default=bench.DEFAULT_DUMP_CAP)
    dump.add_argument("--figures", default=None, metavar="DIR")
    dump.add_argument("--figure-queries", type=int, default=4,
                      help="how many queries to render when --figures is set")
    dump.set_defaults(func=cmd_dump_residuals)

    timing = subs.add_parser("time", help="repeat the fused evaluation and time it")
    _add_fused_inputs(timing)
    timing.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    timing.add_argument("--lambda-deep", dest="lam_deep", type=float, default=None)
    timing.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="plain")
    timing.add_argument("--format", choices=("cwcf", "csv"), default="cwcf")
    timing.add_argument("--reps", type=int, default=1)
    timing.add_argument("--out", default=None)
    timing.set_defaults(func=cmd_time)

    synth = subs.add_parser("synth", help="write a synthetic complementary-view dataset")
    synth.add_argument("--out-dir", required=True)
    synth.add_argument("--classes", type=int, default=10)
    synth.add_argument("--train-per-class", type=int, default=20)
    synth.add_argument("--test-per-class", type=int, default=20)
    synth.add_argument("--dim-image", type=int, default=24)
    synth.add_argument("--dim-deep", type=int, default=24)
    synth.add_argument("--noise", type=float, default=0.3)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--format", choices=("cwcf", "csv"), default="cwcf")
    synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CwcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
