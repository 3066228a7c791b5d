"""CLI: extract deep features from an image directory into CWCF files."""

from __future__ import annotations

import argparse
import sys

from .errors import ExtractorError
from .extract import ExtractionSpec, extract
from .registry import MODELS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwc-extract",
        description="Extract CNN layer activations for an image directory "
        "(one subdirectory per class) into a CWCF feature file and a label file.",
    )
    parser.add_argument("--model", required=True, choices=sorted(MODELS))
    parser.add_argument("--layer", required=True,
                        help="layer name, e.g. global_pool, logits, fc6")
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument("--out-features", required=True, help="CWCF output path")
    parser.add_argument("--out-labels", required=True, help="label file output path")
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--allow-untrained", action="store_true",
                        help="build the architecture with random (seeded) weights "
                        "when pretrained weights cannot be loaded; features are "
                        "dimension-correct but carry no learned semantics")
    parser.add_argument("--untrained-seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExtractionSpec(
        model_name=args.model,
        layer_name=args.layer,
        input_dir=args.input,
        out_features=args.out_features,
        out_labels=args.out_labels,
        batch_size=args.batch,
        pretrained=not args.allow_untrained,
        untrained_seed=args.untrained_seed,
    )
    try:
        result = extract(spec)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"features: {result.out_features}")
    print(f"labels: {result.out_labels}")
    print(f"images: {result.num_images}")
    print(f"dim: {result.dim}")
    for class_id, name in enumerate(result.class_names):
        print(f"class {class_id}: {name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
