"""Command-line front end: extract, score, evaluate.

The defaults (CIELAB color space, KLD dissimilarity, 2 scales x 3
orientations, d0 = 0.1) reproduce the recommended configuration, so
``rriqa score ref-features.rrf distorted.png`` needs no flags.

Exit codes: 0 success, 1 processing error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import metric, validation
from .color import ColorSpace, load_image
from .errors import RriqaError
from .metric import DistanceKind
from .pyramid import PyramidConfig

FEATURE_SUFFIX = ".rrf"

_SPACES = {s.value: s for s in ColorSpace}
_DISTANCES = {d.value: d for d in DistanceKind}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rriqa",
        description="Reduced-reference color image quality assessment.")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for any randomized processing (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser(
        "extract", help="extract reference features into a .rrf side channel")
    p_extract.add_argument("image", type=Path, help="reference image (PNG/BMP)")
    p_extract.add_argument("-o", "--output", type=Path, default=None,
                           help=f"feature file (default: image path + {FEATURE_SUFFIX})")
    p_extract.add_argument("--space", choices=sorted(_SPACES), default="cielab",
                           help="color space for the statistics (default cielab)")
    p_extract.add_argument("--scales", type=int, default=2,
                           help="pyramid scales (default 2)")
    p_extract.add_argument("--orientations", type=int, default=3,
                           help="pyramid orientations (default 3)")
    p_extract.add_argument("--json", action="store_true",
                           help="also print the payload as JSON")

    p_score = sub.add_parser(
        "score", help="score a distorted image against stored features")
    p_score.add_argument("features", type=Path, help="feature file from extract")
    p_score.add_argument("image", type=Path, help="distorted image")
    p_score.add_argument("--distance", choices=sorted(_DISTANCES), default="kld",
                         help="dissimilarity measure (default kld)")
    p_score.add_argument("--d0", type=float, default=metric.DEFAULT_D0,
                         help="distortion normalization constant (default 0.1)")

    p_eval = sub.add_parser(
        "evaluate", help="run the validation protocol over a labeled dataset")
    p_eval.add_argument("root", type=Path, help="dataset root directory")
    p_eval.add_argument("manifest", type=Path,
                        help="manifest with '<mos> <distorted-filename>' lines")
    p_eval.add_argument("-o", "--output", type=Path, default=None,
                        help="report CSV path (default: beside the manifest)")
    p_eval.add_argument("--space", choices=sorted(_SPACES), default="cielab",
                        help="color space (default cielab)")
    p_eval.add_argument("--distance", choices=sorted(_DISTANCES), default="kld",
                        help="dissimilarity measure (default kld)")
    p_eval.add_argument("--scales", type=int, default=2)
    p_eval.add_argument("--orientations", type=int, default=3)
    p_eval.add_argument("--d0", type=float, default=metric.DEFAULT_D0)
    p_eval.add_argument("--per-type-fit", action="store_true",
                        help="refit the logistic per distortion type")
    return parser


def _cmd_extract(args) -> int:
    cfg = PyramidConfig(scales=args.scales, orientations=args.orientations)
    image = load_image(args.image)
    features = metric.extract_features(image, _SPACES[args.space], cfg)
    output = args.output or args.image.with_suffix(args.image.suffix + FEATURE_SUFFIX)
    output.write_bytes(metric.encode_features(features))
    print(f"wrote {output} ({features.num_scalars} scalars)")
    if args.json:
        print(metric.features_to_json(features))
    return 0


def _cmd_score(args) -> int:
    features = metric.decode_features(args.features.read_bytes())
    distorted = load_image(args.image)
    result = metric.score(features, distorted, _DISTANCES[args.distance], args.d0)
    print(f"D = {result.d_total:.6f}")
    print(f"Q = {result.q:.6f}")
    for index, value in enumerate(result.per_band):
        print(f"band {index}: d = {value:.6f}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = validation.EvalConfig(
        color_space=_SPACES[args.space],
        distance=_DISTANCES[args.distance],
        pyramid_cfg=PyramidConfig(scales=args.scales, orientations=args.orientations),
        d0=args.d0,
        per_type_fit=args.per_type_fit)
    samples = validation.load_dataset(args.root, args.manifest)
    report = validation.evaluate(samples, cfg)
    output = args.output or args.manifest.with_suffix(args.manifest.suffix + ".report.csv")
    output.write_text(report.to_csv())
    sys.stdout.write(report.to_text())
    print(f"wrote {output}")
    return 0


_COMMANDS = {"extract": _cmd_extract, "score": _cmd_score, "evaluate": _cmd_evaluate}


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and run one command; returns the exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RriqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
