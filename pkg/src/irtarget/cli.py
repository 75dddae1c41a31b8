"""Command line entry point.

Exit status: 0 success, 1 usage error, 2 data/parse error, 3 numeric or
contract failure.
"""
import argparse
import json
import logging
import os
import sys
from collections import defaultdict

import numpy as np

from . import margin_classifier as mc
from .color_transfer import colorize
from .colorspace import luminance_plane
from .config import ConfigError, load_config
from .evaluation import evaluate_dataset
from .manifest import ManifestError, parse_manifest
from .netpbm import ImageFormatError, read_image, read_pgm, read_ppm, write_image
from .pipeline import (
    annotate,
    classify,
    detect,
    detections_jsonl,
    evaluate_manifest,
    recognize,
    train_from_manifest,
)
from .pseudocolor import coding_range, pseudo_color_encode
from .synth import generate_synthetic, load_spec, with_seed

log = logging.getLogger("irtarget")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _as_rgb(img):
    return np.repeat(img[..., None], 3, axis=2) if img.ndim == 2 else img


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _require_output(args):
    if not args.output:
        raise UsageError(f"{args.command} needs --output")
    return args.output


def _image_id(args, path):
    return args.image_id or os.path.splitext(os.path.basename(path))[0]


def cmd_colorize(args, cfg):
    dest = _require_output(args)
    out = colorize(read_pgm(args.target), read_ppm(args.template), cfg.transfer_params,
                   workers=cfg.workers)
    write_image(dest, out)


def cmd_encode(args, cfg):
    dest = _require_output(args)
    img = _as_rgb(read_image(args.image))
    luma = luminance_plane(img)
    write_image(dest, pseudo_color_encode(img, luma, coding_range(luma), cfg.palette))


def cmd_detect(args, cfg):
    img = _as_rgb(read_image(args.image))
    dets = detect(img, cfg)[3]
    image_id = _image_id(args, args.image)
    _write_text(args.output, detections_jsonl(d.to_record(image_id) for d in dets))


def cmd_predict(args, cfg):
    model = mc.load(args.model)
    img = _as_rgb(read_image(args.image))
    dets = classify(model, detect(img, cfg)[3])
    image_id = _image_id(args, args.image)
    _write_text(args.output, detections_jsonl(d.to_record(image_id) for d in dets))


def cmd_train(args, cfg):
    dest = _require_output(args)
    manifest = parse_manifest(args.manifest)
    model = train_from_manifest(manifest, cfg, args.template)
    _write_text(dest, mc.dumps(model))
    log.info("trained on %d samples, classes %s", model.meta["n_samples"], model.classes)


def _read_detections(path):
    preds = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                preds[rec["image"]].append((tuple(rec["bbox"]), rec["class"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ManifestError(f"{path}: line {lineno}: bad detection record ({exc})")
    return dict(preds)


def cmd_evaluate(args, cfg):
    if not (args.detections or args.model):
        raise UsageError("evaluate needs --model or --detections")
    manifest = parse_manifest(args.manifest)
    if args.detections:
        entries = manifest.split(args.split)
        report = evaluate_dataset(entries, _read_detections(args.detections), cfg.iou_threshold)
    elif args.model:
        report, _ = evaluate_manifest(manifest, mc.load(args.model), cfg, args.split,
                                      args.template)
    else:
        raise UsageError("evaluate needs --model or --detections")
    if args.output:
        _write_text(args.output, json.dumps(report.as_dict(), indent=2) + "\n")
    print(report.table())


def cmd_synth(args, cfg):
    dest = _require_output(args)
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = with_seed(spec, args.seed)
    manifest = generate_synthetic(spec, dest)
    log.info("wrote %d scenes to %s", len(manifest), args.output)


def cmd_recognize(args, cfg):
    out_dir = _require_output(args)
    model = mc.load(args.model)
    gray = read_pgm(args.target)
    result = recognize(gray, read_ppm(args.template), model, cfg)
    os.makedirs(out_dir, exist_ok=True)
    image_id = _image_id(args, args.target)
    _write_text(os.path.join(out_dir, "detections.jsonl"),
                detections_jsonl(d.to_record(image_id) for d in result.detections))
    write_image(os.path.join(out_dir, "annotated.ppm"), annotate(result, model))
    log.info("%s: %d detections", image_id, len(result.detections))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--output", "-o", help="output file or directory")
    common.add_argument("--workers", type=int, help="worker threads for colorization")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = _Parser(prog="irtarget", description="Infrared target colorization and recognition")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("colorize", parents=[common], help="colorize a PGM frame from a PPM template")
    p.add_argument("target")
    p.add_argument("template")
    p.set_defaults(func=cmd_colorize)

    p = sub.add_parser("encode", parents=[common], help="pseudo-color the hottest band")
    p.add_argument("image")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("detect", parents=[common], help="segment targets and list features")
    p.add_argument("image")
    p.add_argument("--image-id")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("predict", parents=[common], help="detect and classify targets")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.add_argument("--image-id")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("train", parents=[common], help="train a model from a manifest")
    p.add_argument("manifest")
    p.add_argument("--template", help="template for entries without one")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="miss/misrecognition rates")
    p.add_argument("manifest")
    p.add_argument("--model")
    p.add_argument("--detections", help="score a detections file instead of running the model")
    p.add_argument("--split", default="test", choices=("training", "test"))
    p.add_argument("--template", help="template for entries without one")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--spec", help="scene spec JSON (default: bundled benchmark)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("recognize", parents=[common], help="full pipeline on one frame")
    p.add_argument("target")
    p.add_argument("--template", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--image-id")
    p.set_defaults(func=cmd_recognize)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, workers=args.workers)
        args.func(args, cfg)
    except UsageError as exc:
        print(f"irtarget: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ImageFormatError as exc:
        print(f"irtarget: image format error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except mc.ModelFormatError as exc:
        print(f"irtarget: model file error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ManifestError as exc:
        print(f"irtarget: manifest error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"irtarget: config error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"irtarget: cannot access file: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"irtarget: contract failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
