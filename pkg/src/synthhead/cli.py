"""Command line interface: generate, serve, postprocess, evaluate.

Exit codes: 0 success; 1 evaluate found no scorable pairs; 2 bad
arguments, config, or file format; 3 postprocess found no brain
(class 1 empty), in which case no output file is written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from synthhead.config import GeneratorConfig, load_config
from synthhead.dataset import generate_dataset
from synthhead.errors import SynthheadError
from synthhead.metrics import dice, hausdorff, jaccard
from synthhead.nifti import read_array, write_volume
from synthhead.postprocess import argmax_labels, select_brain_mask
from synthhead.stream import serve_stream
from synthhead.volume import LabelVolume, MaskVolume

EXIT_OK = 0
EXIT_NO_PAIRS = 1
EXIT_ERROR = 2
EXIT_EMPTY_BRAIN = 3

_NIFTI_SUFFIXES = (".nii.gz", ".nii")


def _load_cli_config(args):
    cfg = load_config(args.config) if args.config else GeneratorConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg.validate()


def _cmd_generate(args):
    cfg = _load_cli_config(args)
    manifest = generate_dataset(cfg, args.count, args.out, workers=args.workers)
    print(f"wrote {manifest['count']} samples to {args.out}")
    return EXIT_OK


def _cmd_serve(args):
    cfg = _load_cli_config(args)
    serve_stream(cfg, args.listen)
    return EXIT_OK


def _foreground(data):
    """Binary foreground: class 1 for label data, >= 0.5 for scalar data."""
    if data.dtype == np.uint8:
        return data == 1
    return data >= 0.5


def _cmd_postprocess(args):
    data, spacing, affine = read_array(args.in_path)
    if data.ndim == 4:
        if data.shape[3] != 3 or data.dtype != np.float32:
            raise SynthheadError(
                f"expected three float32 classes on the 4th axis, got "
                f"{data.shape} {data.dtype}"
            )
        labels = argmax_labels(data, spacing=spacing, affine=affine)
    elif data.ndim == 3 and data.dtype == np.uint8:
        labels = LabelVolume(data, spacing=spacing, affine=affine)
    else:
        raise SynthheadError(
            f"expected a label volume or 4D class probabilities, got "
            f"{data.shape} {data.dtype}"
        )
    mask = select_brain_mask(labels)
    if mask is None:
        print("no brain found: class 1 is empty", file=sys.stderr)
        return EXIT_EMPTY_BRAIN
    write_volume(mask, args.out_path)
    print(f"wrote {args.out_path}")
    return EXIT_OK


def _volume_id(name):
    for suffix in _NIFTI_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return None


def _list_volumes(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        vid = _volume_id(name)
        if vid is not None:
            out[vid] = os.path.join(directory, name)
    return out


def _cmd_evaluate(args):
    pred = _list_volumes(args.pred)
    gt = _list_volumes(args.gt)
    percentile = 95.0 if args.hausdorff == "p95" else None

    scored = []
    for vid in sorted(set(pred) | set(gt)):
        if vid not in gt:
            print(json.dumps({"id": vid, "warning": "missing ground truth"}))
            continue
        if vid not in pred:
            print(json.dumps({"id": vid, "warning": "missing prediction"}))
            continue
        p_data, _, _ = read_array(pred[vid])
        g_data, g_spacing, _ = read_array(gt[vid])
        p = MaskVolume(_foreground(p_data), spacing=g_spacing)
        g = MaskVolume(_foreground(g_data), spacing=g_spacing)
        record = {
            "id": vid,
            "dice": dice(p, g),
            "jaccard": jaccard(p, g),
            "hausdorff_mm": hausdorff(p, g, spacing=g_spacing, percentile=percentile),
        }
        scored.append(record)
        print(json.dumps(record))

    def mean_of(key):
        values = [r[key] for r in scored if r[key] is not None]
        return sum(values) / len(values) if values else None

    print(
        json.dumps(
            {
                "summary": True,
                "count": len(scored),
                "mean_dice": mean_of("dice"),
                "mean_jaccard": mean_of("jaccard"),
                "mean_hausdorff_mm": mean_of("hausdorff_mm"),
            }
        )
    )
    return EXIT_OK if scored else EXIT_NO_PAIRS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="synthhead",
        description="Synthetic head/brain volume generator and evaluation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a labeled dataset to a directory")
    p.add_argument("--config", help="config file (defaults apply when omitted)")
    p.add_argument("--count", type=int, default=3000, help="samples to write")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1, help="generation threads")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("serve", help="stream fresh samples over a socket")
    p.add_argument("--config", help="config file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument(
        "--listen",
        default="127.0.0.1:0",
        help="host:port to bind (port 0 picks one and prints it)",
    )
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser(
        "postprocess", help="reduce class output to the final brain mask"
    )
    p.add_argument("--in", dest="in_path", required=True, help="labels or 4D probabilities")
    p.add_argument("--out", dest="out_path", required=True, help="output mask file")
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted masks")
    p.add_argument("--gt", required=True, help="directory of reference volumes")
    p.add_argument(
        "--hausdorff",
        choices=("max", "p95"),
        default="max",
        help="surface distance flavor",
    )
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SynthheadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
