"""Command line interface: train, extract-brain, eval-loop.

Exit codes: 0 success; 1 eval-loop found no scorable pairs; 2 bad
arguments, files, or stream protocol; 3 extract-brain found no brain
(no output file is written).
"""

from __future__ import annotations

import argparse
import json
import sys

from headnet.data import open_source
from headnet.errors import EmptyBrainError, HeadnetError
from headnet.eval import evaluate
from headnet.infer import extract_brain, parse_command
from headnet.train import train
from headnet.unet import UNetSpec

EXIT_OK = 0
EXIT_NO_PAIRS = 1
EXIT_ERROR = 2
EXIT_EMPTY_BRAIN = 3


def _spec_from_args(args):
    dims = tuple(int(d) for d in args.dims.split(","))
    if len(dims) == 1:
        dims = dims * 3
    return UNetSpec(
        levels=args.levels,
        base_channels=args.base_channels,
        convs_per_level=args.convs_per_level,
        in_dims=dims,
    )


def _cmd_train(args):
    spec = _spec_from_args(args)
    with open_source(args.source) as source:
        losses = train(
            source, args.steps, spec, args.seed, args.out,
            lr=args.lr, log_path=args.log,
        )
    print(f"wrote {args.out}; final loss {losses[-1]:.4f}" if losses else f"wrote {args.out}")
    return EXIT_OK


def _cmd_extract_brain(args):
    try:
        extract_brain(args.image, args.weights, args.out, command=parse_command(args.postprocess_cmd))
    except EmptyBrainError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_EMPTY_BRAIN
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval_loop(args):
    records = []
    for record in evaluate(args.weights, args.data, command=parse_command(args.postprocess_cmd)):
        records.append(record)
        print(json.dumps(record))
    scores = [r["dice"] for r in records]
    print(
        json.dumps(
            {
                "summary": True,
                "count": len(records),
                "mean_dice": sum(scores) / len(scores) if scores else None,
            }
        )
    )
    return EXIT_OK if records else EXIT_NO_PAIRS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="headnet",
        description="Train and run the brain-extraction network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a stream endpoint or dataset directory")
    p.add_argument("--source", required=True, help="host:port to stream from, or a dataset directory")
    p.add_argument("--steps", type=int, required=True, help="optimization steps (one sample each)")
    p.add_argument("--seed", type=int, default=0, help="weight-init and torch RNG seed")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--levels", type=int, default=5, help="resolution levels")
    p.add_argument("--base-channels", type=int, default=8, help="channels at the top level")
    p.add_argument("--convs-per-level", type=int, default=2, help="convolutions per level")
    p.add_argument("--dims", default="128,128,128", help="training grid, one or three comma-separated extents")
    p.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    p.add_argument("--log", default=None, help="per-step loss log (JSON lines)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("extract-brain", help="write the brain mask for one image")
    p.add_argument("--image", required=True, help="input image file")
    p.add_argument("--weights", required=True, help="checkpoint file")
    p.add_argument("--out", required=True, help="output mask file")
    p.add_argument("--postprocess-cmd", default=None, help="generator CLI to run (default: synthhead from PATH)")
    p.set_defaults(func=_cmd_extract_brain)

    p = sub.add_parser("eval-loop", help="score the model over a labeled dataset directory")
    p.add_argument("--weights", required=True, help="checkpoint file")
    p.add_argument("--data", required=True, help="directory of image/labels pairs")
    p.add_argument("--postprocess-cmd", default=None, help="generator CLI to run (default: synthhead from PATH)")
    p.set_defaults(func=_cmd_eval_loop)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HeadnetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
