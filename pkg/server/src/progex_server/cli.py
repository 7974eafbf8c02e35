"""Entry point: serve a model file over stdio (default) or TCP."""

from __future__ import annotations

import argparse
import sys

from .loaders import ModelLoadError, load_served_model
from .server import serve_stdio, serve_tcp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="progex-serve",
        description="Serve a serialized classifier as a binary black box.",
    )
    parser.add_argument("--model", required=True, help="JSON model file or pickle")
    parser.add_argument(
        "--threshold",
        type=float,
        default=0.5,
        help="probability cutoff for scored models (default 0.5)",
    )
    parser.add_argument(
        "--arity", type=int, default=None, help="input width for pickled models"
    )
    parser.add_argument("--tcp", type=int, help="listen on this TCP port instead of stdio")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = load_served_model(args.model, threshold=args.threshold, arity=args.arity)
    except (ModelLoadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.tcp is not None:
        try:
            serve_tcp(model, args.tcp, log=lambda msg: print(msg, file=sys.stderr))
        except KeyboardInterrupt:
            pass
        return 0
    serve_stdio(model, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
