"""Command line entry points: train a checkpoint, serve one over HTTP."""

import argparse
import json
import logging
import sys
from dataclasses import asdict

from .config import TrainerConfig
from .data import load_labeled
from .serve import DEFAULT_THRESHOLD, serve
from .train import train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="router-trainer")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fine-tune a router checkpoint")
    p_train.add_argument("--dataset", required=True,
                         help="JSONL of {id, text, label}")
    p_train.add_argument("--out", required=True, help="checkpoint directory")
    p_train.add_argument("--config", help="TrainerConfig JSON (optional)")
    p_train.add_argument("--seed", type=int)

    p_serve = sub.add_parser("serve", help="serve a checkpoint over HTTP")
    p_serve.add_argument("--artifact", required=True)
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "train":
        cfg = (TrainerConfig.load(args.config) if args.config
               else TrainerConfig())
        if args.seed is not None:
            cfg = TrainerConfig(**{**asdict(cfg), "seed": args.seed})
        metrics = train(load_labeled(args.dataset), cfg, out_dir=args.out)
        print(json.dumps({
            "initial_loss": metrics.initial_loss,
            "epoch_losses": metrics.epoch_losses,
            "train_accuracy": metrics.train_accuracy,
            "confusion": {"tp": metrics.tp, "fp": metrics.fp,
                          "fn": metrics.fn, "tn": metrics.tn},
        }, indent=2))
        return 0
    serve(args.artifact, args.port, host=args.host, threshold=args.threshold)
    return 0


if __name__ == "__main__":
    sys.exit(main())
