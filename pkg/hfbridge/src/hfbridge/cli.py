"""Command line front end for the encoder bridge.

Two subcommands: ``train`` fine-tunes a pretrained encoder on a
training-pairs file, ``export`` scores every gap of a corpus with a
saved checkpoint.  Exit codes: 0 success, 1 invalid input or
configuration, 2 file-system errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import BridgeConfig, BridgeError
from .train import export_probs_file, train_nsp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hfbridge",
        description="Fine-tune a pretrained encoder as a sentence-pair boundary scorer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fine-tune an encoder on a training-pairs file")
    t.add_argument("--pairs", required=True, help="training pairs JSONL")
    t.add_argument("--val-corpus", required=True, help="validation corpus JSONL")
    t.add_argument("--model", required=True, help="pretrained encoder name or local directory")
    t.add_argument("--out", required=True, help="checkpoint output directory")
    t.add_argument("--epochs", type=int, help="override max_epochs")
    t.add_argument("--lr", type=float, help="override learning_rate")
    t.add_argument("--batch-size", type=int, help="override batch_size")
    t.add_argument("--max-seq-len", type=int, help="override max_seq_length")
    t.add_argument("--seed", type=int, help="override seed")

    e = sub.add_parser("export", help="score every corpus gap with a saved checkpoint")
    e.add_argument("--checkpoint", required=True, help="directory written by train")
    e.add_argument("--corpus", required=True, help="corpus JSONL to score")
    e.add_argument("--out", required=True, help="output probabilities JSONL")
    e.add_argument("--max-seq-len", type=int, default=256)
    e.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "train":
            overrides = {}
            if args.epochs is not None:
                overrides["max_epochs"] = args.epochs
            if args.lr is not None:
                overrides["learning_rate"] = args.lr
            if args.batch_size is not None:
                overrides["batch_size"] = args.batch_size
            if args.max_seq_len is not None:
                overrides["max_seq_length"] = args.max_seq_len
            if args.seed is not None:
                overrides["seed"] = args.seed
            cfg = BridgeConfig(model_ref=args.model, **overrides)
            manifest = train_nsp(args.pairs, args.val_corpus, cfg, args.out)
            print(
                "trained {epochs_run} epoch(s): best_epoch={best_epoch} "
                "best_val_bf1={best_val_bf1:.4f} train_loss {initial_train_loss:.6f} "
                "-> {final_train_loss:.6f}".format(**manifest)
            )
        else:
            count = export_probs_file(
                args.checkpoint,
                args.corpus,
                args.out,
                max_seq_length=args.max_seq_len,
                batch_size=args.batch_size,
            )
            print(f"wrote {count} gap probabilities to {args.out}")
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
