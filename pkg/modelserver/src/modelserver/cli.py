"""Command line: train a model from JSONL records, or serve one over HTTP."""

from __future__ import annotations

import argparse
import logging
import sys

from .model import ServedModel, load_jsonl_records, train_model


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="modelserver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a softmax model from JSONL records")
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="serve a model over HTTP")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)
    if args.command == "train":
        records = load_jsonl_records(args.dataset)
        model = train_model(records, epochs=args.epochs,
                            learning_rate=args.lr, seed=args.seed)
        model.save(args.out)
        print(f"saved {model.num_features}-feature "
              f"{model.num_classes}-class model to {args.out}")
        return

    import uvicorn

    from .app import create_app

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    app = create_app(ServedModel.load(args.model))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
