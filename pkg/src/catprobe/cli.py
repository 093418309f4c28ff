"""Command-line entry point: synth -> train -> assess -> report.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from . import models, oracle as oracle_mod, pipeline, report as report_mod
from .instances import Dataset, DatasetError, load_dataset, write_dataset
from .search import ALGORITHMS, SearchConfig

__all__ = ["main", "run_cli"]


class CliError(Exception):
    pass


def _parse_budget(spec: str, num_features: int) -> int:
    """Absolute count ("5") or fraction of the feature count ("35%"), min 1."""
    spec = spec.strip()
    if spec.endswith("%"):
        frac = float(spec[:-1]) / 100.0
        if not 0 < frac <= 1:
            raise CliError(f"fractional budget must be in (0%, 100%], got {spec}")
        return max(1, int(frac * num_features))
    budget = int(spec)
    if budget < 1:
        raise CliError("budget must be >= 1")
    return budget


def _build_oracle(spec: str, data: Dataset, num_features: int, cache: bool):
    kind, _, arg = spec.partition(":")
    if kind == "builtin":
        model = models.load_model(arg)
        return oracle_mod.oracle_from_model(model, cache=cache)
    if kind == "remote":
        return oracle_mod.remote_oracle(arg, cache=cache)
    if kind == "truth":
        return oracle_mod.truth_oracle(
            arg, num_features=num_features, num_classes=data.num_classes, cache=cache
        )
    raise CliError(f"unknown oracle spec {spec!r} (use builtin:/remote:/truth:)")


def _read_config_file(path: str) -> dict:
    """Flat key=value file; keys match the long flag names with - or _."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_assess_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True)
    p.add_argument("--oracle", required=True, help="builtin:<model>|remote:<url>|truth:<rule>")
    p.add_argument("--algo", default="fsgs", choices=ALGORITHMS)
    p.add_argument("--budget", default="5", help="edit budget: absolute (5) or fraction (35%%)")
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--sgs-r", type=int, default=5)
    p.add_argument("--ucb-alpha", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--topk", type=int, default=1)
    p.add_argument("--mode", default="classification",
                   choices=("classification", "log_window", "session"))
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--window-fraction", type=float, default=0.3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", required=True, help="machine report output path")
    p.add_argument("--human-report", default=None)
    p.add_argument("--outcomes", default=None, help="per-unit outcome records (jsonl)")
    p.add_argument("--config", default=None, help="flat key=value config file; flags win")


def _cmd_synth(args) -> int:
    if args.kind == "classification":
        data = models.synth_classification(
            seed=args.seed, num_features=args.features, num_candidates=args.candidates,
            num_classes=args.classes, count=args.count, label_noise=args.label_noise,
        )
    else:
        data = models.synth_log_sessions(
            seed=args.seed, vocab=args.vocab, count=args.count,
            abnormal_fraction=args.abnormal_fraction, chain_seed=args.chain_seed,
        )
    write_dataset(data, args.out)
    print(f"wrote {len(data)} {data.kind} records to {args.out}")
    return 0


def _cmd_train(args) -> int:
    data = load_dataset(args.dataset)
    cfg = models.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size,
        seed=args.seed, embed_dim=args.embed_dim,
    )
    if data.kind == "log_sessions":
        model = models.train_window_predictor(data, window=args.window, cfg=cfg)
    else:
        model = models.train_softmax(data, cfg)
        print(f"training accuracy: {model.accuracy(data):.4f}")
    models.save_model(model, args.out)
    print(f"saved model to {args.out}")
    return 0


def _cmd_assess(args) -> int:
    data = load_dataset(args.dataset)
    if args.mode == "classification":
        if data.kind != "classification":
            raise CliError("--mode classification needs a classification dataset")
        feature_counts = {inst.num_features for inst in data.instances}
        if len(feature_counts) != 1:
            raise CliError("fractional budgets need a uniform feature count")
        num_features = feature_counts.pop()
    else:
        num_features = args.window - 1
    cfg = SearchConfig(
        algorithm=args.algo,
        budget=_parse_budget(args.budget, num_features),
        time_limit=args.time_limit,
        sgs_r=args.sgs_r,
        ucb_alpha=args.ucb_alpha,
        seed=args.seed,
        success_threshold=args.threshold,
        cache=not args.no_cache,
        topk=args.topk,
    )
    orc = _build_oracle(args.oracle, data, num_features, cache=cfg.cache)
    if args.mode == "classification":
        run = pipeline.assess_classification(data, orc, cfg, workers=args.workers)
    elif args.mode == "log_window":
        run = pipeline.assess_log_windows(data, orc, cfg, window=args.window,
                                          workers=args.workers)
    else:
        run = pipeline.assess_sessions(
            data, orc, cfg, window=args.window,
            window_fraction=args.window_fraction, workers=args.workers,
        )
    rep = report_mod.build_report(run)
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(report_mod.render(rep, "machine"))
    if args.human_report:
        with open(args.human_report, "w", encoding="utf-8") as fh:
            fh.write(report_mod.render(rep, "human"))
    if args.outcomes:
        pipeline.write_unit_outcomes(run, args.outcomes)
    print(report_mod.render(rep, "human"))
    return 0


def _cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        rep = report_mod.parse_machine(fh.read())
    text = report_mod.render(rep, "human")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catprobe",
        description="Query-based robustness assessment for classifiers over categorical inputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--kind", default="classification",
                   choices=("classification", "log_sessions"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", type=int, default=20)
    p.add_argument("--candidates", type=int, default=5)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--label-noise", type=float, default=0.05)
    p.add_argument("--vocab", type=int, default=20)
    p.add_argument("--abnormal-fraction", type=float, default=0.3)
    p.add_argument("--chain-seed", type=int, default=None,
                   help="pin the session-generating chain independently of --seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a built-in softmax model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=8)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("assess", help="run a robustness assessment")
    _add_assess_flags(p)
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("report", help="render a machine report for humans")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)

    # Config-file defaults for assess: flags on the command line take precedence.
    if argv and argv[0] == "assess" and "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            file_values = _read_config_file(cfg_path)
        except (OSError, CliError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        defaults = []
        for key, value in file_values.items():
            flag = "--" + key.replace("_", "-")
            if flag not in argv:
                if value.lower() == "true":
                    defaults.append(flag)
                elif value.lower() == "false":
                    pass
                else:
                    defaults.extend([flag, value])
        argv = [argv[0]] + defaults + argv[1:]

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (CliError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError, FloatingPointError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
