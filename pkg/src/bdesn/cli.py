"""Command-line interface: ``bdesn <subcommand> ...``.

Subcommands::

    synth   generate a synthetic task as canonical CSV files
    import  convert a public archive (ts | ucr | jpvow) to canonical CSV
    search  random hyperparameter search on a training split -> config file
    train   fit one model -> JSON model file (+ training-loss CSV for bdesn)
    eval    score a model file on a test split
    bench   repeated fits with per-run seeds -> text table + per-run CSV

Exit status is 0 on success, 2 on usage errors and 1 on any other error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import configfile
from .data_io import (
    SYNTH_KINDS,
    class_order,
    impute_mean,
    load_dataset,
    load_split,
    make_dataset,
    metrics,
    save_dataset,
    synth_task,
)
from .errors import BdesnError
from .experiments import (
    SearchSpace,
    format_table,
    random_search,
    read_space,
    run_benchmark,
    write_runs_csv,
)
from .importers import FORMATS, import_to_csv
from .pipeline import BdesnConfig, EsnConfig, fit, load_model, predict, save_model

DEFAULT_CONFIGS = {"esn": EsnConfig(), "bdesn": BdesnConfig()}


def _imputed_train(path):
    train = load_split(path)
    # a throwaway test split lets impute_mean apply the training means
    return impute_mean(make_dataset(train, train[:1])).train


def _config_for(args, kind=None):
    if getattr(args, "config", None):
        configs = [configfile.read_config(p) for p in args.config]
    else:
        kinds = kind or args.model or ["bdesn"]
        configs = [DEFAULT_CONFIGS[k] for k in kinds]
    if args.seed is not None:
        configs = [dataclasses.replace(c, seed=args.seed) for c in configs]
    return configs


def cmd_synth(args):
    ds = synth_task(args.kind, args.n_train, args.n_test, args.length, args.noise, args.seed or 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.name or args.kind
    train_csv, test_csv = out / f"{name}_TRAIN.csv", out / f"{name}_TEST.csv"
    save_dataset(ds, train_csv, test_csv)
    print(f"wrote {train_csv} and {test_csv}")


def cmd_import(args):
    paths = import_to_csv(args.format, args.train_src, args.test_src, args.out, args.name)
    print("wrote " + " and ".join(str(p) for p in paths))


def cmd_search(args):
    train = _imputed_train(args.train)
    space = read_space(args.space) if args.space else SearchSpace.default()
    kind = (args.model or ["bdesn"])[0]
    result = random_search(
        space, args.trials, train, kind, seed=args.seed or 0,
        classes=class_order(train), positive_class=args.positive_class,
    )
    configfile.write_config(result.best, args.out)
    best = result.best_trial
    print(f"best of {len(result.trials)} trials: #{best.index} score={best.score:.4f} -> {args.out}")


def cmd_train(args):
    (cfg,) = _config_for(args)[:1]
    train = _imputed_train(args.train)
    model, train_log = fit(train, cfg, class_order(train))
    save_model(model, args.out)
    print(f"wrote {args.out}")
    if train_log is not None and args.log:
        train_log.to_csv(args.log)
        print(f"wrote {args.log}")


def cmd_eval(args):
    model = load_model(args.model_file)
    test = load_split(args.test)
    if args.train:
        test = impute_mean(make_dataset(load_split(args.train), test)).test
    actual = [s.label for s in test]
    m = metrics(predict(model, test), actual, model.classes, args.positive_class)
    text = f"accuracy = {m.accuracy!r}\nf1 = {m.f1!r}\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")


def cmd_bench(args):
    ds = load_dataset(args.train, args.test, name=args.name)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed or 0
    reports = []
    for cfg in _config_for(args, kind=args.model or ["esn", "bdesn"]):
        if args.search_trials:
            space = read_space(args.space) if args.space else SearchSpace.default()
            train = impute_mean(ds).train
            cfg = random_search(
                space, args.search_trials, train, cfg.kind, seed=seed,
                classes=ds.classes, positive_class=args.positive_class,
            ).best
            configfile.write_config(cfg, out / f"{ds.name}_{cfg.kind}_best.cfg")
        reports.append(
            run_benchmark(
                ds, cfg, n_runs=args.runs, base_seed=seed,
                positive_class=args.positive_class, log_dir=out / "trainlogs",
            )
        )
    table = format_table(reports)
    (out / "report.txt").write_text(table, encoding="utf-8")
    write_runs_csv(reports, out / "runs.csv")
    print(table, end="")
    print(f"wrote {out / 'report.txt'} and {out / 'runs.csv'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdesn", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True, config=True):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        if model:
            p.add_argument("--model", action="append", choices=sorted(DEFAULT_CONFIGS))
        if config:
            p.add_argument("--config", action="append", help="key = value model config file")

    p = sub.add_parser("synth", help="generate a synthetic task")
    p.add_argument("kind", choices=SYNTH_KINDS)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--length", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--name")
    common(p, model=False, config=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("import", help="convert an archive to canonical CSV")
    p.add_argument("format", choices=FORMATS)
    p.add_argument("train_src")
    p.add_argument("test_src")
    p.add_argument("--name", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("--train", required=True)
    p.add_argument("--space", help="search-space file (default ranges otherwise)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--positive-class")
    common(p, config=False)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train", help="fit a model")
    p.add_argument("--train", required=True)
    p.add_argument("--log", help="write the bdesn training-loss CSV here")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model on a test split")
    p.add_argument("model_file")
    p.add_argument("--test", required=True)
    p.add_argument("--train", help="training split, used to impute missing test values")
    p.add_argument("--positive-class")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="repeated benchmark runs")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--name", help="dataset name (default: train file stem)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--positive-class")
    p.add_argument("--search-trials", type=int, default=0, help="random-search each model first")
    p.add_argument("--space")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (BdesnError, OSError) as exc:
        print(f"bdesn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
