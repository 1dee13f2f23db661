"""Command-line entry point: ``gazlab <command> --config PATH``.

Exit codes: 0 success, 2 validation error (bad config, paths, inputs or model
file), 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import analysis
from .config import ConfigError, ExperimentConfig, load_config
from .corpus import CorpusError, dataset_stats
from .evaluation import evaluate
from .features import BASELINE, FEATURE_MODES, GAZ_DENSE, GAZ_DISCRETE
from .gazetteer import GazetteerError, gazetteer_stats
from .matcher import build_matcher
from .pipeline import fingerprint, fit
from .tagger import ModelFormatError, count_parameters, load_model, measure_train_time, save_model

logger = logging.getLogger("gazlab")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
VALIDATION_ERRORS = (ConfigError, CorpusError, GazetteerError, ModelFormatError, FileNotFoundError)


def _print_json(obj) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


def _out_dir(args, config: ExperimentConfig) -> Path:
    out = Path(args.out) if args.out else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_path(args, config: ExperimentConfig) -> Path:
    path = Path(args.model) if args.model else _out_dir(args, config) / "model.json"
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path} (run 'gazlab train' first)")
    return path


def _matcher_for(config: ExperimentConfig):
    return build_matcher(config.load_gazetteer()) if config.gazetteer is not None else None


def _read_mask(path: str | None) -> frozenset[str] | None:
    if path is None:
        return None
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read mask file {path}: {exc}") from None
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def cmd_stats(args, config: ExperimentConfig) -> None:
    ds = dataset_stats(config.load_dataset())
    gz = gazetteer_stats(config.load_gazetteer()) if config.gazetteer is not None else None
    if args.json:
        _print_json({"dataset": ds.to_dict(), "gazetteer": None if gz is None else gz.to_dict()})
        return
    if gz is not None:
        print(f"{'Gazetteer':<16}{'Num.':>10}{'Dim.':>6}  Pre-trained")
        print(f"{gz.name:<16}{gz.num:>10}{gz.dim:>6}  {'yes' if gz.pretrained else 'no'}")
        print()
    print(f"{'Dataset':<16}{'Total':>8}{'Train':>8}{'Dev':>8}{'Test':>8}")
    print(f"{ds.name:<16}{ds.total:>8}{ds.train:>8}{ds.dev:>8}{ds.test:>8}")


def cmd_train(args, config: ExperimentConfig) -> None:
    out = _out_dir(args, config)
    dataset = config.load_dataset()
    gazetteer = config.load_gazetteer() if config.features != BASELINE else None
    tc = config.train_config()
    model, _ = fit(dataset, gazetteer, tc)
    model.config["fingerprint"] = fingerprint(gazetteer, tc)
    save_model(model, out / "model.json")
    (out / "train_log.json").write_text(json.dumps(model.train_log, indent=2) + "\n", encoding="utf-8")
    summary = {
        "model": str(out / "model.json"),
        "mode": config.features,
        "parameters": count_parameters(model),
        "labels": len(model.labels),
        "features": len(model.feature_index),
        "fingerprint": model.config["fingerprint"],
    }
    if args.json:
        _print_json(summary)
    else:
        for key, value in summary.items():
            print(f"{key:<12} {value}")


def cmd_eval(args, config: ExperimentConfig) -> None:
    model = load_model(_model_path(args, config))
    dataset = config.load_dataset()
    mask = _read_mask(args.mask_file)
    report = evaluate(model, dataset.test, _matcher_for(config), mask)
    if args.json:
        _print_json(report.to_dict())
    else:
        print(report.format_table())


def cmd_analyze(args, config: ExperimentConfig) -> None:
    out = _out_dir(args, config)
    dataset = config.load_dataset()
    gazetteer = config.load_gazetteer()
    if args.which == "sets":
        sets = analysis.compute_sets(build_matcher(gazetteer), dataset)
        (out / "sets.json").write_text(
            json.dumps(sets.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        counts = sets.counts()
        if args.json:
            _print_json({"dataset": dataset.name, "gazetteer": gazetteer.name, **counts})
        else:
            print(f"{'Dataset':<16}{'Gazetteer':<16}{'I':>7}{'S':>7}{'E':>7}{'N':>7}")
            print(f"{dataset.name:<16}{gazetteer.name:<16}" + "".join(f"{counts[k]:>7}" for k in "ISEN"))
        return

    if args.which == "mask":
        model = load_model(_model_path(args, config))
        matcher = build_matcher(gazetteer)
        sets = analysis.compute_sets(matcher, dataset)
        report = analysis.causal_effects(
            model, dataset.test, matcher, sets, dataset=dataset.name,
            fingerprint=model.config.get("fingerprint", ""),
        )
        stem = "causal_effects"
    elif args.which == "size":
        fractions = [float(f) for f in args.fractions.split(",")] if args.fractions else [0.2, 0.4, 0.6, 0.8, 1.0]
        tc = config.train_config()
        report = analysis.size_ablation(dataset, gazetteer, fractions, config.seed, tc)
        stem = "size_ablation"
    else:
        report = analysis.embedding_ablation(dataset, gazetteer, config.train_config(GAZ_DENSE))
        stem = "embedding_ablation"
    analysis.emit_report(report, out / f"{stem}.json", "json")
    analysis.emit_report(report, out / f"{stem}.csv", "csv")
    if args.json:
        _print_json(report.to_dict())
    else:
        rows = report.rows()
        if rows:
            cols = list(rows[0])
            print("\t".join(cols))
            for row in rows:
                print("\t".join(f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.values()))


def cmd_match(args, config: ExperimentConfig) -> None:
    matcher = build_matcher(config.load_gazetteer())
    text = args.text if args.text is not None else sys.stdin.read()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        for m in matcher.match_all(line):
            print(f"{m.start}\t{m.end}\t{m.surface}")


def cmd_bench(args, config: ExperimentConfig) -> None:
    dataset = config.load_dataset()
    gazetteer = config.load_gazetteer() if config.gazetteer is not None else None
    modes = [BASELINE] + ([GAZ_DISCRETE, GAZ_DENSE] if gazetteer is not None else [])
    rows = []
    for mode in modes:
        holder = {}

        def pipeline(mode=mode):
            holder["model"], _ = fit(dataset, gazetteer, config.train_config(mode))

        seconds = measure_train_time(pipeline)
        rows.append({"mode": mode, "parameters": count_parameters(holder["model"]), "seconds": seconds})
    base = rows[0]
    for row in rows:
        row["param_ratio"] = row["parameters"] / base["parameters"]
        row["time_ratio"] = row["seconds"] / base["seconds"] if base["seconds"] else float("nan")
    if args.json:
        _print_json({"gazetteer": None if gazetteer is None else gazetteer.name, "rows": rows})
        return
    print(f"{'Model':<24}{'# Params':>10}{'x Params':>10}{'Time (s)':>10}{'x Time':>8}")
    for row in rows:
        print(
            f"{row['mode']:<24}{row['parameters']:>10}{row['param_ratio']:>10.2f}"
            f"{row['seconds']:>10.2f}{row['time_ratio']:>8.2f}"
        )


def cmd_synth(args) -> None:
    from .synthetic import SyntheticConfig, generate, write_corpus

    cfg = SyntheticConfig(seed=args.seed, n_train=args.train_size, n_test=args.test_size)
    path = write_corpus(generate(cfg), args.out, features=args.features, epochs=args.epochs)
    print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--out", help="output directory (default: config output_dir)")
        return p

    add("stats", "gazetteer and dataset statistics")
    add("train", "train a CRF and write model.json")
    p = add("eval", "evaluate a trained model on the test split")
    p.add_argument("--model", help="model file (default: OUT/model.json)")
    p.add_argument("--mask-file", help="lexemes to mask at test time, one per line")
    p = add("analyze", "lexeme sets, masking effects, size/embedding ablations")
    p.add_argument("which", choices=["sets", "mask", "size", "embeddings"])
    p.add_argument("--model", help="model file for 'mask' (default: OUT/model.json)")
    p.add_argument("--fractions", help="comma-separated gazetteer fractions for 'size'")
    p = add("match", "print gazetteer matches of a sentence as TSV")
    p.add_argument("--text", help="sentence to match (default: read stdin)")
    add("bench", "parameter counts and training time relative to the baseline")

    p = sub.add_parser("synth", help="write a synthetic corpus, gazetteer and config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-size", type=int, default=2000)
    p.add_argument("--test-size", type=int, default=400)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--features", choices=sorted(FEATURE_MODES), default=GAZ_DISCRETE)
    return parser


COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "match": cmd_match,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            cmd_synth(args)
            return EXIT_OK
        config = load_config(args.config)
        COMMANDS[args.command](args, config)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        logger.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
