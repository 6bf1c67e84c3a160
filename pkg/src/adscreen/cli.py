"""Command-line entry point: ``adscreen <subcommand>``.

Subcommands: parse, build, train, gridsearch, evaluate, predict, report,
run.  Exit codes: 0 success, 2 usage/configuration errors, 3 data errors,
70 internal invariant violations.  Failures print one machine-parsable
line to stderr: ``error: <ErrorClass>: <message>``.  All output files are
written atomically, so a failed command leaves no partial artifacts.
Flags beat config-file values; ``ADSCREEN_SEED`` is the last-resort seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

from . import __version__
from ._io import atomic_write_text, read_jsonl, write_json, write_jsonl
from .chat_parser import (DEFAULT_ID_LAYOUT, IdFieldLayout, parse_directory,
                          parse_file, transcript_to_record)
from .datasets import VARIANTS, build_variant, dataset_from_records, dataset_to_records
from .errors import AdscreenError, ConfigError
from .experiment import (comparison_report, cross_validate, folds_for,
                         load_run_config, load_transcripts_jsonl, run_experiment,
                         select_hyperparameters, validate_config)
from .linear import load_embeddings
from .pipelines import (MODEL_KINDS, make_pipeline, pipeline_from_dict,
                        pipeline_to_dict)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 70


def default_seed(value) -> int:
    if value is not None:
        return int(value)
    return int(os.environ.get("ADSCREEN_SEED", "0"))


def parse_id_layout(spec: str) -> IdFieldLayout:
    if spec == "default":
        return DEFAULT_ID_LAYOUT
    slots = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ConfigError(f"bad --id-layout entry {part!r}; use field=slot")
        name, value = part.split("=", 1)
        if name not in ("age", "sex", "group", "mmse", "speaker"):
            raise ConfigError(f"unknown --id-layout field {name!r}")
        slots[name + "_slot"] = int(value)
    return IdFieldLayout(**slots)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adscreen",
        description="Text-only dementia screening pipeline over CHAT transcripts.")
    parser.add_argument("--version", action="version", version=f"adscreen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse .cha files to a transcripts JSONL")
    p.add_argument("input", help=".cha file or directory of .cha files")
    p.add_argument("--out", required=True, help="output transcripts JSONL path")
    p.add_argument("--id-layout", default="default",
                   help="default, or comma list like age=3,sex=4,group=5,mmse=8")
    p.add_argument("--lenient-headers", action="store_true",
                   help="warn instead of skipping files without @Begin/@End")

    p = sub.add_parser("build", help="build a dataset variant from transcripts")
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--in", dest="input", required=True, help="transcripts JSONL")
    p.add_argument("--out", required=True,
                   help="output file (.jsonl) or directory (named <variant>.jsonl)")

    p = sub.add_parser("train", help="train one pipeline with fixed parameters")
    _add_model_args(p)
    p.add_argument("--out", required=True, help="output model JSON")

    p = sub.add_parser("gridsearch", help="k-fold grid search over a parameter grid")
    _add_model_args(p)
    p.add_argument("--grid", default="table1",
                   help="table1, optimal, none, or a JSON file of axes")
    p.add_argument("--k", type=int, default=5, help="selection folds (default 5)")
    p.add_argument("--out", required=True, help="output results JSON")

    p = sub.add_parser("evaluate", help="k-fold cross-validated metrics for fixed parameters")
    _add_model_args(p)
    p.add_argument("--k", type=int, default=10, help="reporting folds (default 10)")
    p.add_argument("--out", required=True, help="output metrics JSON")

    p = sub.add_parser("predict", help="apply a trained model to a dataset")
    p.add_argument("--model", required=True, help="model JSON from `adscreen train`")
    p.add_argument("--dataset", required=True, help="dataset JSONL from `adscreen build`")
    p.add_argument("--embeddings", help="embedding CSV (embed_* models)")
    p.add_argument("--out", required=True, help="output predictions JSONL")

    p = sub.add_parser("report", help="comparison report against published CV scores")
    p.add_argument("--compare", required=True, choices=["table2"],
                   help="reference table to compare against")
    p.add_argument("--transcripts", required=True, help="transcripts JSONL")
    p.add_argument("--embeddings", action="append", default=[],
                   metavar="NAME=PATH",
                   help="embedding CSV per published model, e.g. distilbert=emb.csv")
    p.add_argument("--k", type=int, default=10, help="reporting folds (default 10)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the report here as well as stdout")

    p = sub.add_parser("run", help="run a full experiment from a TOML/JSON config")
    p.add_argument("config", help="run configuration file")

    return parser


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--dataset", required=True, help="dataset JSONL from `adscreen build`")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--task", default="classify", choices=["classify", "regress"])
    p.add_argument("--params", help="JSON file of fixed model/vectorizer parameters")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one parameter (repeatable); JSON-parsed values")
    p.add_argument("--embeddings", help="embedding CSV (embed_* models)")
    p.add_argument("--seed", type=int, default=None)


def _collect_params(args) -> dict:
    params = {}
    if getattr(args, "params", None):
        with open(args.params, "r", encoding="utf-8") as fh:
            params.update(json.load(fh))
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ConfigError(f"bad --set entry {item!r}; use KEY=VALUE")
        key, value = item.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _load_dataset_rows(path: str, model_kind: str, task: str,
                       require_targets: bool = True):
    variant, rows = dataset_from_records(list(read_jsonl(path)))
    if task == "regress" and require_targets:
        rows = [r for r in rows if r.mmse is not None]
    if not rows:
        raise ConfigError(f"dataset {path} has no usable rows for task {task}")
    return variant, rows


def _load_embeddings_for(args, rows):
    if not getattr(args, "embeddings", None):
        return None
    return load_embeddings(args.embeddings,
                           expected_ids=[r.transcript_id for r in rows])


# --- subcommand implementations -------------------------------------------------

def cmd_parse(args) -> int:
    layout = parse_id_layout(args.id_layout)
    if os.path.isdir(args.input):
        transcripts = parse_directory(args.input, layout=layout,
                                      lenient_headers=args.lenient_headers)
    else:
        transcripts = [parse_file(args.input, layout=layout,
                                  lenient_headers=args.lenient_headers)]
    if not transcripts:
        raise AdscreenError(f"no parseable transcripts under {args.input}")
    count = write_jsonl(args.out, [transcript_to_record(t) for t in transcripts])
    print(f"wrote {count} transcripts to {args.out}")
    return EXIT_OK


def cmd_build(args) -> int:
    transcripts = load_transcripts_jsonl(args.input)
    rows = build_variant(transcripts, args.variant)
    if not rows:
        raise AdscreenError("no rows survived dataset construction")
    out = args.out
    if not out.endswith(".jsonl"):
        out = os.path.join(out, f"{args.variant}.jsonl")
    count = write_jsonl(out, dataset_to_records(args.variant, rows))
    print(f"wrote {count - 1} {args.variant} rows to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    seed = default_seed(args.seed)
    params = _collect_params(args)
    _, rows = _load_dataset_rows(args.dataset, args.model, args.task)
    embeddings = _load_embeddings_for(args, rows)
    pipeline = make_pipeline(args.model, args.task, params, seed=seed,
                             embeddings=embeddings)
    pipeline.fit(rows)
    write_json(args.out, pipeline_to_dict(pipeline))
    print(f"trained {args.model} on {len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    seed = default_seed(args.seed)
    params = _collect_params(args)
    variant, rows = _load_dataset_rows(args.dataset, args.model, args.task)
    embeddings = _load_embeddings_for(args, rows)
    if args.grid in ("table1", "optimal", "none"):
        grid_section = {"preset": args.grid, "axes": None}
    else:
        with open(args.grid, "r", encoding="utf-8") as fh:
            grid_section = {"preset": "none", "axes": json.load(fh)}
    config = {
        "variant": variant,
        "seed": seed,
        "model": {"kind": args.model, "task": args.task, "params": params},
        "grid": grid_section,
        "folds": {"select_k": args.k, "report_k": args.k},
    }
    folds = folds_for(rows, variant, args.k, seed)
    result = select_hyperparameters(rows, config, folds, embeddings)
    if result is None:
        raise ConfigError("grid preset 'none' leaves nothing to search")
    payload = {
        "n_evaluated": result.n_evaluated,
        "best_score": result.best_score,
        "best_config": result.best_config,
        "ranked": result.ranked,
    }
    write_json(args.out, payload)
    print(f"searched {result.n_evaluated} configs; best score {result.best_score:.4f}"
          f" -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    seed = default_seed(args.seed)
    params = _collect_params(args)
    variant, rows = _load_dataset_rows(args.dataset, args.model, args.task)
    embeddings = _load_embeddings_for(args, rows)
    _validate_combo(args.model, args.task, variant)
    folds = folds_for(rows, variant, args.k, seed)
    report = cross_validate(rows, args.model, args.task, params, folds, seed, embeddings)
    write_json(args.out, report.to_dict())
    rmse_txt = "-" if report.rmse is None else f"{report.rmse:.3f}"
    print(f"{variant}/{args.model}: acc={report.accuracy:.3f} f1={report.f1:.3f} "
          f"rmse={rmse_txt} ({args.k}-fold mean) -> {args.out}")
    return EXIT_OK


def _validate_combo(kind: str, task: str, variant: str):
    # reuse the run-config validator for model/task/variant compatibility
    validate_config({
        "variant": variant,
        "data": {"dataset": "-", "embeddings": "-"},
        "model": {"kind": kind, "task": task},
        "output": {"dir": "-"},
        "grid": {"preset": "none"},
    })


def cmd_predict(args) -> int:
    with open(args.model, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    variant, rows = _load_dataset_rows(args.dataset, payload.get("model_kind"),
                                       payload.get("task", "classify"),
                                       require_targets=False)
    embeddings = _load_embeddings_for(args, rows)
    pipeline = pipeline_from_dict(payload, embeddings=embeddings)
    records = []
    if payload["family"] == "crf_stack":
        label_map = pipeline.predict_labels(rows)
        records = [{"id": tid, "prediction": label_map[tid]} for tid in sorted(label_map)]
    elif payload["task"] == "classify":
        for row, label in zip(rows, pipeline.predict_labels(rows)):
            records.append({"id": row.transcript_id, "prediction": label})
    else:
        for row, value in zip(rows, pipeline.predict_values(rows)):
            records.append({"id": row.transcript_id, "prediction": float(value)})
    count = write_jsonl(args.out, records)
    print(f"wrote {count} predictions to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    seed = default_seed(args.seed)
    embeddings_paths = {}
    for item in args.embeddings:
        if "=" not in item:
            raise ConfigError(f"bad --embeddings entry {item!r}; use NAME=PATH")
        name, path = item.split("=", 1)
        embeddings_paths[name] = path
    text = comparison_report(args.transcripts, embeddings_paths,
                             report_k=args.k, seed=seed)
    sys.stdout.write(text)
    if args.out:
        atomic_write_text(args.out, text)
    return EXIT_OK


def cmd_run(args) -> int:
    raw = load_run_config(args.config)
    if "seed" not in raw and "ADSCREEN_SEED" in os.environ:
        raw["seed"] = int(os.environ["ADSCREEN_SEED"])
    result = run_experiment(raw, base_dir=os.path.dirname(os.path.abspath(args.config)))
    report = result.report
    rmse_txt = "-" if report.rmse is None else f"{report.rmse:.3f}"
    print(f"run complete: acc={report.accuracy:.3f} f1={report.f1:.3f} rmse={rmse_txt}")
    print(f"artifacts in {result.output_dir}")
    return EXIT_OK


_COMMANDS = {
    "parse": cmd_parse,
    "build": cmd_build,
    "train": cmd_train,
    "gridsearch": cmd_gridsearch,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "report": cmd_report,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AdscreenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - invariant violation
        print(f"error: Internal:{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
