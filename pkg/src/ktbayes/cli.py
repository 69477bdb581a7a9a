"""Command-line front end: ingest, train, evaluate, predict, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import RunConfig, apply_overrides, load_config
from .bkt import load_skill_params, save_skill_params
from .estimators import KnowledgeTracingModel
from .evaluate import cross_validate, format_report, write_report_csv
from .features import DifficultyTable
from .ingest import clean, load_normalized, parse_interactions, write_normalized
from .tan import load_tan_model, save_tan_model
from .validation import ModelFormatError, SchemaError, check_version_header

log = logging.getLogger("ktbayes")

NORMALIZED_FILE = "normalized.csv"
INGEST_REPORT_FILE = "ingest_report.json"
BKT_PARAMS_FILE = "bkt_params.tsv"
DIFFICULTY_FILE = "difficulty.tsv"
TAN_MODEL_FILE = "tan_model.txt"
EVAL_CSV_FILE = "eval_report.csv"
EVAL_JSON_FILE = "eval_report.json"
PREDICTIONS_FILE = "predictions.jsonl"

DIFFICULTY_FILE_VERSION = 1


def save_difficulty_table(path, table: DifficultyTable, seed=None) -> None:
    lines = [f"#version={DIFFICULTY_FILE_VERSION}"]
    if seed is not None:
        lines.append(f"#seed={seed}")
    lines.append(f"#default={table.default_level}")
    for problem in sorted(table.levels):
        lines.append(f"{problem}\t{table.levels[problem]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_difficulty_table(path) -> DifficultyTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty difficulty file")
    check_version_header(lines[0], DIFFICULTY_FILE_VERSION, str(path))
    default = 5
    levels = {}
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("#default="):
            default = int(line.split("=", 1)[1])
        elif line.startswith("#"):
            continue
        else:
            problem, level = line.rsplit("\t", 1)
            levels[problem] = int(level)
    return DifficultyTable(levels=levels, default_level=default)


def _build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(
        cfg,
        input=getattr(args, "input", None),
        output_dir=getattr(args, "output_dir", None),
        seed=args.seed,
        folds=getattr(args, "folds", None),
        bins=args.bins,
        alpha=args.alpha,
        learn_structure=True if getattr(args, "learn_structure", False) else None,
        macro_auc=True if getattr(args, "macro_auc", False) else None,
    )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_input(cfg: RunConfig) -> Path:
    if not cfg.input:
        raise ValueError("no input file configured (set input= or pass --input)")
    path = Path(cfg.input)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def cmd_ingest(args) -> int:
    cfg = _build_config(args)
    source = _require_input(cfg)
    out = _out_dir(cfg)
    if source.resolve() == (out / NORMALIZED_FILE).resolve():
        raise ValueError("input and normalized output are the same file")
    result = parse_interactions(source, cfg.schema)
    if not result.rows and not result.issues:
        raise ValueError(f"{source}: no data rows found")
    for issue in result.issues:
        log.warning("line %d: %s", issue.line, issue.message)
    records, report = clean(result.rows)
    if not records:
        raise ValueError(f"{source}: no usable interactions after cleaning")
    write_normalized(out / NORMALIZED_FILE, records)
    summary = {
        "input": str(source),
        "parse_errors": len(result.issues),
        "parse_error_lines": [
            {"line": i.line, "message": i.message} for i in result.issues
        ],
        **report.as_dict(),
    }
    (out / INGEST_REPORT_FILE).write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    print(json.dumps(summary))
    return 0


def _model_from_files(out: Path, cfg: RunConfig) -> KnowledgeTracingModel:
    model = KnowledgeTracingModel(bins=cfg.bins, alpha=cfg.alpha, seed=cfg.seed)
    model.skill_params_, _ = load_skill_params(out / BKT_PARAMS_FILE)
    model.difficulty_ = load_difficulty_table(out / DIFFICULTY_FILE)
    model.tan_, _ = load_tan_model(out / TAN_MODEL_FILE)
    model.bins = model.tan_.bins
    model.alpha = model.tan_.alpha
    return model


def cmd_train(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(cfg)
    records = load_normalized(_require_input(cfg))
    if not records:
        raise ValueError("empty dataset: nothing to train on")
    model = KnowledgeTracingModel(
        bins=cfg.bins,
        alpha=cfg.alpha,
        restarts=cfg.bkt_restarts,
        max_iters=cfg.bkt_max_iters,
        tol=cfg.bkt_tol,
        seed=cfg.seed,
        guess_cap=cfg.bkt_guess_cap,
        slip_cap=cfg.bkt_slip_cap,
        min_skill_attempts=cfg.min_skill_attempts,
        learn_structure=cfg.learn_structure,
    )
    model.fit(records)
    save_skill_params(out / BKT_PARAMS_FILE, model.skill_params_, seed=cfg.seed)
    save_difficulty_table(out / DIFFICULTY_FILE, model.difficulty_, seed=cfg.seed)
    save_tan_model(out / TAN_MODEL_FILE, model.tan_, seed=cfg.seed)
    print(
        f"trained on {model.n_interactions_} interactions, "
        f"{len(model.skill_params_)} skills; models in {out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(cfg)
    records = load_normalized(_require_input(cfg))
    report = cross_validate(
        records,
        k=cfg.folds,
        seed=cfg.seed,
        bins=cfg.bins,
        alpha=cfg.alpha,
        fit_config=cfg.fit_config(),
        min_skill_attempts=cfg.min_skill_attempts,
        learn_structure=cfg.learn_structure,
        macro_auc=cfg.macro_auc,
    )
    write_report_csv(out / EVAL_CSV_FILE, report)
    (out / EVAL_JSON_FILE).write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(format_report(report))
    return 0


def cmd_predict(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(cfg)
    model = _model_from_files(out, cfg)
    history = load_normalized(Path(args.history))
    if not history:
        raise ValueError(f"{args.history}: no interactions to score")
    explained = model.explain(history)
    dest = out / PREDICTIONS_FILE
    with open(dest, "w", encoding="utf-8") as fh:
        for item in explained:
            fh.write(json.dumps(item) + "\n")
    for item in explained:
        print(json.dumps(item))
    log.info("wrote %d predictions to %s", len(explained), dest)
    return 0


def cmd_inspect(args) -> int:
    cfg = _build_config(args)
    model, meta = load_tan_model(Path(cfg.output_dir) / TAN_MODEL_FILE)
    index_to_skill = {i: s for s, i in model.skill_index.items()}
    print(f"rows={model.n_rows} alpha={model.alpha} bins={model.bins} "
          f"seed={meta.get('seed', '-')}")
    print(f"P(correct)={model.class_prior[1]:.4f}")
    for child, parent in model.structure.edges:
        head = f"P({child} | y)" if parent is None else f"P({child} | y, {parent})"
        print(f"\n{head}")
        tbl = model.cpts[child]
        for y in range(2):
            if parent is None:
                cells = " ".join(f"{v:.4f}" for v in tbl[y])
                print(f"  y={y}: {cells}")
            else:
                for pv in range(tbl.shape[1]):
                    pname = index_to_skill.get(pv, pv) if parent == "skill" else pv
                    cells = " ".join(f"{v:.4f}" for v in tbl[y, pv])
                    print(f"  y={y} {parent}={pname}: {cells}")
    return 0


def _add_common(parser: argparse.ArgumentParser, with_folds=False) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--input", help="input CSV (overrides config)")
    parser.add_argument("--output-dir", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="root random seed")
    parser.add_argument("--bins", type=int, help="mastery/profile bin count")
    parser.add_argument("--alpha", type=float, help="TAN smoothing strength")
    parser.add_argument(
        "--learn-structure",
        action="store_true",
        help="learn the TAN feature tree instead of the fixed chain",
    )
    if with_folds:
        parser.add_argument("--folds", type=int, help="number of CV folds")
        parser.add_argument(
            "--macro-auc",
            action="store_true",
            help="average per-student AUC instead of pooling",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ktbayes",
        description="knowledge tracing with per-skill BKT features and a "
        "tree-augmented naive Bayes predictor",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and clean a raw interaction CSV")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit models on a normalized CSV")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="k-fold cross-validation")
    _add_common(p, with_folds=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="score a student history with explanations")
    _add_common(p)
    p.add_argument("--history", required=True, help="normalized CSV of interactions")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="dump the fitted probability tables")
    _add_common(p)
    p.set_defaults(func=cmd_inspect)

    return parser


_ERROR_CLASSES = [
    (SchemaError, "schema"),
    (ModelFormatError, "model"),
    (FileNotFoundError, "io"),
    (ValueError, "data"),
]


def main(argv=None) -> int:
    level = os.environ.get("KTBAYES_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(cls for cls, _ in _ERROR_CLASSES) as exc:
        name = next(n for cls, n in _ERROR_CLASSES if isinstance(exc, cls))
        print(f"error[{name}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
