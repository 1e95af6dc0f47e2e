"""Command-line entry point for every workflow.

Exit codes: 0 success, 1 when the run completed but the report contains
per-item failures, 2 on fatal or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .anonymize import anonymize_database, rewrite_query
from .catalog import open_catalog, render_schema, sample_rows
from .config import ConfigError, ProjectConfig
from .genpipe import GenMode, GenerationJob, run_batch
from .judge import JudgeError, collapse_labels, judge_description
from .llm import AuthError, LLMError, require_credentials
from .metastore import (
    AnnotationRecord,
    AnnotationTarget,
    MetaStore,
    MissingDifficulty,
    Provenance,
    QualityLabel,
    TargetKind,
    load_bird_csv,
)
from .sqleval import ScenarioConfig, ScenarioKind, load_questions, run_eval
from .stats import (
    GroupBy,
    LabelSeries,
    QualityItem,
    StatsError,
    agreement_report,
    mean_quality,
)

OK, ITEM_FAILURES, FATAL = 0, 1, 2


def _emit(args, payload: dict, human: str) -> None:
    if args.output == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _store(config: ProjectConfig) -> MetaStore:
    return MetaStore(config.store_path)


def _catalogs(config: ProjectConfig):
    return {
        db_id: open_catalog(path, db_id=db_id)
        for db_id, path in config.database_paths().items()
    }


def _descriptions_for_scenario(store: MetaStore, scenario: ScenarioConfig):
    if scenario.kind is ScenarioKind.NO_DESCRIPTIONS:
        return None
    if scenario.kind is ScenarioKind.ORIGINAL_BIRD:
        source = store.descriptors(provenance=Provenance.ORIGINAL_BIRD)
    elif scenario.kind is ScenarioKind.GENERATED:
        source = store.descriptors(
            provenance=Provenance.GENERATED, model=scenario.model
        )
    else:
        source = store.descriptors(provenance=Provenance.GOLD)
    return {d.ref.key(): d.description for d in source if d.description}


# -- subcommands ----------------------------------------------------------


def cmd_introspect(args, config: ProjectConfig) -> int:
    paths = config.database_paths()
    if args.db not in paths:
        print(f"unknown database {args.db!r}; have {sorted(paths)}", file=sys.stderr)
        return FATAL
    catalog = open_catalog(paths[args.db], db_id=args.db)
    payload = {
        "db_id": catalog.db_id,
        "tables": [
            {
                "name": t.name,
                "columns": [
                    {"name": c.name, "type": c.declared_type, "pk": c.is_primary_key}
                    for c in t.columns
                ],
                "sample": sample_rows(catalog, t.name, config.defaults["rows_n"]),
            }
            for t in catalog.tables
        ],
    }
    human_lines = [render_schema(catalog), ""]
    for table in payload["tables"]:
        human_lines.append(f"-- {table['name']}: {len(table['columns'])} columns")
        for row in table["sample"]:
            human_lines.append("   " + " | ".join(row))
    _emit(args, payload, "\n".join(human_lines))
    return OK


def _load_original_descriptors(config: ProjectConfig, store: MetaStore, db_id: str):
    """Import BIRD CSVs for a database from metadata_dir/<db_id>/*.csv."""
    imported = 0
    db_dir = config.metadata_dir / db_id
    if db_dir.is_dir():
        for csv_path in sorted(db_dir.glob("*.csv")):
            for descriptor in load_bird_csv(csv_path, db_id=db_id):
                store.upsert_descriptor(descriptor)
                imported += 1
    return imported


def cmd_generate(args, config: ProjectConfig) -> int:
    store = _store(config)
    paths = config.database_paths()
    if args.db not in paths:
        print(f"unknown database {args.db!r}", file=sys.stderr)
        return FATAL
    catalog = open_catalog(paths[args.db], db_id=args.db)
    try:
        model = config.model_spec(args.model)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return FATAL
    try:
        require_credentials(model)
    except AuthError as exc:
        print(f"auth error: {exc}", file=sys.stderr)
        return FATAL
    mode = GenMode.IMPROVE if args.improve else GenMode.GENERATE
    originals = {}
    if mode is GenMode.IMPROVE:
        _load_original_descriptors(config, store, args.db)
        originals = {
            d.ref.key(): d
            for d in store.descriptors(
                provenance=Provenance.ORIGINAL_BIRD, db_id=args.db
            )
        }
    job = GenerationJob(
        catalog=catalog,
        model=model,
        mode=mode,
        rows_n=config.defaults["rows_n"],
        unique_limit=config.defaults["unique_limit"],
        originals=originals,
    )
    try:
        descriptors, report = run_batch(job, store=store)
    except AuthError as exc:
        print(f"auth error: {exc}", file=sys.stderr)
        return FATAL
    if args.report:
        Path(args.report).write_text(report.to_json_lines() + "\n", encoding="utf-8")
    payload = {
        "summary": report.summary(),
        "outcomes": [o.to_dict() for o in report.outcomes],
    }
    human = (
        f"{report.mode} with {report.model}: {report.ok} ok,"
        f" {report.no_description} no-description, {report.failed} failed"
        f" over {len(report.outcomes)} columns"
    )
    _emit(args, payload, human)
    return ITEM_FAILURES if report.failed else OK


def cmd_judge(args, config: ProjectConfig) -> int:
    store = _store(config)
    try:
        judge_model = config.model_spec(args.model)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return FATAL
    try:
        require_credentials(judge_model)
    except AuthError as exc:
        print(f"auth error: {exc}", file=sys.stderr)
        return FATAL
    golds = {
        d.ref.key(): d for d in store.descriptors(provenance=Provenance.GOLD)
    }
    candidates = store.descriptors(
        provenance=Provenance.GENERATED, model=args.target_model
    )
    verdict_lines = []
    failures = 0
    for descriptor in candidates:
        gold = golds.get(descriptor.ref.key())
        if gold is None or descriptor.no_description:
            continue
        try:
            verdict = judge_description(
                judge_model, descriptor.description, gold.description
            )
        except (JudgeError, LLMError) as exc:
            failures += 1
            verdict_lines.append(
                {
                    "column": list(descriptor.ref.key()),
                    "model_under_test": descriptor.model,
                    "error": str(exc),
                }
            )
            continue
        verdict_lines.append(
            {
                "column": list(descriptor.ref.key()),
                "model_under_test": descriptor.model,
                "correctness": verdict.correctness,
                "reasoning": verdict.reasoning,
            }
        )
        store.record_annotation(
            AnnotationRecord(
                ref=descriptor.ref,
                annotator_id=f"judge:{judge_model.name}",
                target=AnnotationTarget(
                    TargetKind.QUALITY_OF_GENERATION, descriptor.model
                ),
                label=verdict.quality,
            )
        )
    if args.verdicts:
        Path(args.verdicts).write_text(
            "\n".join(json.dumps(v, sort_keys=True) for v in verdict_lines) + "\n",
            encoding="utf-8",
        )
    payload = {"judged": len(verdict_lines), "failures": failures,
               "verdicts": verdict_lines}
    _emit(args, payload, f"judged {len(verdict_lines)} descriptions, {failures} failures")
    return ITEM_FAILURES if failures else OK


def _series_for(store: MetaStore, target: AnnotationTarget, annotator: str,
                collapse: bool) -> LabelSeries:
    items = []
    for rec in store.annotations(target=target, annotator_id=annotator):
        label = rec.label
        if collapse and isinstance(label, QualityLabel):
            try:
                label = collapse_labels(label)
            except JudgeError:
                pass  # No Description / Can't Tell kept as-is
        items.append((rec.ref, label))
    return LabelSeries(items)


def cmd_stats(args, config: ProjectConfig) -> int:
    store = _store(config)
    target = AnnotationTarget.from_string(args.target) if args.target else None
    if args.metric in ("kappa", "agreement"):
        if not (target and args.annotators and len(args.annotators) == 2):
            print("kappa/agreement need --target and exactly two --annotators",
                  file=sys.stderr)
            return FATAL
        a = _series_for(store, target, args.annotators[0], args.collapse)
        b = _series_for(store, target, args.annotators[1], args.collapse)
        try:
            report = agreement_report(a, b)
        except StatsError as exc:
            print(f"cannot compute: {exc}", file=sys.stderr)
            return FATAL
        payload = report.to_dict()
        if args.metric == "kappa":
            value = "degenerate" if report.degenerate else f"{report.kappa:.4f}"
            human = f"kappa={value} over n={report.n} (dropped {report.dropped})"
        else:
            human = f"agreement={report.agreement_pct:.4f} over n={report.n}"
        _emit(args, payload, human)
        return OK
    # quality
    items = []
    for rec in store.annotations():
        if rec.target.kind is not TargetKind.QUALITY_OF_GENERATION:
            continue
        label = rec.label
        if args.collapse:
            try:
                label = collapse_labels(label)
            except JudgeError:
                pass
        items.append(QualityItem(ref=rec.ref, model=rec.target.model, label=label))
    difficulties = store.difficulties()
    group = GroupBy.BOTH if difficulties else GroupBy.MODEL
    cells = mean_quality(items, group, difficulties or None)
    if args.csv:
        import csv as _csv

        with Path(args.csv).open("w", encoding="utf-8", newline="") as f:
            writer = _csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["difficulty", "model", "mean", "n", "no_description", "cant_tell"]
            )
            for c in cells:
                writer.writerow(
                    [
                        c.difficulty.label if c.difficulty else "",
                        c.model,
                        repr(c.mean) if c.n else "",
                        c.n,
                        c.no_description,
                        c.cant_tell,
                    ]
                )
    payload = {"cells": [c.to_dict() for c in cells]}
    lines = ["difficulty  model  mean  n  (no-description / can't-tell)"]
    for c in cells:
        difficulty = c.difficulty.label if c.difficulty else "-"
        mean = f"{c.mean:.2f}" if c.n else "-"
        lines.append(
            f"{difficulty:<10} {c.model:<12} {mean:>5} {c.n:>3}"
            f"  ({c.no_description} / {c.cant_tell})"
        )
    _emit(args, payload, "\n".join(lines))
    return OK


def cmd_eval_sql(args, config: ProjectConfig) -> int:
    store = _store(config)
    try:
        scenario = ScenarioConfig.parse(args.scenario)
    except ValueError:
        print(f"unknown scenario {args.scenario!r}", file=sys.stderr)
        return FATAL
    try:
        model = config.model_spec(args.model)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return FATAL
    try:
        require_credentials(model)
    except AuthError as exc:
        print(f"auth error: {exc}", file=sys.stderr)
        return FATAL
    questions = load_questions(args.questions)
    catalogs = _catalogs(config)
    run = run_eval(
        questions,
        scenario,
        model,
        catalogs,
        descriptions=_descriptions_for_scenario(store, scenario),
        difficulties=store.difficulties() or None,
        timeout=config.defaults["timeout"],
    )
    if args.report:
        Path(args.report).write_text(run.to_json() + "\n", encoding="utf-8")
    if args.summary_csv:
        run.write_summary_csv(args.summary_csv)
    payload = run.to_dict()
    human = (
        f"scenario={run.scenario} n={run.n} accuracy={run.accuracy:.3f}"
        + (f" gold-exec-errors={len(run.gold_errors)}" if run.gold_errors else "")
    )
    _emit(args, payload, human)
    return ITEM_FAILURES if run.gold_errors else OK


def cmd_anonymize(args, config: ProjectConfig) -> int:
    paths = config.database_paths()
    if args.db not in paths:
        print(f"unknown database {args.db!r}", file=sys.stderr)
        return FATAL
    catalog = open_catalog(paths[args.db], db_id=args.db)
    out_dir = Path(args.out_dir) if args.out_dir else None
    anon_catalog, rename_map, out_path = anonymize_database(catalog, out_dir)
    payload = {
        "db_id": args.db,
        "database": str(out_path),
        "manifest": rename_map.to_manifest(),
    }
    failures = 0
    if args.rewrite_queries:
        questions = load_questions(args.rewrite_queries)
        rewritten = []
        for q in questions:
            if q.db_id != args.db:
                continue
            try:
                rewritten.append(
                    {
                        "question_id": q.question_id,
                        "db_id": q.db_id,
                        "question": q.question,
                        "SQL": rewrite_query(q.gold_sql, rename_map, catalog),
                    }
                )
            except Exception as exc:
                failures += 1
                rewritten.append(
                    {"question_id": q.question_id, "db_id": q.db_id, "error": str(exc)}
                )
        rewritten_path = out_path.parent / f"{args.db}.anon.questions.json"
        rewritten_path.write_text(
            json.dumps(rewritten, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        payload["rewritten_queries"] = str(rewritten_path)
        payload["rewrite_failures"] = failures
    _emit(args, payload, f"anonymized {args.db} -> {out_path}")
    return ITEM_FAILURES if failures else OK


def cmd_serve(args, config: ProjectConfig) -> int:
    import uvicorn

    from .server import create_app

    store = _store(config)
    catalogs = _catalogs(config)
    app = create_app(
        catalogs,
        store,
        ui_dir=config.ui_dir,
        rows_n=config.defaults["rows_n"],
        unique_limit=config.defaults["unique_limit"],
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return OK


def cmd_export(args, config: ProjectConfig) -> int:
    store = _store(config)
    out = Path(args.out)
    try:
        rows = store.export_dataset(out)
    except MissingDifficulty as exc:
        print("cannot export, difficulty missing for:", file=sys.stderr)
        for ref in exc.refs:
            print(f"  {ref.db_id}.{ref.table}.{ref.column}", file=sys.stderr)
        return FATAL
    payload = {"path": str(out), "rows": len(rows)}
    _emit(args, payload, f"wrote {len(rows)} rows to {out}")
    return OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semlayer",
        description="Column-description semantic layer toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="path to semlayer.json")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", choices=["text", "json"], default="text")
        return p

    p = common(sub.add_parser("introspect", help="print schema and sampling summary"))
    p.add_argument("db")
    p.set_defaults(func=cmd_introspect)

    p = common(sub.add_parser("generate", help="generate or improve column descriptions"))
    p.add_argument("--db", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--improve", action="store_true",
                   help="improve existing imported descriptions")
    p.add_argument("--report", help="write JSON-lines run report here")
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("judge", help="LLM-judge generated descriptions against gold"))
    p.add_argument("--model", required=True, help="judge model")
    p.add_argument("--against", choices=["gold"], default="gold")
    p.add_argument("--target-model", required=True,
                   help="whose generations to judge")
    p.add_argument("--verdicts", help="write JSON-lines verdicts here")
    p.set_defaults(func=cmd_judge)

    p = common(sub.add_parser("stats", help="agreement and quality statistics"))
    p.add_argument("metric", choices=["kappa", "agreement", "quality"])
    p.add_argument("--target", help="annotation target, e.g. quality_of_generation:gpt")
    p.add_argument("--annotators", nargs=2, metavar=("A", "B"))
    p.add_argument("--collapse", action="store_true",
                   help="merge Perfect and Almost Perfect before computing")
    p.add_argument("--csv", help="also write the quality table as CSV")
    p.set_defaults(func=cmd_stats)

    p = common(sub.add_parser("eval-sql", help="run a text-to-SQL scenario"))
    p.add_argument("--scenario", required=True,
                   help="none | bird | generated:<model> | gold")
    p.add_argument("--questions", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", help="write full JSON report here")
    p.add_argument("--summary-csv", help="write summary CSV here")
    p.set_defaults(func=cmd_eval_sql)

    p = common(sub.add_parser("anonymize", help="produce uninformative-name database"))
    p.add_argument("--db", required=True)
    p.add_argument("--rewrite-queries", help="questions JSON to rewrite")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_anonymize)

    p = common(sub.add_parser("serve", help="start the review server"))
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = common(sub.add_parser("export", help="export artifacts"))
    p.add_argument("what", choices=["dataset"])
    p.add_argument("--out", default="dataset.csv")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help/--version
        return exc.code if isinstance(exc.code, int) else 0
    try:
        config = ProjectConfig.load(args.config)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return FATAL
    try:
        return args.func(args, config)
    except (ConfigError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return FATAL


if __name__ == "__main__":
    sys.exit(main())
