"""Command-line entry point: ``treecoder {search,baseline,eval,levels,cache}``."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from treecoder import __version__
from treecoder.baseline import MODES, run_baseline
from treecoder.config import ConfigError, RunConfig, fields_help, load_config, validate
from treecoder.corpus import CorpusError, load_documents, load_gold_labels, read_predictions
from treecoder.evaluation import MetricsError, evaluate, level_analysis
from treecoder.llm import (
    Backend,
    CachedBackend,
    HttpBackend,
    OracleBackend,
    OracleConfig,
    ReplayBackend,
    cache_clear,
    cache_stats,
)
from treecoder.ontology import OntologyError, load_ontology
from treecoder.prompting import TemplateError, load_template
from treecoder.reports import level_csv, level_table, metrics_csv, metrics_table, to_json
from treecoder.search import CorpusRun, GenerationParams, load_traces, run_corpus, write_run

log = logging.getLogger("treecoder")

EXIT_OK = 0
EXIT_DOC_FAILURES = 1
EXIT_INVALID = 2


def build_backend(cfg: RunConfig, ontology, gold) -> Backend:
    b = cfg.backend
    if b.kind == "http":
        backend: Backend = HttpBackend(
            b.endpoint,
            credential_env_var=b.credential_env_var,
            backend_id=f"http:{b.model_id}",
            min_temperature=b.min_temperature,
            max_attempts=b.max_attempts,
            max_in_flight=b.max_in_flight,
            rng=random.Random(cfg.rng_seed),
        )
    elif b.kind == "replay":
        path = Path(b.script_path)
        backend = ReplayBackend.from_cache_dir(path) if path.is_dir() else ReplayBackend.from_script(path)
    else:
        backend = OracleBackend(
            OracleConfig(
                gold=gold,
                false_negative_rate=b.false_negative_rate,
                false_positive_rate=b.false_positive_rate,
                rng_seed=cfg.rng_seed,
            ),
            ontology,
        )
    if cfg.cache_dir:
        backend = CachedBackend(backend, cfg.cache_dir)
    return backend


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _execute(cfg: RunConfig, command: str, mode: str | None = None) -> int:
    validate(cfg)
    ontology = load_ontology(cfg.ontology_path)
    notes = load_documents(cfg.documents_dir)
    gold, report = (None, None)
    if cfg.gold_labels_path:
        gold, report = load_gold_labels(cfg.gold_labels_path, ontology)
    backend = build_backend(cfg, ontology, gold)
    params = GenerationParams(cfg.backend.model_id, cfg.backend.temperature, cfg.backend.max_output_tokens)

    if command == "search":
        template = load_template(cfg.template_path)
        run: CorpusRun = run_corpus(
            notes, ontology, backend, template, cfg.budget, cfg.workers, params=params, frontier=cfg.frontier
        )
    else:
        template = load_template(cfg.coder_template_path)
        run = run_baseline(notes, ontology, backend, template, mode, cfg.workers, params=params)

    out = Path(cfg.output_dir)
    write_run(run, out)
    if report is not None:
        (out / "filter_report.json").write_text(report.to_json(), encoding="utf-8")
    all_results = {**run.results, **run.failures}
    manifest = {
        "treecoder_version": __version__,
        "command": command,
        "mode": mode,
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256(),
        "template_id": template.template_id,
        "template_family": template.family,
        "backend_id": backend.backend_id,
        "rng_seed": cfg.rng_seed,
        "n_documents": len(notes),
        "n_failed": len(run.failures),
        "prompts_used_total": run.prompts_used(),
        "prompts_used": {doc: r.trace.prompts_used for doc, r in sorted(all_results.items())},
        "truncated": sorted(doc for doc, r in all_results.items() if r.truncated),
        "parse_warnings": sum(len(r.trace.parse_warnings) for r in all_results.values()),
    }
    if isinstance(backend, CachedBackend):
        manifest["cache"] = {"hits": backend.hits, "misses": backend.misses}
    _write_json(out / "manifest.json", manifest)

    print(
        f"{command}: {len(run.results)}/{len(notes)} documents, "
        f"{manifest['prompts_used_total']} prompts, {len(run.failures)} failed -> {out}"
    )
    for doc, r in run.failures.items():
        print(f"  FAILED {doc}: {r.error}", file=sys.stderr)
    return EXIT_DOC_FAILURES if run.failures else EXIT_OK


def cmd_search(args) -> int:
    cfg = _load_with_overrides(args)
    return _execute(cfg, "search")


def cmd_baseline(args) -> int:
    cfg = _load_with_overrides(args)
    return _execute(cfg, "baseline", args.mode)


def cmd_eval(args) -> int:
    ontology = load_ontology(args.ontology)
    gold, _ = load_gold_labels(args.gold, ontology)
    pred = read_predictions(args.predictions)
    report = evaluate(gold, pred, args.policy)
    table = metrics_table(report, args.label)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(to_json(report), encoding="utf-8")
        (out / "metrics.txt").write_text(table, encoding="utf-8")
        if args.csv:
            (out / "metrics.csv").write_text(metrics_csv(report), encoding="utf-8")
    return EXIT_OK


def cmd_levels(args) -> int:
    ontology = load_ontology(args.ontology)
    gold, _ = load_gold_labels(args.gold, ontology)
    traces = load_traces(args.traces)
    report = level_analysis(gold, traces, ontology, args.policy)
    table = level_table(report)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "levels.json").write_text(to_json(report), encoding="utf-8")
        (out / "levels.txt").write_text(table, encoding="utf-8")
        if args.csv:
            (out / "levels.csv").write_text(level_csv(report), encoding="utf-8")
    return EXIT_OK


def cmd_cache(args) -> int:
    if args.cache_command == "stats":
        print(json.dumps(cache_stats(args.cache_dir), indent=2))
    else:
        print(f"removed {cache_clear(args.cache_dir)} entries from {args.cache_dir}")
    return EXIT_OK


def _load_with_overrides(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.workers is not None:
        cfg.workers = args.workers
    if getattr(args, "budget", None) is not None:
        cfg.budget = args.budget
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecoder",
        description="Assign ontology codes to case notes by LLM-guided tree search, and evaluate the results.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config file (JSON) fields:\n" + fields_help(),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--output-dir", help="override output_dir")
        p.add_argument("--workers", type=int, help="override workers")

    p = sub.add_parser(
        "search", help="run the tree search over a corpus",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config file (JSON) fields:\n" + fields_help(),
    )
    run_args(p)
    p.add_argument("--budget", type=int, help="override budget")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser(
        "baseline", help="run the single-prompt clinical-coder baseline",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config file (JSON) fields:\n" + fields_help(),
    )
    run_args(p)
    p.add_argument("--mode", choices=MODES, default="match-codes")
    p.set_defaults(func=cmd_baseline)

    def eval_args(p):
        p.add_argument("--ontology", required=True)
        p.add_argument("--gold", required=True, help="gold labels TSV")
        p.add_argument("--policy", choices=("gold", "union"), default="gold", help="macro class set")
        p.add_argument("--out", help="directory for JSON/text (and --csv) reports")
        p.add_argument("--csv", action="store_true")

    p = sub.add_parser("eval", help="micro/macro metrics for a predictions file")
    eval_args(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--label", default="Model", help="row label in the table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("levels", help="cumulative per-level metrics from search traces")
    eval_args(p)
    p.add_argument("--traces", required=True, help="traces directory written by search")
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("cache", help="inspect or clear a response cache")
    p.add_argument("cache_command", choices=("stats", "clear"))
    p.add_argument("--cache-dir", required=True)
    p.set_defaults(func=cmd_cache)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, OntologyError, CorpusError, TemplateError, MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
