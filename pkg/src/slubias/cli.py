"""Command-line entry point.

Exit codes: 0 success, 1 data/validation failure, 2 statistical failure
(separation, rank deficiency, degenerate groups), 3 usage error. Every
failure prints one line ``slubias: error: <kind>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bias_tests import adjustment_test, full_adjustment_matrix
from .data_model import AuditConfig, canonical_variable, load_schema, validate_record
from .errors import AuditError, DataError, SchemaViolationError, StatisticalError
from .ingestion import (
    generate_synthetic,
    join_hypotheses,
    load_hypotheses,
    load_manifest,
    load_synthetic_spec,
    save_manifest,
)
from .metrics import aggregate, aggregates_to_csv, dump_scores, load_scores, score_manifest
from .report import (
    build_report,
    export_boxplot_data,
    observed_variables,
    render_markdown,
    univariate_battery,
)

EXIT_OK, EXIT_DATA, EXIT_STAT, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    kind = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, *, needs_input=True):
    if needs_input:
        p.add_argument("--input", required=True, help="manifest (JSONL)")
        p.add_argument("--hypotheses", help="JSONL of utterance_id, hypothesis_transcript, hypothesis_parse")
        p.add_argument("--scores", help="score export to use instead of rescoring")
    p.add_argument("--schema", help="demographic schema JSON (default: bundled)")
    p.add_argument("--output", help="output path (default: stdout)")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--alpha", type=float)
    p.add_argument("--reference", action="append", default=[], metavar="VAR=LEVEL")
    p.add_argument("--or-shift-threshold", type=float)
    p.add_argument("--divergence-bound", type=float)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--loglik-tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["json", "markdown", "csv"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slubias", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"slubias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="schema-check a manifest")
    _common(p)

    p = sub.add_parser("score", help="per-utterance EM/WER export, or group aggregates with --format csv")
    _common(p)
    p.add_argument("--variable", action="append", default=[])

    p = sub.add_parser("audit", help="univariate battery (logit, chi-squared, ANOVA)")
    _common(p)
    p.add_argument("--variable", action="append", default=[])
    p.add_argument("--anova-unit", choices=["utterance", "speaker"], default="utterance")

    p = sub.add_parser("adjust", help="one LLR adjustment test")
    _common(p)
    p.add_argument("--target", required=True)
    p.add_argument("--adjust-by", required=True)

    p = sub.add_parser("matrix", help="adjustment tests for every ordered variable pair")
    _common(p)
    p.add_argument("--variable", action="append", default=[])

    p = sub.add_parser("simulate", help="generate a synthetic manifest")
    _common(p, needs_input=False)
    p.add_argument("--spec", required=True, help="synthetic spec JSON")

    p = sub.add_parser("report", help="assemble a report; reuses --results files when given")
    _common(p)
    p.add_argument("--variable", action="append", default=[])
    p.add_argument("--results", action="append", default=[], help="JSON output of audit/adjust/matrix")
    p.add_argument("--anova-unit", choices=["utterance", "speaker"], default="utterance")
    return parser


def effective_config(args, schema) -> AuditConfig:
    """Defaults, then --config file, then flags."""
    config = AuditConfig()
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        # a report's config_echo can be replayed directly
        doc = doc.get("config_echo", doc)
        doc = doc.get("config", doc)
        config = AuditConfig.from_dict(doc)
    changes = {}
    for flag, name in (
        ("alpha", "alpha"),
        ("or_shift_threshold", "or_shift_threshold"),
        ("divergence_bound", "divergence_bound"),
        ("max_iterations", "max_iterations"),
        ("loglik_tolerance", "loglik_tolerance"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    refs = {}
    for item in args.reference:
        if "=" not in item:
            raise UsageError(f"--reference expects VAR=LEVEL, got {item!r}")
        var, level = item.split("=", 1)
        var = canonical_variable(var)
        if var not in schema or level not in schema.levels(var):
            raise UsageError(f"{level!r} is not a level of {var}")
        refs[var] = level
    if refs:
        changes["reference_levels"] = refs
    return config.with_overrides(**changes)


def _load_inputs(args, schema):
    manifest = load_manifest(args.input, schema, require_response=not args.hypotheses)
    if args.hypotheses:
        manifest = join_hypotheses(manifest, load_hypotheses(args.hypotheses))
    if args.scores:
        scores = load_scores(args.scores)
    else:
        scores = score_manifest(manifest)
    return manifest, scores


def _emit(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _records_json(records, config: AuditConfig) -> str:
    cfg = config.to_dict()
    return json.dumps([dict(r, config=cfg) for r in records], indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _variables(args, manifest):
    if args.variable:
        return [canonical_variable(v) for v in args.variable]
    return observed_variables(manifest)


def cmd_validate(args, schema, config):
    manifest = load_manifest(args.input, schema, require_response=not args.hypotheses)
    if args.hypotheses:
        manifest = join_hypotheses(manifest, load_hypotheses(args.hypotheses))
        problems = [
            (None, v)
            for r in manifest.records
            for v in validate_record(r, schema)
        ]
        if problems:
            raise SchemaViolationError(problems)
    _emit(args, json.dumps({"status": "ok", "records": len(manifest.records)}) + "\n")


def cmd_score(args, schema, config):
    manifest, scores = _load_inputs(args, schema)
    if args.format == "csv":
        if not args.variable:
            raise UsageError("--format csv needs at least one --variable to group by")
        aggs, excluded = aggregate(scores, manifest, args.variable)
        if excluded:
            print(f"slubias: {excluded} record(s) lack a grouping tag and were excluded", file=sys.stderr)
        _emit(args, aggregates_to_csv(aggs))
    else:
        _emit(args, dump_scores(scores))


def _render_partial(args, manifest, scores, config, schema, variables, uni=None, matrix=None):
    report = build_report(
        manifest, scores, variables, config, schema,
        univariate_results=uni if uni is not None else [],
        adjustment_matrix=matrix if matrix is not None else [],
    )
    _emit(args, render_markdown(report))


def cmd_audit(args, schema, config):
    manifest, scores = _load_inputs(args, schema)
    variables = _variables(args, manifest)
    records = univariate_battery(manifest, scores, variables, config, schema, args.anova_unit)
    if args.format == "markdown":
        _render_partial(args, manifest, scores, config, schema, variables, uni=records)
    else:
        _emit(args, _records_json(records, config))


def cmd_adjust(args, schema, config):
    manifest, scores = _load_inputs(args, schema)
    verdict = adjustment_test(manifest, scores, args.target, args.adjust_by, config, schema)
    records = [verdict.to_record()]
    if args.format == "markdown":
        _render_partial(args, manifest, scores, config, schema, verdict.to_record()["variables"], matrix=records)
    else:
        _emit(args, _records_json(records, config))


def cmd_matrix(args, schema, config):
    manifest, scores = _load_inputs(args, schema)
    variables = _variables(args, manifest)
    records = [v.to_record() for v in full_adjustment_matrix(manifest, scores, variables, config, schema)]
    if args.format == "markdown":
        _render_partial(args, manifest, scores, config, schema, variables, matrix=records)
    else:
        _emit(args, _records_json(records, config))


def cmd_simulate(args, schema, config):
    spec = load_synthetic_spec(args.spec)
    if args.seed is not None:
        spec = type(spec)(
            spec.group_probabilities, spec.cell_counts, args.seed, spec.variables, spec.speakers_per_cell
        )
    manifest = generate_synthetic(spec)
    if not args.output:
        raise UsageError("simulate needs --output")
    save_manifest(manifest, args.output)


def cmd_report(args, schema, config):
    manifest, scores = _load_inputs(args, schema)
    fmt = args.format or "markdown"
    variables = _variables(args, manifest)
    if fmt == "csv":
        if not args.output:
            raise UsageError("--format csv writes a bundle and needs --output DIR")
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for var, text in export_boxplot_data(scores, manifest, variables, schema).items():
            (out / f"boxplot_{var}.csv").write_text(text, encoding="utf-8")
        return

    # families absent from the --results files are computed here
    uni, matrix = [], []
    for path in args.results:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for rec in doc:
            rec = {k: v for k, v in rec.items() if k != "config"}
            (matrix if rec["test_type"] == "llr_adjustment" else uni).append(rec)
    uni, matrix = uni or None, matrix or None
    report = build_report(
        manifest, scores, variables, config, schema, uni, matrix, anova_unit=args.anova_unit
    )
    _emit(args, report.to_json() if fmt == "json" else render_markdown(report))


COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "audit": cmd_audit,
    "adjust": cmd_adjust,
    "matrix": cmd_matrix,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _fail(code: int, kind: str, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"slubias: error: {kind}: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        schema = load_schema(args.schema)
        config = effective_config(args, schema)
        COMMANDS[args.command](args, schema, config)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except StatisticalError as exc:
        return _fail(EXIT_STAT, exc.kind, exc)
    except DataError as exc:
        return _fail(EXIT_DATA, exc.kind, exc)
    except AuditError as exc:
        return _fail(EXIT_DATA, exc.kind, exc)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_DATA, "io", exc)
    except (ValueError, KeyError) as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
