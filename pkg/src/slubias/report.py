"""Audit report assembly, markdown rendering and CSV exports.

The report body carries no timestamps. Every number printed in the markdown
is taken from a string already stored in the JSON form of the report, so
the two never disagree.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .bias_tests import (
    chi2_contingency,
    full_adjustment_matrix,
    one_way_anova,
    univariate_audit,
)
from .data_model import VARIABLES, AuditConfig, DemographicSchema, canonical_variable, load_schema
from .ingestion import DatasetManifest
from .metrics import UtteranceScore, overall
from .glm import response_by_id


def _f4(x: float | None) -> str | None:
    return None if x is None else f"{x:.4f}"


@dataclass
class AuditReport:
    dataset_summary: dict
    metric_summary: dict
    univariate_results: list[dict] = field(default_factory=list)
    adjustment_matrix: list[dict] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config_echo": self.config_echo,
            "dataset_summary": self.dataset_summary,
            "metric_summary": self.metric_summary,
            "univariate_results": self.univariate_results,
            "adjustment_matrix": self.adjustment_matrix,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dataset_summary(manifest: DatasetManifest, schema: DemographicSchema) -> dict:
    splits = Counter(r.split for r in manifest.records)
    variables = {}
    for var in VARIABLES:
        if var not in schema:
            continue
        utts: Counter = Counter()
        speakers: dict[str, set] = defaultdict(set)
        missing = 0
        for r in manifest.records:
            level = r.tags.get(var)
            if level is None:
                missing += 1
                continue
            utts[level] += 1
            speakers[level].add(r.speaker_id)
        if not utts:
            continue
        variables[var] = {
            "levels": [
                {"level": lv, "utterances": utts[lv], "speakers": len(speakers[lv])}
                for lv in schema.levels(var)
                if lv in utts
            ],
            "missing": missing,
        }
    return {
        "n_records": len(manifest.records),
        "n_speakers": len({r.speaker_id for r in manifest.records}),
        "splits": {s: splits[s] for s in sorted(splits)},
        "variables": variables,
    }


def metric_summary(manifest: DatasetManifest, scores: Sequence[UtteranceScore]) -> dict:
    agg = overall(scores, manifest)
    index = manifest.by_id()
    per_intent: dict[str, list[int]] = defaultdict(list)
    for s in scores:
        per_intent[index[s.utterance_id].reference_parse.intent].append(s.em)
    intents = []
    for intent in sorted(per_intent):
        v = per_intent[intent]
        emr = sum(v) / len(v)
        intents.append({"intent": intent, "n": len(v), "emr": emr, "emr_display": _f4(emr)})
    return {
        "n": agg.n_utterances,
        "emr": agg.emr,
        "emr_display": _f4(agg.emr),
        "wer": agg.wer,
        "wer_display": _f4(agg.wer),
        "per_intent": intents,
    }


def observed_variables(manifest: DatasetManifest) -> list[str]:
    return [v for v in VARIABLES if len({r.tags.get(v) for r in manifest.records} - {None}) >= 2]


def univariate_battery(
    manifest: DatasetManifest,
    scores: Sequence[UtteranceScore],
    variables: Sequence[str],
    config: AuditConfig,
    schema: DemographicSchema,
    anova_unit: str = "utterance",
) -> list[dict]:
    """Logit, chi-squared and ANOVA records for each variable, in that order."""
    out = []
    for var in variables:
        out.append(univariate_audit(manifest, scores, var, config, schema).to_record())
        out.append(chi2_contingency(manifest, scores, var, config, schema).to_record())
        out.append(one_way_anova(manifest, scores, var, config, schema, unit=anova_unit).to_record())
    return out


def build_report(
    manifest: DatasetManifest,
    scores: Sequence[UtteranceScore],
    variables: Sequence[str] | None = None,
    config: AuditConfig | None = None,
    schema: DemographicSchema | None = None,
    univariate_results: list[dict] | None = None,
    adjustment_matrix: list[dict] | None = None,
    anova_unit: str = "utterance",
) -> AuditReport:
    """Assemble a report, running whichever test families were not supplied."""
    config = config or AuditConfig()
    schema = schema or load_schema()
    response_by_id(manifest, scores)
    if variables is None:
        variables = observed_variables(manifest)
    variables = [canonical_variable(v) for v in variables]
    if univariate_results is None:
        univariate_results = univariate_battery(manifest, scores, variables, config, schema, anova_unit)
    if adjustment_matrix is None:
        adjustment_matrix = []
        if len(variables) >= 2:
            adjustment_matrix = [
                v.to_record()
                for v in full_adjustment_matrix(manifest, scores, variables, config, schema)
            ]
    return AuditReport(
        dataset_summary=dataset_summary(manifest, schema),
        metric_summary=metric_summary(manifest, scores),
        univariate_results=list(univariate_results),
        adjustment_matrix=list(adjustment_matrix),
        config_echo={"config": config.to_dict(), "variables": list(variables), "anova_unit": anova_unit},
    )


# -- markdown ---------------------------------------------------------------


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines


def _effect_rows(effects: Sequence[dict]) -> list[list[str]]:
    rows = []
    for e in effects:
        d = e["display"]
        rows.append(
            [
                e["level"],
                d["or"],
                f"[{d['ci_low']}, {d['ci_high']}]",
                d["p"],
                "significant" if e["significant"] else "not significant",
            ]
        )
    return rows


def render_markdown(report: AuditReport) -> str:
    cfg = report.config_echo.get("config", {})
    alpha = cfg.get("alpha")
    out = [f"<!-- slubias {report.tool_version} -->", "# Demographic bias audit", ""]

    ds = report.dataset_summary
    out += ["## Dataset", ""]
    out += [f"Utterances: {ds['n_records']}; speakers: {ds['n_speakers']}.", ""]
    out += _table(["split", "utterances"], [[s, n] for s, n in ds["splits"].items()])
    for var, info in ds["variables"].items():
        out += ["", f"### {var}", ""]
        out += _table(
            ["level", "utterances", "speakers"],
            [[lv["level"], lv["utterances"], lv["speakers"]] for lv in info["levels"]],
        )
        if info["missing"]:
            out += ["", f"Untagged utterances: {info['missing']}."]

    ms = report.metric_summary
    out += ["", "## Metrics", ""]
    line = f"Exact Match Ratio: {ms['emr_display']} over {ms['n']} utterances."
    if ms["wer_display"] is not None:
        line += f" WER: {ms['wer_display']}."
    out += [line, ""]
    out += _table(
        ["intent", "utterances", "EMR"],
        [[i["intent"], i["n"], i["emr_display"]] for i in ms["per_intent"]],
    )

    out += ["", "## Univariate tests", ""]
    if not report.univariate_results:
        out += ["No univariate tests run.", ""]
    for rec in report.univariate_results:
        var = rec["variables"][0]
        kind = rec["test_type"]
        if kind == "univariate_logit":
            om = rec["omnibus"]["display"]
            ref = rec["effects"][0]["reference"] if rec["effects"] else ""
            out += [f"### {var} (n = {rec['n_obs']}, reference: {ref})", ""]
            out += [
                f"Logistic regression, all levels vs intercept-only: T = {om['statistic']}, "
                f"df = {rec['df']}, p = {om['p']} ({rec['decision']} at alpha = {alpha}).",
                "",
            ]
            out += _table(["level", "OR", "CI", "p", "decision"], _effect_rows(rec["effects"]))
            out += [""]
        elif kind == "chi2_contingency":
            d = rec["display"]
            out += [
                f"Chi-squared contingency ({var}): statistic = {d['statistic']}, "
                f"df = {rec['df']}, p = {d['p']} ({rec['decision']}).",
                "",
            ]
        elif kind == "one_way_anova":
            d = rec["display"]
            df1, df2 = rec["df"]
            out += [
                f"One-way ANOVA ({var}, {rec['unit']} level): F = {d['statistic']}, "
                f"df = ({df1}, {df2}), p = {d['p']} ({rec['decision']}).",
                "",
            ]

    out += ["## Adjustment matrix", ""]
    if not report.adjustment_matrix:
        out += ["No pairs analyzed."]
    else:
        rows = []
        for rec in report.adjustment_matrix:
            d = rec["llr"]["display"]
            rows.append(
                [rec["variables"][0], rec["variables"][1], rec["n_obs"], d["statistic"],
                 rec["df"], d["critical_value"], d["p"], rec["verdict"]]
            )
        out += _table(
            ["target", "adjusted by", "n", "T", "df", "q", "p", "verdict"], rows
        )
        out += ["", "### Verdicts", ""]
        for rec in report.adjustment_matrix:
            target, adjusting = rec["variables"]
            out += [f"- **{target} | {adjusting}**: {rec['explanation']}"]
            if rec["effects"] and rec.get("adjusted_effects"):
                out += ["", "  | level | OR (univariate) | OR (adjusted) | p (univariate) | p (adjusted) |",
                        "  |---|---|---|---|---|"]
                for u, m in zip(rec["effects"], rec["adjusted_effects"]):
                    out += [
                        f"  | {u['level']} | {u['display']['or']} | {m['display']['or']} | "
                        f"{u['display']['p']} | {m['display']['p']} |"
                    ]
                out += [""]
    return "\n".join(out).rstrip("\n") + "\n"


# -- CSV exports ------------------------------------------------------------

BOXPLOT_HEADER = ["level", "speaker_id", "speaker_emr", "speaker_wer", "n_utterances"]


def export_boxplot_data(
    scores: Sequence[UtteranceScore],
    manifest: DatasetManifest,
    variables: Sequence[str],
    schema: DemographicSchema | None = None,
) -> dict[str, str]:
    """One CSV per variable with a row per (level, speaker)."""
    schema = schema or load_schema()
    index = manifest.by_id()
    bundle = {}
    for var in variables:
        var = canonical_variable(var)
        cells: dict[tuple[str, str], list[UtteranceScore]] = defaultdict(list)
        for s in scores:
            r = index[s.utterance_id]
            level = r.tags.get(var)
            if level is not None:
                cells[(level, r.speaker_id)].append(s)
        order = {lv: i for i, lv in enumerate(schema.levels(var))}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BOXPLOT_HEADER)
        for level, speaker in sorted(cells, key=lambda k: (order.get(k[0], len(order)), k[0], k[1])):
            members = cells[(level, speaker)]
            emr = sum(s.em for s in members) / len(members)
            with_wer = [s for s in members if s.wer_errors is not None]
            wer = ""
            if with_wer:
                wer = repr(sum(s.wer_errors for s in with_wer) / sum(s.ref_word_count for s in with_wer))
            w.writerow([level, speaker, repr(emr), wer, len(members)])
        bundle[var] = buf.getvalue()
    return bundle

