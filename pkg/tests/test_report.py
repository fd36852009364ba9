import json
import re

import pytest

from slubias.data_model import AuditConfig
from slubias.ingestion import generate_synthetic
from slubias.metrics import score_manifest
from slubias.report import (
    BOXPLOT_HEADER,
    build_report,
    export_boxplot_data,
    observed_variables,
    render_markdown,
)
from slubias.scenarios import confounding_spec


@pytest.fixture(scope="module")
def confounding_report():
    m = generate_synthetic(confounding_spec(per_dialect=300))
    return build_report(m, score_manifest(m))


def test_single_variable_report_has_no_pairs(two_by_two):
    m, s = two_by_two
    report = build_report(m, s)
    text = render_markdown(report)
    assert report.adjustment_matrix == []
    assert "No pairs analyzed." in text
    assert "| male | 3.50 | [1.95, 6.29] | 2.8e-5 | significant |" in text
    assert text.startswith("<!-- slubias ")


def test_render_is_deterministic(confounding_report):
    assert render_markdown(confounding_report) == render_markdown(confounding_report)
    assert confounding_report.to_json() == confounding_report.to_json()


def test_report_sections(confounding_report):
    text = render_markdown(confounding_report)
    for heading in ("## Dataset", "## Metrics", "## Univariate tests", "## Adjustment matrix", "### Verdicts"):
        assert heading in text
    assert len(confounding_report.adjustment_matrix) == 2
    assert confounding_report.config_echo["variables"] == ["gender", "dialectal_region"]


def test_every_number_in_markdown_comes_from_the_json(confounding_report):
    doc = confounding_report.to_json()
    text = render_markdown(confounding_report)
    body = text.split("\n", 1)[1]
    numbers = set(re.findall(r"(?<![\w.-])-?\d+(?:\.\d+)?(?:e-?\d+)?(?![\w.])", body))
    missing = [n for n in numbers if n not in doc]
    assert missing == []


def test_config_echo_round_trips(confounding_report):
    echo = json.loads(confounding_report.to_json())["config_echo"]
    assert AuditConfig.from_dict(echo["config"]) == AuditConfig()


def test_observed_variables(two_by_two):
    m, _ = two_by_two
    assert observed_variables(m) == ["gender"]


def test_boxplot_export(two_by_two):
    m, s = two_by_two
    bundle = export_boxplot_data(s, m, ["gender"])
    lines = bundle["gender"].splitlines()
    assert lines[0] == ",".join(BOXPLOT_HEADER)
    assert len(lines) == 1 + 8
    rows = [line.split(",") for line in lines[1:]]
    assert [r[0] for r in rows] == ["female"] * 4 + ["male"] * 4
    # speaker spk0 of female gets utterances 0, 4, ..., 96; the first 30 succeed
    female0 = rows[0]
    assert female0[1] == "female-spk0"
    assert float(female0[2]) == pytest.approx(8 / 25)
    assert female0[3] == ""
    assert female0[4] == "25"
    emr_female = sum(float(r[2]) * int(r[4]) for r in rows[:4]) / 100
    assert emr_female == pytest.approx(0.3)
