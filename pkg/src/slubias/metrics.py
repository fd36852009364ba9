"""Per-utterance Exact Match / WER scoring and group aggregation."""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .data_model import Parse, canonical_variable
from .errors import DataError, EmptyReferenceError, MissingResponseError, UnknownIdError
from .ingestion import DatasetManifest

_ASCII_WS = re.compile(r"[ \t\n\r\x0b\x0c]+")


def tokenize(text: str) -> list[str]:
    """Case-fold, then split on ASCII whitespace."""
    return [t for t in _ASCII_WS.split(text.casefold()) if t]


def exact_match(reference: Parse, hypothesis: Parse) -> int:
    if reference.intent.casefold() != hypothesis.intent.casefold():
        return 0
    ref = Counter(s.key() for s in reference.slots)
    hyp = Counter(s.key() for s in hypothesis.slots)
    return int(ref == hyp)


def word_error_counts(reference: Sequence[str], hypothesis: Sequence[str]) -> tuple[int, int, int]:
    """Minimum edit-distance alignment as (substitutions, deletions, insertions).

    Among equal-cost alignments the backtrace prefers a diagonal move
    (match or substitution), then deletion, then insertion.
    """
    n, m = len(reference), len(hypothesis)
    if n == 0:
        raise EmptyReferenceError("reference must contain at least one token")
    # d[i][j]: cost of aligning reference[:i] with hypothesis[:j]
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = reference[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ri != hypothesis[j - 1])
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)

    s = de = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1]):
            s += reference[i - 1] != hypothesis[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            de += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return s, de, ins


@dataclass(frozen=True)
class UtteranceScore:
    utterance_id: str
    em: int
    wer_errors: int | None = None
    ref_word_count: int | None = None

    def to_dict(self) -> dict:
        d = {"utterance_id": self.utterance_id, "em": self.em}
        if self.wer_errors is not None:
            d["wer_errors"] = self.wer_errors
            d["ref_word_count"] = self.ref_word_count
        return d


def score_manifest(manifest: DatasetManifest) -> list[UtteranceScore]:
    """Score every record, in manifest order.

    ``em_override`` wins over a recomputed match. WER fields are filled only
    when a hypothesis transcript is present.
    """
    missing = [
        r.utterance_id
        for r in manifest.records
        if r.hypothesis_parse is None and r.em_override is None
    ]
    if missing:
        raise MissingResponseError(missing)
    out = []
    for r in manifest.records:
        if r.em_override is not None:
            em = r.em_override
        else:
            em = exact_match(r.reference_parse, r.hypothesis_parse)
        errors = words = None
        if r.hypothesis_transcript is not None:
            ref_tokens = tokenize(r.reference_transcript)
            errors = sum(word_error_counts(ref_tokens, tokenize(r.hypothesis_transcript)))
            words = len(ref_tokens)
        out.append(UtteranceScore(r.utterance_id, em, errors, words))
    return out


def dump_scores(scores: Iterable[UtteranceScore]) -> str:
    return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in scores)


def load_scores(path: str | Path) -> list[UtteranceScore]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                em = d["em"]
                if em not in (0, 1) or isinstance(em, bool):
                    raise ValueError("em must be 0 or 1")
                out.append(
                    UtteranceScore(
                        d["utterance_id"], int(em), d.get("wer_errors"), d.get("ref_word_count")
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}: line {lineno}: bad score line ({exc})") from exc
    return out


@dataclass(frozen=True)
class GroupAggregate:
    group_key: tuple[str, ...]
    n_utterances: int
    n_speakers: int
    emr: float
    wer: float | None
    per_speaker_emr: dict[str, float]

    @property
    def label(self) -> str:
        return "|".join(self.group_key)


def _check_ids(scores, manifest) -> dict:
    index = manifest.by_id()
    unknown = {s.utterance_id for s in scores} - set(index)
    if unknown:
        raise UnknownIdError(unknown)
    return index


def aggregate(
    scores: Sequence[UtteranceScore],
    manifest: DatasetManifest,
    group_by: str | Sequence[str],
) -> tuple[list[GroupAggregate], int]:
    """EMR/WER per observed level (or cell, for several variables).

    Returns the aggregates in first-seen order and the number of scores
    excluded for lacking one of the grouping tags.
    """
    variables = [group_by] if isinstance(group_by, str) else list(group_by)
    variables = [canonical_variable(v) for v in variables]
    index = _check_ids(scores, manifest)

    groups: dict[tuple, list] = defaultdict(list)
    excluded = 0
    for s in scores:
        tags = index[s.utterance_id].tags
        key = tuple(tags.get(v) for v in variables)
        if None in key:
            excluded += 1
            continue
        groups[key].append(s)

    out = []
    for key, members in groups.items():
        out.append(_summarise(key, members, index))
    return out, excluded


def _summarise(key, members, index) -> GroupAggregate:
    per_speaker: dict[str, list[int]] = defaultdict(list)
    for s in members:
        per_speaker[index[s.utterance_id].speaker_id].append(s.em)
    with_wer = [s for s in members if s.wer_errors is not None]
    wer = None
    if with_wer:
        wer = sum(s.wer_errors for s in with_wer) / sum(s.ref_word_count for s in with_wer)
    return GroupAggregate(
        group_key=key,
        n_utterances=len(members),
        n_speakers=len(per_speaker),
        emr=sum(s.em for s in members) / len(members),
        wer=wer,
        per_speaker_emr={spk: sum(v) / len(v) for spk, v in sorted(per_speaker.items())},
    )


def overall(scores: Sequence[UtteranceScore], manifest: DatasetManifest) -> GroupAggregate:
    index = _check_ids(scores, manifest)
    return _summarise(("all",), list(scores), index)


def aggregates_to_csv(aggregates: Iterable[GroupAggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group_key", "n_utterances", "n_speakers", "emr", "wer"])
    for a in aggregates:
        w.writerow([a.label, a.n_utterances, a.n_speakers, repr(a.emr), "" if a.wer is None else repr(a.wer)])
    return buf.getvalue()
