"""Manifest I/O, hypothesis joining and seeded synthetic cohorts.

Manifests are line-delimited JSON, one utterance per line::

    {"utterance_id": "u1", "speaker_id": "s1", "split": "test",
     "reference_transcript": "play abbey road",
     "reference_parse": {"intent": "PlayMusic",
                         "slots": [{"name": "album_name", "value": "abbey road"}]},
     "hypothesis_transcript": "play abbey road",            # optional
     "hypothesis_parse": {...},                             # optional
     "tags": {"gender": "female", "age_range": "17-28"},
     "em_override": 1}                                      # optional

Synthetic cohorts are drawn with SplitMix64 so that a given seed produces the
same records in any language. The generator keeps a 64-bit state ``s`` and
for each output does (all arithmetic modulo 2**64)::

    s = s + 0x9E3779B97F4A7C15
    z = s
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

A uniform draw on [0, 1) is ``(out >> 11) * 2**-53``; a Bernoulli(p) draw
succeeds iff that uniform is ``< p``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .data_model import (
    DemographicSchema,
    DemographicTags,
    Parse,
    Slot,
    UtteranceRecord,
    Violation,
    canonical_variable,
    load_schema,
    validate_record,
)
from .errors import (
    DataError,
    DuplicateIdError,
    ManifestParseError,
    SchemaViolationError,
    UnknownIdError,
)

SCHEMA_VERSION = "1"

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        if not 0 <= seed <= _MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms; identical to ``n`` calls of :meth:`random`."""
        # The k-th state is seed + k*gamma, so the whole block vectorises.
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GAMMA) & _MASK
        return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[UtteranceRecord, ...]
    schema_version: str = SCHEMA_VERSION
    source_descriptor: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_id(self) -> dict[str, UtteranceRecord]:
        return {r.utterance_id: r for r in self.records}


# -- (de)serialisation ------------------------------------------------------


def parse_to_dict(parse: Parse) -> dict:
    return {
        "intent": parse.intent,
        "slots": [{"name": s.name, "value": s.value} for s in parse.slots],
    }


def parse_from_dict(doc, where: str, violations: list[Violation]) -> Parse | None:
    if not isinstance(doc, dict):
        violations.append(Violation(where, "must be an object with intent and slots"))
        return None
    intent = doc.get("intent")
    if not isinstance(intent, str):
        violations.append(Violation(f"{where}.intent", "required string"))
        return None
    raw_slots = doc.get("slots", [])
    if not isinstance(raw_slots, list):
        violations.append(Violation(f"{where}.slots", "must be a list"))
        return None
    slots = []
    for i, s in enumerate(raw_slots):
        if not (isinstance(s, dict) and isinstance(s.get("name"), str) and isinstance(s.get("value"), str)):
            violations.append(Violation(f"{where}.slots[{i}]", "needs string name and value"))
            return None
        slots.append(Slot(s["name"], s["value"]))
    return Parse(intent, tuple(slots))


def record_to_dict(record: UtteranceRecord) -> dict:
    d = {
        "utterance_id": record.utterance_id,
        "speaker_id": record.speaker_id,
        "split": record.split,
        "reference_transcript": record.reference_transcript,
        "reference_parse": parse_to_dict(record.reference_parse),
        "tags": {
            k: v
            for k, v in (
                ("gender", record.tags.gender),
                ("age_range", record.tags.age_range),
                ("dialectal_region", record.tags.dialectal_region),
                ("ethnicity", record.tags.ethnicity),
            )
            if v is not None
        },
    }
    if record.hypothesis_transcript is not None:
        d["hypothesis_transcript"] = record.hypothesis_transcript
    if record.hypothesis_parse is not None:
        d["hypothesis_parse"] = parse_to_dict(record.hypothesis_parse)
    if record.em_override is not None:
        d["em_override"] = record.em_override
    return d


def record_from_dict(doc) -> tuple[UtteranceRecord | None, list[Violation]]:
    """Build a record from one decoded JSON line.

    Returns ``(None, violations)`` when a required field is missing or has
    the wrong type; otherwise the record and an empty list (semantic checks
    are left to :func:`validate_record`).
    """
    violations: list[Violation] = []
    if not isinstance(doc, dict):
        return None, [Violation("record", "must be a JSON object")]

    for name in ("utterance_id", "speaker_id", "split", "reference_transcript"):
        if not isinstance(doc.get(name), str):
            violations.append(Violation(name, "required string"))
    if "reference_parse" not in doc:
        violations.append(Violation("reference_parse", "required field missing"))
        ref = None
    else:
        ref = parse_from_dict(doc["reference_parse"], "reference_parse", violations)

    hyp = None
    if doc.get("hypothesis_parse") is not None:
        hyp = parse_from_dict(doc["hypothesis_parse"], "hypothesis_parse", violations)
    hyp_text = doc.get("hypothesis_transcript")
    if hyp_text is not None and not isinstance(hyp_text, str):
        violations.append(Violation("hypothesis_transcript", "must be a string"))

    tags_doc = doc.get("tags", {})
    tags = None
    if not isinstance(tags_doc, dict):
        violations.append(Violation("tags", "must be an object"))
    else:
        unknown = set(tags_doc) - {"gender", "age_range", "dialectal_region", "ethnicity"}
        for k in sorted(unknown):
            violations.append(Violation(f"tags.{k}", "unknown demographic variable"))
        bad = [k for k, v in tags_doc.items() if v is not None and not isinstance(v, str)]
        for k in bad:
            violations.append(Violation(f"tags.{k}", "must be a string"))
        if not unknown and not bad:
            tags = DemographicTags(**tags_doc)

    em = doc.get("em_override")
    if em is not None and (isinstance(em, bool) or em not in (0, 1)):
        violations.append(Violation("em_override", "must be 0 or 1"))

    if violations:
        return None, violations
    return (
        UtteranceRecord(
            utterance_id=doc["utterance_id"],
            speaker_id=doc["speaker_id"],
            split=doc["split"],
            reference_transcript=doc["reference_transcript"],
            reference_parse=ref,
            tags=tags,
            hypothesis_transcript=hyp_text,
            hypothesis_parse=hyp,
            em_override=None if em is None else int(em),
        ),
        [],
    )


def load_manifest(
    path: str | Path,
    schema: DemographicSchema | None = None,
    require_response: bool = True,
) -> DatasetManifest:
    """Read and validate a JSONL manifest.

    Raises ``ManifestParseError`` on malformed JSON, ``DuplicateIdError`` on a
    repeated id and ``SchemaViolationError`` listing every violation found.
    """
    if schema is None:
        schema = load_schema()
    path = Path(path)
    records = []
    seen: dict[str, int] = {}
    violations: list[tuple[int, Violation]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(lineno, exc.msg) from exc
            record, problems = record_from_dict(doc)
            if record is None:
                violations.extend((lineno, v) for v in problems)
                continue
            if record.utterance_id in seen:
                raise DuplicateIdError(record.utterance_id, lineno)
            seen[record.utterance_id] = lineno
            violations.extend(
                (lineno, v) for v in validate_record(record, schema, require_response)
            )
            records.append(record)
    if violations:
        raise SchemaViolationError(violations)
    return DatasetManifest(tuple(records), SCHEMA_VERSION, str(path))


def dump_manifest(manifest: DatasetManifest) -> str:
    return "".join(
        json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True) + "\n"
        for r in manifest.records
    )


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(dump_manifest(manifest), encoding="utf-8")


def load_hypotheses(path: str | Path) -> dict[str, tuple[str | None, Parse]]:
    """Read a JSONL file of ``{utterance_id, hypothesis_transcript, hypothesis_parse}``."""
    out = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(lineno, exc.msg) from exc
            problems: list[Violation] = []
            uid = doc.get("utterance_id") if isinstance(doc, dict) else None
            if not isinstance(uid, str):
                raise SchemaViolationError([(lineno, Violation("utterance_id", "required string"))])
            parse = parse_from_dict(doc.get("hypothesis_parse"), "hypothesis_parse", problems)
            if problems:
                raise SchemaViolationError([(lineno, v) for v in problems])
            if uid in out:
                raise DuplicateIdError(uid, lineno)
            out[uid] = (doc.get("hypothesis_transcript"), parse)
    return out


def join_hypotheses(
    manifest: DatasetManifest, hypotheses: Mapping[str, tuple[str | None, Parse]]
) -> DatasetManifest:
    known = {r.utterance_id for r in manifest.records}
    orphans = set(hypotheses) - known
    if orphans:
        raise UnknownIdError(orphans)
    records = []
    for r in manifest.records:
        if r.utterance_id in hypotheses:
            text, parse = hypotheses[r.utterance_id]
            r = replace(r, hypothesis_transcript=text, hypothesis_parse=parse)
        records.append(r)
    return replace(manifest, records=tuple(records))


# -- synthetic cohorts ------------------------------------------------------

DEFAULT_CELL_VARIABLES = ("gender", "age_range", "dialectal_region")


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-cell success probabilities and utterance counts.

    Cells are tuples of levels, one per entry of ``variables``. Cells are
    emitted in lexicographic order of their ``"a|b|c"`` keys, so the draw
    order does not depend on mapping order.
    """

    group_probabilities: Mapping[tuple[str, ...], float]
    cell_counts: Mapping[tuple[str, ...], int]
    seed: int
    variables: tuple[str, ...] = DEFAULT_CELL_VARIABLES
    speakers_per_cell: int = 5

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(canonical_variable(v) for v in self.variables))
        for cell, p in self.group_probabilities.items():
            if len(cell) != len(self.variables):
                raise ValueError(f"cell {cell} does not match variables {self.variables}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability for {cell} outside [0, 1]: {p}")
        for cell, n in self.cell_counts.items():
            if n < 0 or int(n) != n:
                raise ValueError(f"count for {cell} must be a non-negative integer")
            if cell not in self.group_probabilities:
                raise ValueError(f"cell {cell} has a count but no probability")
        if not 0 <= self.seed <= _MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.speakers_per_cell < 1:
            raise ValueError("speakers_per_cell must be positive")

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "group_probabilities": {"|".join(c): p for c, p in self.group_probabilities.items()},
            "cell_counts": {"|".join(c): n for c, n in self.cell_counts.items()},
            "seed": self.seed,
            "speakers_per_cell": self.speakers_per_cell,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SyntheticSpec":
        variables = tuple(doc.get("variables", DEFAULT_CELL_VARIABLES))

        def split(key):
            return tuple(key.split("|"))

        return cls(
            group_probabilities={split(k): float(v) for k, v in doc["group_probabilities"].items()},
            cell_counts={split(k): int(v) for k, v in doc["cell_counts"].items()},
            seed=int(doc["seed"]),
            variables=variables,
            speakers_per_cell=int(doc.get("speakers_per_cell", 5)),
        )


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    try:
        return SyntheticSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"invalid synthetic spec {path}: {exc}") from exc


def generate_synthetic(spec: SyntheticSpec) -> DatasetManifest:
    rng = SplitMix64(spec.seed)
    ref_parse = Parse("PlayMusic", (Slot("artist_name", "the beatles"),))
    cells = list(iter_cells(spec))
    records = []
    for ci, cell in enumerate(cells):
        n = spec.cell_counts[cell]
        draws = rng.uniforms(n) < spec.group_probabilities[cell]
        tags = DemographicTags(**dict(zip(spec.variables, cell)))
        for i in range(n):
            records.append(
                UtteranceRecord(
                    utterance_id=f"c{ci:03d}-u{i:06d}",
                    speaker_id=f"c{ci:03d}-s{i % spec.speakers_per_cell:03d}",
                    split="test",
                    reference_transcript="play the beatles",
                    reference_parse=ref_parse,
                    tags=tags,
                    em_override=int(draws[i]),
                )
            )
    return DatasetManifest(
        tuple(records), SCHEMA_VERSION, f"synthetic seed={spec.seed}"
    )


def iter_cells(spec: SyntheticSpec) -> Iterable[tuple[str, ...]]:
    return sorted(spec.cell_counts, key=lambda c: "|".join(c))
