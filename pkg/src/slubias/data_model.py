"""Domain types shared across the package.

Records are frozen dataclasses. Structural problems found while reading
raw input are reported by :func:`validate_record` as a list of
:class:`Violation` values rather than raised, so a loader can collect every
problem in a file before failing.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

VARIABLES = ("gender", "age_range", "dialectal_region", "ethnicity")

# Short names accepted on the command line and in config files.
ALIASES = {"age": "age_range", "dialect": "dialectal_region", "region": "dialectal_region"}

SPLITS = ("train", "dev", "test")

_WS = re.compile(r"\s")


def canonical_variable(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in VARIABLES:
        raise ValueError(f"unknown demographic variable {name!r}")
    return name


@dataclass(frozen=True)
class VariableSpec:
    name: str
    levels: tuple[str, ...]
    reference: str

    def __post_init__(self):
        if len(self.levels) < 2:
            raise ValueError(f"{self.name}: a variable needs at least two levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"{self.name}: duplicate levels")
        if self.reference not in self.levels:
            raise ValueError(f"{self.name}: reference {self.reference!r} not in levels")


@dataclass(frozen=True)
class DemographicSchema:
    """Closed level sets for each demographic variable."""

    variables: Mapping[str, VariableSpec]

    def levels(self, variable: str) -> tuple[str, ...]:
        return self.variables[canonical_variable(variable)].levels

    def reference(self, variable: str) -> str:
        return self.variables[canonical_variable(variable)].reference

    def __contains__(self, variable):
        return variable in self.variables

    def to_dict(self) -> dict:
        return {
            name: {"levels": list(v.levels), "reference": v.reference}
            for name, v in self.variables.items()
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DemographicSchema":
        variables = {}
        for raw_name, spec in doc.items():
            name = canonical_variable(raw_name)
            variables[name] = VariableSpec(name, tuple(spec["levels"]), spec["reference"])
        return cls(variables)


def load_schema(path: str | Path | None = None) -> DemographicSchema:
    """Load a schema file, or the bundled default when ``path`` is None."""
    if path is None:
        text = (resources.files("slubias") / "data" / "demographic_schema.json").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return DemographicSchema.from_dict(json.loads(text))


@dataclass(frozen=True)
class Slot:
    name: str
    value: str

    def key(self) -> tuple[str, str]:
        return (self.name.casefold(), self.value.casefold())


@dataclass(frozen=True)
class Parse:
    """Intent plus an unordered multiset of slots.

    Slots are stored sorted so that equality and hashing ignore slot order.
    """

    intent: str
    slots: tuple[Slot, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "slots", tuple(sorted(self.slots, key=lambda s: (s.name, s.value)))
        )


@dataclass(frozen=True)
class DemographicTags:
    gender: str | None = None
    age_range: str | None = None
    dialectal_region: str | None = None
    ethnicity: str | None = None

    def get(self, variable: str) -> str | None:
        return getattr(self, canonical_variable(variable))


@dataclass(frozen=True)
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    split: str
    reference_transcript: str
    reference_parse: Parse
    tags: DemographicTags = DemographicTags()
    hypothesis_transcript: str | None = None
    hypothesis_parse: Parse | None = None
    em_override: int | None = None


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self):
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class AuditConfig:
    alpha: float = 0.05
    reference_levels: Mapping[str, str] = field(
        default_factory=lambda: {
            "gender": "female",
            "age_range": "17-28",
            "dialectal_region": "Asian",
            "ethnicity": "African American",
        }
    )
    max_iterations: int = 100
    loglik_tolerance: float = 1e-8
    divergence_bound: float = 15.0
    or_shift_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        for name in ("loglik_tolerance", "divergence_bound", "or_shift_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        refs = {canonical_variable(k): v for k, v in self.reference_levels.items()}
        object.__setattr__(self, "reference_levels", refs)

    def reference_for(self, variable: str, schema: DemographicSchema | None = None) -> str:
        variable = canonical_variable(variable)
        if variable in self.reference_levels:
            return self.reference_levels[variable]
        if schema is None:
            raise KeyError(variable)
        return schema.reference(variable)

    def with_overrides(self, **changes) -> "AuditConfig":
        if "reference_levels" in changes:
            merged = dict(self.reference_levels)
            merged.update(
                {canonical_variable(k): v for k, v in changes["reference_levels"].items()}
            )
            changes["reference_levels"] = merged
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reference_levels"] = dict(sorted(self.reference_levels.items()))
        return d

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AuditConfig":
        return cls().with_overrides(**dict(doc))


def validate_record(
    record: UtteranceRecord,
    schema: DemographicSchema | None = None,
    require_response: bool = True,
) -> list[Violation]:
    """Return every invariant the record breaks; empty when it is well-formed.

    ``require_response=False`` skips the response-source rule, for reference
    manifests that will have hypotheses joined onto them later.
    """
    if schema is None:
        schema = _default_schema()
    out: list[Violation] = []

    if not record.utterance_id:
        out.append(Violation("utterance_id", "must be non-empty"))
    if not record.speaker_id:
        out.append(Violation("speaker_id", "must be non-empty"))
    if record.split not in SPLITS:
        out.append(Violation("split", f"{record.split!r} not in {list(SPLITS)}"))
    if not record.reference_transcript.split():
        out.append(Violation("reference_transcript", "must contain at least one word"))

    out.extend(_parse_violations("reference_parse", record.reference_parse))
    if record.hypothesis_parse is not None:
        out.extend(_parse_violations("hypothesis_parse", record.hypothesis_parse))

    for var in VARIABLES:
        level = getattr(record.tags, var)
        if level is None:
            continue
        if var not in schema:
            out.append(Violation(f"tags.{var}", "variable not declared in schema"))
        elif level not in schema.levels(var):
            out.append(Violation(f"tags.{var}", f"{level!r} not in level set"))

    if record.em_override is not None and (
        isinstance(record.em_override, bool) or record.em_override not in (0, 1)
    ):
        out.append(Violation("em_override", "must be 0 or 1"))
    if require_response and record.hypothesis_parse is None and record.em_override is None:
        out.append(
            Violation("response", "missing response source: need hypothesis_parse or em_override")
        )
    return out


def _parse_violations(prefix: str, parse: Parse) -> list[Violation]:
    out = []
    if not parse.intent:
        out.append(Violation(f"{prefix}.intent", "must be non-empty"))
    for i, slot in enumerate(parse.slots):
        if not slot.name or _WS.search(slot.name):
            out.append(Violation(f"{prefix}.slots[{i}].name", "must be non-empty without whitespace"))
        if not slot.value:
            out.append(Violation(f"{prefix}.slots[{i}].value", "must be non-empty"))
    return out


_DEFAULT_SCHEMA: DemographicSchema | None = None


def _default_schema() -> DemographicSchema:
    global _DEFAULT_SCHEMA
    if _DEFAULT_SCHEMA is None:
        _DEFAULT_SCHEMA = load_schema()
    return _DEFAULT_SCHEMA
