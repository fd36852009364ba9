"""Exception hierarchy.

Two families matter to callers: ``DataError`` (bad or inconsistent input
data) and ``StatisticalError`` (a model or test cannot be computed on
otherwise valid data). The CLI maps them to distinct exit codes.
"""


class AuditError(Exception):
    """Base class. ``kind`` is a short machine-readable tag."""

    kind = "error"


class DataError(AuditError):
    kind = "data"


class ManifestParseError(DataError):
    kind = "parse"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateIdError(DataError):
    kind = "duplicate-id"

    def __init__(self, utterance_id: str, line: int | None = None):
        self.utterance_id = utterance_id
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate utterance_id {utterance_id!r}{where}")


class SchemaViolationError(DataError):
    kind = "schema-violation"

    def __init__(self, violations):
        # violations: list of (line or None, Violation)
        self.violations = list(violations)
        parts = []
        for line, v in self.violations:
            prefix = f"line {line}: " if line is not None else ""
            parts.append(prefix + str(v))
        super().__init__(f"{len(self.violations)} violation(s): " + "; ".join(parts))


class UnknownIdError(DataError):
    kind = "unknown-id"

    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__("ids not present in manifest: " + ", ".join(self.ids))


class MissingResponseError(DataError):
    kind = "missing-response"

    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(
            "records without hypothesis_parse or em_override: " + ", ".join(self.ids)
        )


class EmptyReferenceError(DataError):
    kind = "empty-reference"


class StatisticalError(AuditError):
    kind = "statistical"


class SeparationError(StatisticalError):
    kind = "separation"


class RankDeficiencyError(StatisticalError):
    kind = "rank-deficiency"


class EmptyDesignError(StatisticalError):
    kind = "empty-design"


class SingleLevelError(StatisticalError):
    kind = "single-level"


class ConvergenceError(StatisticalError):
    kind = "not-converged"


class DegenerateGroupError(StatisticalError):
    kind = "degenerate-group"
