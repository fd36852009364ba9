"""Canned synthetic cohorts used by the test suite and the scripts/ experiments."""

from __future__ import annotations

import math

from .data_model import DemographicTags, Parse, Slot, UtteranceRecord
from .ingestion import DatasetManifest, SyntheticSpec

# EM success probability per dialect: every regional group is better parsed
# than the two non-native groups, Asian lowest.
CONFOUNDING_DIALECT_P = {
    "Asian": 0.55,
    "LatinX": 0.62,
    "Inland-North": 0.80,
    "Mid-Atlantic": 0.84,
    "Midland": 0.87,
    "New England": 0.90,
    "Southern": 0.93,
    "Western": 0.95,
}
# Female share: skewed towards female speakers in the low-EM groups.
CONFOUNDING_FEMALE_SHARE = {"Asian": 0.62, "LatinX": 0.62}
CONFOUNDING_FEMALE_SHARE_OTHER = 0.45

CONFOUNDING_SEED = 2024


def confounding_spec(seed: int = CONFOUNDING_SEED, per_dialect: int = 1000) -> SyntheticSpec:
    """Dialect drives EM; gender has no effect but is unevenly spread over dialects."""
    probs, counts = {}, {}
    for dialect, p in CONFOUNDING_DIALECT_P.items():
        n_female = round(per_dialect * CONFOUNDING_FEMALE_SHARE.get(dialect, CONFOUNDING_FEMALE_SHARE_OTHER))
        for gender, n in (("female", n_female), ("male", per_dialect - n_female)):
            probs[(gender, dialect)] = p
            counts[(gender, dialect)] = n
    return SyntheticSpec(probs, counts, seed, variables=("gender", "dialectal_region"))


def null_spec(seed: int, per_level: int = 2000) -> SyntheticSpec:
    """Two-level variable with the same success probability in both levels."""
    cells = [("female",), ("male",)]
    return SyntheticSpec(
        {c: 0.5 for c in cells}, {c: per_level for c in cells}, seed, variables=("gender",)
    )


INDEPENDENT_SEED = 7
INDEPENDENT_LOGIT = {
    "intercept": 1.0,
    "gender=male": 0.3,
    "age_range=9-16": -0.25,
    "age_range=29-41": 0.15,
}


def independent_spec(seed: int = INDEPENDENT_SEED, per_cell: int = 3000) -> SyntheticSpec:
    """Additive logit effects of gender and age over a balanced crossing."""
    probs, counts = {}, {}
    for gender in ("female", "male"):
        for age in ("9-16", "17-28", "29-41"):
            eta = INDEPENDENT_LOGIT["intercept"]
            eta += INDEPENDENT_LOGIT.get(f"gender={gender}", 0.0)
            eta += INDEPENDENT_LOGIT.get(f"age_range={age}", 0.0)
            probs[(gender, age)] = 1.0 / (1.0 + math.exp(-eta))
            counts[(gender, age)] = per_cell
    return SyntheticSpec(probs, counts, seed, variables=("gender", "age_range"))


def two_by_two_manifest(
    female=(30, 100), male=(60, 100), speakers_per_group: int = 4
) -> DatasetManifest:
    """Fixed-outcome cohort: ``(successes, total)`` EM counts per gender."""
    parse = Parse("PlayMusic", (Slot("song_name", "abbey road"),))
    records = []
    for gender, (succ, total) in (("female", female), ("male", male)):
        for i in range(total):
            records.append(
                UtteranceRecord(
                    utterance_id=f"{gender}-{i:04d}",
                    speaker_id=f"{gender}-spk{i % speakers_per_group}",
                    split="test",
                    reference_transcript="play the song abbey road",
                    reference_parse=parse,
                    tags=DemographicTags(gender=gender),
                    em_override=int(i < succ),
                )
            )
    return DatasetManifest(tuple(records), source_descriptor="2x2 fixture")
