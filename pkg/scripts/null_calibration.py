"""Wald rejection rate on seeded null cohorts (two levels, equal success probability).

    python scripts/null_calibration.py --runs 200 --per-level 2000
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

from slubias.bias_tests import univariate_audit
from slubias.data_model import AuditConfig, load_schema
from slubias.ingestion import generate_synthetic
from slubias.metrics import score_manifest
from slubias.scenarios import null_spec


@dataclass(frozen=True)
class CalibrationConfig:
    runs: int = 200
    per_level: int = 2000
    first_seed: int = 1
    alpha: float = 0.05


def run(cfg: CalibrationConfig) -> dict:
    schema = load_schema()
    audit_cfg = AuditConfig(alpha=cfg.alpha)
    wald = llr = 0
    start = time.perf_counter()
    for seed in range(cfg.first_seed, cfg.first_seed + cfg.runs):
        m = generate_synthetic(null_spec(seed=seed, per_level=cfg.per_level))
        res = univariate_audit(m, score_manifest(m), "gender", audit_cfg, schema)
        wald += res.effects[0].significant
        llr += res.omnibus.significant
    return {
        "config": asdict(cfg),
        "wald_rejection_rate": wald / cfg.runs,
        "llr_rejection_rate": llr / cfg.runs,
        "seconds": round(time.perf_counter() - start, 2),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--runs", type=int, default=CalibrationConfig.runs)
    p.add_argument("--per-level", type=int, default=CalibrationConfig.per_level)
    p.add_argument("--first-seed", type=int, default=CalibrationConfig.first_seed)
    p.add_argument("--alpha", type=float, default=CalibrationConfig.alpha)
    a = p.parse_args(argv)
    result = run(CalibrationConfig(a.runs, a.per_level, a.first_seed, a.alpha))
    print(json.dumps(result, indent=2))


if __name__ == "__main__":
    main()
