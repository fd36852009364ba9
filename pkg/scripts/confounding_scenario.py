"""Run the dialect-drives-EM, gender-skewed simulation and print the full matrix.

Also reports how often the confounder verdict is recovered over a range of seeds.

    python scripts/confounding_scenario.py --seeds 20
"""

from __future__ import annotations

import argparse
from collections import Counter
from dataclasses import dataclass

from slubias.bias_tests import adjustment_test
from slubias.ingestion import generate_synthetic
from slubias.metrics import score_manifest
from slubias.report import build_report, render_markdown
from slubias.scenarios import CONFOUNDING_SEED, confounding_spec


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = CONFOUNDING_SEED
    per_dialect: int = 1000
    seeds: int = 20


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=ScenarioConfig.seed)
    p.add_argument("--per-dialect", type=int, default=ScenarioConfig.per_dialect)
    p.add_argument("--seeds", type=int, default=ScenarioConfig.seeds, help="seeds for the recovery sweep")
    a = p.parse_args(argv)
    cfg = ScenarioConfig(a.seed, a.per_dialect, a.seeds)

    m = generate_synthetic(confounding_spec(cfg.seed, cfg.per_dialect))
    print(render_markdown(build_report(m, score_manifest(m), ["gender", "dialectal_region"])))

    verdicts = Counter()
    for seed in range(1, cfg.seeds + 1):
        ms = generate_synthetic(confounding_spec(seed, cfg.per_dialect))
        verdicts[adjustment_test(ms, score_manifest(ms), "gender", "dialectal_region").verdict] += 1
    print(f"gender | dialectal_region verdicts over seeds 1..{cfg.seeds}: {dict(verdicts)}")


if __name__ == "__main__":
    main()
