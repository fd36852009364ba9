from pathlib import Path

import pytest

from slubias.data_model import AuditConfig, load_schema
from slubias.metrics import score_manifest
from slubias.scenarios import two_by_two_manifest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def schema():
    return load_schema()


@pytest.fixture(scope="session")
def config():
    return AuditConfig()


@pytest.fixture(scope="session")
def two_by_two():
    manifest = two_by_two_manifest()
    return manifest, score_manifest(manifest)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
