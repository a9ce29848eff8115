import json
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def detections_dir() -> Path:
    return FIXTURES / "detections"


@pytest.fixture(scope="session")
def groundtruth_dir() -> Path:
    return FIXTURES / "groundtruth"


@pytest.fixture(scope="session")
def query_path() -> Path:
    return FIXTURES / "query.json"


@pytest.fixture(scope="session")
def expected_counts() -> dict:
    return json.loads((FIXTURES / "expected_counts.json").read_text(encoding="utf-8"))
