import os
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
os.environ.setdefault("OFFICEMESH_ROOT", str(REPO_ROOT))


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def office_domain_text() -> str:
    return (REPO_ROOT / "fixtures" / "office" / "domain.pddl").read_text()


@pytest.fixture(scope="session")
def office_problem1_text() -> str:
    return (REPO_ROOT / "fixtures" / "office" / "problem-scenario1.pddl").read_text()
