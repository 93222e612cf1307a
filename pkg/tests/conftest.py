from pathlib import Path

import pytest

from src.model_loader import load_model
from src.spectral import analyze_system

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name):
    return str(FIXTURE_DIR / f"fixture_{name}.json")


@pytest.fixture(scope="session")
def cantor():
    return load_model(fixture_path("a"))


@pytest.fixture(scope="session")
def two_chain():
    return load_model(fixture_path("b"))


@pytest.fixture(scope="session")
def incomparable():
    return load_model(fixture_path("c"))


@pytest.fixture(scope="session")
def cantor_analysis(cantor):
    return analyze_system(cantor, 1)


@pytest.fixture(scope="session")
def two_chain_analysis(two_chain):
    return analyze_system(two_chain, 1)


@pytest.fixture(scope="session")
def incomparable_analysis(incomparable):
    return analyze_system(incomparable, 1)
