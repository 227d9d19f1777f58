import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from parley.catalog import TaskCatalog, load_catalog


@pytest.fixture(scope="session")
def catalog() -> TaskCatalog:
    return load_catalog()


@pytest.fixture(scope="session")
def table1(catalog):
    """The utilities fixture: spec + matrix."""
    return catalog.spec_for("utilities_included"), catalog.matrix_for("utilities_included")
