import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bnaug.dataset import MISSING, Dataset, VariableSchema  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"


def make_dataset(cells, cards=None):
    cells = np.asarray(cells, dtype=np.int64)
    m = cells.shape[1]
    cards = cards or [2] * m
    schema = tuple(VariableSchema(f"X{i}", tuple(str(s) for s in range(r))) for i, r in enumerate(cards))
    return Dataset(schema, cells)


def random_instance(rng, m, n, c, cards=None):
    """Random grid with exactly ``c`` missing cells."""
    cards = cards or [2] * m
    cells = np.column_stack([rng.integers(0, r, size=n) for r in cards])
    flat = rng.choice(n * m, size=c, replace=False)
    for f in flat:
        cells[f // m, f % m] = MISSING
    return make_dataset(cells, cards)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def network_path():
    return DATA_DIR / "strong8.net"


# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
