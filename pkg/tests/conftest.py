from pathlib import Path

import numpy as np
import pytest

from pcrank.core import PCMatrix, validate

FIXTURES = Path(__file__).parent / "fixtures"

EXAMPLE1 = [
    [1, 1, 2, 0.5],
    [1, 1, 0.25, 8],
    [0.5, 4, 1, 1],
    [2, 0.125, 1, 1],
]
EXAMPLE2 = [
    [1, 3, None],
    [1 / 3, 1, 3],
    [None, 1 / 3, 1],
]

# Missing pairs (0-based) of the two 5x5 motivating patterns.
C1_MISSING = [(0, 2), (0, 3), (0, 4)]
C2_MISSING = [(0, 2), (0, 3), (1, 3)]


def complete_ones(n: int) -> PCMatrix:
    return PCMatrix(np.ones((n, n)), np.ones((n, n), dtype=bool))


def consistent(w) -> PCMatrix:
    w = np.asarray(w, dtype=float)
    return PCMatrix(w[:, None] / w[None, :], np.ones((len(w), len(w)), dtype=bool))


def random_complete(n: int, rng: np.random.Generator) -> PCMatrix:
    vals = np.exp(rng.uniform(-2, 2, size=(n, n)))
    iu = np.triu_indices(n, 1)
    out = np.ones((n, n))
    out[iu] = vals[iu]
    out.T[iu] = 1 / vals[iu]
    return PCMatrix(out, np.ones((n, n), dtype=bool))


def random_mask(n: int, rng: np.random.Generator, p_missing: float) -> PCMatrix:
    C = random_complete(n, rng)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p_missing]
    return C.without(pairs)


@pytest.fixture
def example1() -> PCMatrix:
    return validate(EXAMPLE1)


@pytest.fixture
def example2() -> PCMatrix:
    return validate(EXAMPLE2)


@pytest.fixture
def c1() -> PCMatrix:
    return complete_ones(5).without(C1_MISSING)


@pytest.fixture
def c2() -> PCMatrix:
    return complete_ones(5).without(C2_MISSING)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


# One line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
