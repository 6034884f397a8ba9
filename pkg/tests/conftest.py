import pytest

from drbounds import NuisancePair
from drbounds.adversary import build_partition
from drbounds.functions import random_grid
from drbounds.nuisance_oracle import ErrorBudget

LEVELS = 6


def grid_center(c=0.1):
    """K=1 piecewise-constant center on 64 cells."""
    return NuisancePair.of(random_grid(0.1, 0.9, 64, seed=1), random_grid(0.1, 0.9, 64, seed=2),
                           random_grid(0.1, 0.9, 64, seed=3), c=c)


def grid_weight():
    return random_grid(0.5, 1.5, 64, seed=4)


def case_budget(case):
    # Cases 2 and 4 need f above the outcome budget
    if case in ("Case2", "Case4"):
        return ErrorBudget(1e-3, 1e-3, 2e-3)
    return ErrorBudget.uniform(1e-3)


@pytest.fixture(scope="session")
def center():
    return grid_center()


@pytest.fixture(scope="session")
def weight():
    return grid_weight()


@pytest.fixture(scope="session")
def partition(weight):
    return build_partition(weight, LEVELS)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, name: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {name} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
