import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from interbank.graph import InterbankNetwork  # noqa: E402

LEAVES = ["l1", "l2", "l3", "l4", "l5"]


def make_star(weight=1):
    return InterbankNetwork(["c"] + LEAVES, {("c", leaf): weight for leaf in LEAVES}, "star")


def random_network(rng: random.Random, n: int, p: float, max_weight: int = 50) -> InterbankNetwork:
    banks = [f"b{i:02d}" for i in range(n)]
    edges = {
        (a, b): rng.randint(1, max_weight)
        for a in banks for b in banks
        if a != b and rng.random() < p
    }
    return InterbankNetwork(banks, edges)


@pytest.fixture
def star():
    return make_star()


@pytest.fixture
def chain():
    return InterbankNetwork("abc", {("a", "b"): 1, ("b", "c"): 1})


# acceptance report: one PASS/FAIL line per criterion in the terminal summary

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
