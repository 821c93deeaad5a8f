import random
import sys

import pytest

from geodynis.geometry import make_box


def random_cubes(rng: random.Random, n: int, d: int, N: int, sizes=(1, 2, 3, 4, 6, 8), W: int = 1):
    out = []
    for i in range(n):
        s = rng.choice(sizes)
        lo = [rng.randint(0, N - s) for _ in range(d)]
        out.append(make_box(i, lo, [x + s for x in lo], rng.randint(1, W)))
    return out


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
