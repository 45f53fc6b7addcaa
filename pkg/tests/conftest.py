import numpy as np
import pytest

from evshift._backend import AVAILABLE
from evshift.events import EventStream


@pytest.fixture(params=sorted(AVAILABLE))
def kernels(request):
    """Each available kernel backend in turn."""
    return AVAILABLE[request.param]


def random_stream(rng, n, width=8, height=8, t_max=10_000, interior=False):
    lo = 1 if interior else 0
    x = rng.integers(lo, width - lo, size=n)
    y = rng.integers(lo, height - lo, size=n)
    t = np.sort(rng.integers(0, t_max, size=n)).astype(np.uint64)
    p = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    return EventStream(width, height, x, y, t, p)


def as_tuples(stream):
    return [(int(a), int(b), int(c), int(d)) for a, b, c, d in zip(stream.x, stream.y, stream.t, stream.p)]


# one "criterion N: PASS|FAIL ..." line per acceptance check, printed at the end
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
