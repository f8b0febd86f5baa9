import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from patternlab.groups import GroupDescriptor

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# (criterion number, PASS/FAIL line) pairs collected by the acceptance suite
ACCEPTANCE_LINES = pytest.StashKey[list]()


def nested_loop_count(rows, group: GroupDescriptor, mask) -> int:
    """Independent oracle: loop over G^d with coordinate arithmetic."""
    d = len(rows[0])
    members = {tuple(group.coords_of(i)) for i in np.flatnonzero(mask)}
    elements = [tuple(c) for c in group.coords]
    total = 0
    for xs in itertools.product(elements, repeat=d):
        ok = True
        for row in rows:
            val = tuple(
                sum(c * x[j] for c, x in zip(row, xs)) % n for j, n in enumerate(group.factors)
            )
            if val not in members:
                ok = False
                break
        total += ok
    return total


def brute_hom_density(H, tables) -> float:
    sizes = [None] * H.k
    for (u, v), t in tables.items():
        sizes[u], sizes[v] = t.shape
    sizes = [s or 1 for s in sizes]
    total = 0.0
    for xs in itertools.product(*[range(s) for s in sizes]):
        total += math.prod(tables[e][xs[e[0]], xs[e[1]]] for e in H.edges)
    return total / math.prod(sizes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
