import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def nearest_distance_bruteforce(src_mask, dst_mask):
    """Distances from each True pixel of ``src_mask`` to the nearest True pixel of ``dst_mask``."""
    sy, sx = np.nonzero(src_mask)
    dy, dx = np.nonzero(dst_mask)
    out = []
    for y, x in zip(sy, sx):
        out.append(min(np.hypot(y - yy, x - xx) for yy, xx in zip(dy, dx)))
    return np.array(out)


def transport_cost_1d(a, b):
    """Greedy monotone (north-west corner) transport between unit-mass histograms, cost |i-j|/n."""
    a = np.asarray(a, float) / np.sum(a)
    b = np.asarray(b, float) / np.sum(b)
    n = len(a)
    a, b = list(a), list(b)
    i = j = 0
    cost = 0.0
    while i < n and j < n:
        m = min(a[i], b[j])
        cost += m * abs(i - j) / n
        a[i] -= m
        b[j] -= m
        if a[i] <= 1e-15:
            i += 1
        if b[j] <= 1e-15:
            j += 1
    return cost


ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
