import math

import numpy as np
import pytest
from hypothesis import settings

from nnchain.geom import LpMetric

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

METRICS = [LpMetric(p, d) for d in (2, 3, 4) for p in (1.0, 2.0, math.inf)]


def brute_nn(pts, q, metric, alive=None):
    """(id, distance) of the nearest row of pts to q, ties to the smaller id."""
    d = metric.to_many(q, pts)
    ids = np.arange(len(pts)) if alive is None else np.asarray(sorted(alive))
    d = d[ids]
    w = np.lexsort((ids, d))[0]
    return int(ids[w]), float(d[w])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA = {}  # number -> (title, ok, detail), filled by the acceptance suite


def record_criterion(number, title, ok, detail):
    CRITERIA[number] = (title, ok, detail)
    print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
