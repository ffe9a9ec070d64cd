import numpy as np
import pytest

from recipnn.context import build_context

# 2D unit-vector fixture used across the core tests: the query plus three
# candidates at increasing angles. Inner products: q·c1=0.96, q·c2=0.8,
# q·c3=0.28, c1·c2=0.936, c1·c3=0.5376, c2·c3=0.8.
FIXTURE_Q = np.array([1.0, 0.0])
FIXTURE_DOCS = {
    "c1": np.array([0.96, 0.28]),
    "c2": np.array([0.80, 0.60]),
    "c3": np.array([0.28, 0.96]),
}

# Degree layout for the 2D rank-improvement scenario: a planted positive "p"
# sits geometrically behind a band of negatives ("f" docs and "a") but shares
# a tight mutual-neighbor community with "s1", "s2" and "b". At k=4 the mixed
# score lifts p from geometric rank 6 to rank 3. Adding "e2" right next to p
# corrupts p's neighborhood and removes the improvement; "e1" is a far-away
# control that changes nothing.
IMPROVE_BASE = {
    "a": 4.0, "d3": 16.0, "f1": 19.0, "f2": 21.0, "f4": 24.0,
    "b": -13.0, "p": -22.0, "s1": -28.0, "s2": -30.0,
}
IMPROVE_EXTRA_HARMLESS = {"e1": 120.0}
IMPROVE_EXTRA_DISRUPTOR = {"e2": -24.5}


def unit_vec(degrees: float) -> np.ndarray:
    r = np.deg2rad(degrees)
    return np.array([np.cos(r), np.sin(r)])


def circle_context(degrees: dict, query_deg: float = 0.0, query_id: str = "q"):
    ids = sorted(degrees)
    vecs = np.array([unit_vec(degrees[i]) for i in ids])
    return build_context(query_id, unit_vec(query_deg), ids, vecs)


@pytest.fixture
def small_context():
    ids = sorted(FIXTURE_DOCS)
    vecs = np.array([FIXTURE_DOCS[i] for i in ids])
    return build_context("q", FIXTURE_Q, ids, vecs)


@pytest.fixture
def improve_context():
    return circle_context(IMPROVE_BASE)
