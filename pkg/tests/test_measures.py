"""Measure construction, validation, JSON round-trips, and translation."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gotlab import (
    DiscreteMeasure,
    MeasureFormatError,
    Translation,
    load_measure,
    loads_measure,
    serialize_measure,
    translate,
    uniform_measure,
)


# ---------------------------------------------------------------------------
# construction and invariants
# ---------------------------------------------------------------------------

def test_uniform_measure_basics():
    m = uniform_measure([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
    assert m.num_atoms == 3
    assert m.dim == 2
    assert m.is_uniform()
    np.testing.assert_allclose(m.weights, np.full(3, 1.0 / 3.0))


def test_arrays_are_frozen():
    m = uniform_measure([[0.0], [1.0]])
    with pytest.raises(ValueError):
        m.points[0, 0] = 5.0
    with pytest.raises(ValueError):
        m.weights[0] = 0.9


def test_rejects_duplicate_atoms():
    with pytest.raises(MeasureFormatError, match="distinct"):
        uniform_measure([[1.0, 2.0], [1.0, 2.0]])


def test_rejects_empty_and_nonfinite_points():
    with pytest.raises(MeasureFormatError):
        uniform_measure(np.zeros((0, 2)))
    with pytest.raises(MeasureFormatError):
        uniform_measure([[np.nan, 0.0]])
    with pytest.raises(MeasureFormatError):
        uniform_measure([[np.inf, 0.0]])


def test_rejects_bad_weights():
    pts = np.array([[0.0], [1.0]])
    with pytest.raises(MeasureFormatError):
        DiscreteMeasure(points=pts, weights=np.array([0.5, -0.5]))
    with pytest.raises(MeasureFormatError):
        DiscreteMeasure(points=pts, weights=np.array([0.5, 0.0]))
    with pytest.raises(MeasureFormatError):
        DiscreteMeasure(points=pts, weights=np.array([0.5]))
    # sum too far from 1 (beyond 1e-9)
    with pytest.raises(MeasureFormatError, match="sum"):
        DiscreteMeasure(points=pts, weights=np.array([0.6, 0.5]))


def test_weight_renormalization_window():
    pts = np.array([[0.0], [1.0]])
    # within 1e-9 of 1: accepted and renormalized to sum exactly 1
    off = DiscreteMeasure(points=pts, weights=np.array([0.5, 0.5 + 5e-10]))
    assert abs(off.weights.sum() - 1.0) < 1e-15
    # already exact: kept bit-for-bit
    w = np.array([0.25, 0.75])
    kept = DiscreteMeasure(points=pts, weights=w.copy())
    assert kept.weights[0] == 0.25 and kept.weights[1] == 0.75


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def test_loads_measure_minimal():
    m = loads_measure('{"dim": 2, "points": [[0.0, 1.0], [2.0, 3.0]]}')
    assert m.num_atoms == 2 and m.dim == 2
    assert m.is_uniform()


def test_loads_measure_with_weights():
    m = loads_measure(
        '{"dim": 1, "points": [[0.0], [1.0]], "weights": [0.25, 0.75]}'
    )
    np.testing.assert_array_equal(m.weights, [0.25, 0.75])


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[1, 2, 3]",
        '{"points": [[0.0]]}',
        '{"dim": 0, "points": [[0.0]]}',
        '{"dim": 2, "points": [[0.0]]}',
        '{"dim": 1, "points": [[0.0], [0.0]]}',
    ],
)
def test_loads_measure_rejects(text):
    with pytest.raises(MeasureFormatError):
        loads_measure(text)


def test_load_measure_sources(tmp_path):
    blob = serialize_measure(uniform_measure([[1.0, 2.0], [3.0, 4.0]]))
    from_bytes = load_measure(blob)
    from_str = load_measure(blob.decode())
    path = tmp_path / "m.json"
    path.write_bytes(blob)
    with open(path, "rb") as fh:
        from_file = load_measure(fh)
    for m in (from_bytes, from_str, from_file):
        np.testing.assert_array_equal(m.points, [[1.0, 2.0], [3.0, 4.0]])


def test_serialize_shape():
    m = uniform_measure([[0.5, -1.5]])
    obj = json.loads(serialize_measure(m))
    assert set(obj) == {"dim", "points", "weights"}
    assert obj["dim"] == 2
    assert obj["points"] == [[0.5, -1.5]]
    assert obj["weights"] == [1.0]


@settings(deadline=None, max_examples=50)
@given(
    pts=hnp.arrays(
        np.float64,
        st.tuples(st.integers(1, 6), st.integers(1, 3)),
        elements=st.floats(-1e6, 1e6, allow_nan=False, width=32),
    )
)
def test_serialize_load_round_trip(pts):
    rows = {tuple(r) for r in pts.tolist()}
    if len(rows) != pts.shape[0]:
        return  # duplicate atoms are invalid by construction
    m = uniform_measure(pts)
    back = load_measure(serialize_measure(m))
    np.testing.assert_array_equal(back.points, m.points)
    np.testing.assert_array_equal(back.weights, m.weights)


# ---------------------------------------------------------------------------
# translation
# ---------------------------------------------------------------------------

def test_translate_shifts_points_keeps_weights():
    m = DiscreteMeasure(
        points=np.array([[0.0, 0.0], [1.0, 1.0]]),
        weights=np.array([0.3, 0.7]),
    )
    t = Translation(np.array([2.0, -1.0]))
    shifted = translate(m, t)
    np.testing.assert_array_equal(shifted.points, [[2.0, -1.0], [3.0, 0.0]])
    np.testing.assert_array_equal(shifted.weights, m.weights)


def test_translate_dim_mismatch():
    m = uniform_measure([[0.0, 0.0]])
    with pytest.raises(MeasureFormatError):
        translate(m, Translation(np.array([1.0])))


def test_translation_validation():
    with pytest.raises(MeasureFormatError):
        Translation(np.array([[1.0]]))
    with pytest.raises(MeasureFormatError):
        Translation(np.array([np.nan]))
