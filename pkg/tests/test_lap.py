"""Linear assignment backends: correctness against scipy, dual feasibility,
and agreement between the compiled and the NumPy implementations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from gotlab import lap, lap_numpy

BACKENDS = [("numpy", lap_numpy.solve_lap)]
if "c" in lap.available_backends():
    from gotlab import _lapjv

    BACKENDS.append(("c", _lapjv.solve_lap))


def _scipy_total(C):
    r, c = linear_sum_assignment(C)
    return float(C[r, c].sum())


def _assert_valid(C, col_of_row, u, v, total, tol=1e-9):
    n = C.shape[0]
    assert sorted(col_of_row) == list(range(n)), "not a permutation"
    assigned = float(C[np.arange(n), col_of_row].sum())
    assert assigned == pytest.approx(total, abs=tol)
    # dual feasibility and complementary slackness
    scale = max(1.0, np.abs(C[np.isfinite(C)]).max(initial=1.0))
    slack = C - u[:, None] - v[None, :]
    assert slack.min() >= -1e-9 * scale
    assert np.abs(slack[np.arange(n), col_of_row]).max() <= 1e-9 * scale


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_known_3x3(name, solve):
    C = np.array(
        [
            [4.0, 1.0, 3.0],
            [2.0, 0.0, 5.0],
            [3.0, 2.0, 2.0],
        ]
    )
    col_of_row, u, v, total = solve(C)
    assert total == pytest.approx(5.0)  # 1 + 2 + 2 via (0->1, 1->0, 2->2)
    _assert_valid(C, np.asarray(col_of_row), np.asarray(u), np.asarray(v), total)


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_one_by_one(name, solve):
    col_of_row, u, v, total = solve(np.array([[7.5]]))
    assert list(col_of_row) == [0]
    assert total == pytest.approx(7.5)


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_forbidden_edges(name, solve):
    C = np.array(
        [
            [np.inf, 1.0],
            [1.0, np.inf],
        ]
    )
    col_of_row, _, _, total = solve(C)
    assert list(col_of_row) == [1, 0]
    assert total == pytest.approx(2.0)


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_rejects_bad_input(name, solve):
    with pytest.raises(ValueError):
        solve(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        solve(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        solve(np.array([[np.nan, 1.0], [1.0, 0.0]]))


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_random_matches_scipy(name, solve):
    rng = np.random.default_rng(7)
    for n in (2, 3, 5, 8, 13, 21, 40):
        C = rng.random((n, n)) * 10.0
        col_of_row, u, v, total = solve(C)
        assert total == pytest.approx(_scipy_total(C), abs=1e-8)
        _assert_valid(C, np.asarray(col_of_row), np.asarray(u), np.asarray(v), total)


@pytest.mark.parametrize("name,solve", BACKENDS)
def test_negative_and_tied_costs(name, solve):
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        # integer costs produce plenty of ties
        C = rng.integers(-3, 4, size=(n, n)).astype(float)
        col_of_row, u, v, total = solve(C)
        assert total == pytest.approx(_scipy_total(C), abs=1e-9)
        _assert_valid(C, np.asarray(col_of_row), np.asarray(u), np.asarray(v), total)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(1, 30))
        C = rng.standard_normal((n, n)) * 5.0
        totals = []
        for _, solve in BACKENDS:
            _, _, _, total = solve(C)
            totals.append(total)
        assert totals[0] == pytest.approx(totals[1], abs=1e-8)


@settings(deadline=None, max_examples=60)
@given(
    n=st.integers(1, 7),
    seed=st.integers(0, 2**31 - 1),
)
def test_property_optimal_cost(n, seed):
    rng = np.random.default_rng(seed)
    C = rng.random((n, n))
    _, _, _, total = lap.solve_lap(C)
    assert total == pytest.approx(_scipy_total(C), abs=1e-9)


def test_backend_selection_reporting():
    assert lap.backend_name() in ("c", "numpy")
    assert "numpy" in lap.available_backends()
