"""Monotonicity and potential certificates: soundness of every accepted
certificate, agreement with uniqueness, and the quadratic-residual maximum."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gotlab import (
    ResidualFunction,
    UsageError,
    check_convex_smooth,
    check_cyclical_monotonicity,
    get_preset,
    implied_convexity_constants,
    is_unique_optimal,
    max_quadratic_lambda,
    solve_potentials,
    solve_w2,
    uniform_measure,
)


def _matched(preset):
    sol = solve_w2(preset.mu, preset.nu)
    return preset.mu.points, preset.nu.points[np.asarray(sol.matching.perm)]


def _assert_certificate_sound(X, Ym, cert, tol=1e-9):
    """Every pairwise inequality <x_i, y_i - y_j> >= phi_i - phi_j + f(i, j)."""
    assert cert.valid
    k = X.shape[0]
    phi = cert.phi
    assert phi[0] == 0.0
    F = cert.residual.values(X, Ym)
    scale = max(1.0, np.abs(X).max() * max(1.0, np.abs(Ym).max()))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            lhs = float(X[i] @ (Ym[i] - Ym[j]))
            assert lhs >= phi[i] - phi[j] + F[i, j] - tol * scale


# ---------------------------------------------------------------------------
# residual functions
# ---------------------------------------------------------------------------

def test_residual_zero_and_quadratic_values():
    X = np.array([[0.0], [1.0]])
    Y = np.array([[0.0], [3.0]])
    assert np.all(ResidualFunction.zero().values(X, Y) == 0.0)
    F = ResidualFunction.quadratic_y(0.5).values(X, Y)
    # f(i, j) = (lam / 2) * ||y_i - y_j||^2 = 0.25 * 9
    np.testing.assert_allclose(F, [[0.0, 2.25], [2.25, 0.0]])


def test_residual_convex_smooth_formula():
    X = np.array([[0.0], [2.0]])
    Y = np.array([[0.0], [1.0]])
    alpha, beta = 0.5, 2.0
    F = ResidualFunction.convex_smooth(alpha, beta).values(X, Y)
    # (||dx||^2 + alpha beta ||dy||^2 - 2 alpha <dy, dx>) / (2 (beta - alpha))
    expect = (4.0 + 1.0 * 1.0 - 2.0 * 0.5 * 2.0) / 3.0
    np.testing.assert_allclose(F, [[0.0, expect], [expect, 0.0]])


def test_residual_constructor_validation():
    with pytest.raises(UsageError):
        ResidualFunction.quadratic_y(0.0)
    with pytest.raises(UsageError):
        ResidualFunction.quadratic_y(-1.0)
    with pytest.raises(UsageError):
        ResidualFunction.convex_smooth(2.0, 1.0)
    with pytest.raises(UsageError):
        ResidualFunction.convex_smooth(0.0, 1.0)
    with pytest.raises(UsageError):
        ResidualFunction.from_table([[0.0, 1.0], [1.0, 1.0]])  # nonzero diag
    with pytest.raises(UsageError):
        ResidualFunction.from_table([[0.0, -1.0], [-1.0, 0.0]])  # nonpositive
    with pytest.raises(UsageError):
        ResidualFunction.from_table([[0.0, 1.0], [2.0, 0.0]])  # asymmetric
    with pytest.raises(UsageError):
        ResidualFunction.from_table([[0.0, 1.0]])  # not square


def test_residual_table_shape_checked_at_evaluation():
    f = ResidualFunction.from_table([[0.0, 1.0], [1.0, 0.0]])
    X = np.zeros((3, 1)) + np.arange(3)[:, None]
    with pytest.raises(UsageError):
        f.values(X, X)


# ---------------------------------------------------------------------------
# cyclical monotonicity
# ---------------------------------------------------------------------------

def test_optimal_matchings_are_monotone():
    rng = np.random.default_rng(14)
    for _ in range(20):
        k = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        mu = uniform_measure(rng.standard_normal((k, d)))
        nu = uniform_measure(rng.standard_normal((k, d)))
        sol = solve_w2(mu, nu)
        res = check_cyclical_monotonicity(mu.points, nu.points, sol.matching)
        assert res.monotone


def test_swapped_matching_violates_with_certified_cycle():
    p = get_preset("mu_1")
    res = check_cyclical_monotonicity(p.mu.points, p.nu.points, [1, 0])
    assert not res.monotone
    assert res.violating_cycle == (0, 1)
    # cycle weight is the cost change of relabeling along the cycle;
    # for mu_1 the swap loses exactly the matching margin 0.8
    assert res.cycle_weight == pytest.approx(-0.8)


def test_violating_cycle_weight_is_negative_whenever_reported():
    rng = np.random.default_rng(17)
    seen_violation = 0
    for _ in range(40):
        k = int(rng.integers(2, 6))
        X = rng.standard_normal((k, 2))
        Y = rng.standard_normal((k, 2))
        res = check_cyclical_monotonicity(X, Y)  # arbitrary pairing
        if res.monotone:
            continue
        seen_violation += 1
        cyc = list(res.violating_cycle)
        # recompute the cycle weight from scratch
        total = 0.0
        for t, i in enumerate(cyc):
            j = cyc[(t + 1) % len(cyc)]
            total += float(((X[i] - Y[j]) ** 2).sum() - ((X[i] - Y[i]) ** 2).sum())
        assert total == pytest.approx(res.cycle_weight, abs=1e-9)
        assert total < 0
    assert seen_violation >= 5  # random pairings violate often


def test_single_pair_is_trivially_monotone():
    res = check_cyclical_monotonicity(np.array([[1.0]]), np.array([[2.0]]))
    assert res.monotone


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

def test_certificates_are_sound_on_presets():
    for k in (1, 2, 3, 4):
        p = get_preset("mu_k", k=k)
        X, Ym = _matched(p)
        lam = max_quadratic_lambda(X, Ym)
        cert = solve_potentials(X, Ym, ResidualFunction.quadratic_y(lam / 2))
        _assert_certificate_sound(X, Ym, cert)


def test_invalid_certificate_returns_violating_cycle():
    cross = get_preset("cross")
    X, Ym = _matched(cross)
    cert = solve_potentials(X, Ym, ResidualFunction.quadratic_y(1.0))
    assert not cert.valid
    assert cert.phi is None
    assert cert.violating_cycle is not None
    # the reported cycle must actually break the inequality system:
    # summing <x_i, y_i - y_next> - f(i, next) around it is negative
    cyc = list(cert.violating_cycle)
    F = cert.residual.values(X, Ym)
    total = 0.0
    for t, i in enumerate(cyc):
        j = cyc[(t + 1) % len(cyc)]
        total += float(X[i] @ (Ym[i] - Ym[j])) - F[i, j]
    assert total < 0


def test_zero_residual_matches_monotonicity_verdict():
    rng = np.random.default_rng(23)
    for _ in range(25):
        k = int(rng.integers(2, 6))
        X = rng.standard_normal((k, 2))
        Y = rng.standard_normal((k, 2))
        mono = check_cyclical_monotonicity(X, Y).monotone
        cert = solve_potentials(X, Y, ResidualFunction.zero())
        assert cert.valid == mono
        if cert.valid:
            _assert_certificate_sound(X, Y, cert)


def test_table_residual_certificate():
    p = get_preset("mu_1")
    X, Ym = _matched(p)
    # constant residuals certify here up to 0.2 (= lam*/2 * ||dy||^2)
    table = np.array([[0.0, 0.1], [0.1, 0.0]])
    cert = solve_potentials(X, Ym, ResidualFunction.from_table(table))
    _assert_certificate_sound(X, Ym, cert)


def test_single_pair_certificate_is_trivial():
    cert = solve_potentials(
        np.array([[3.0]]), np.array([[5.0]]), ResidualFunction.quadratic_y(10.0)
    )
    assert cert.valid
    np.testing.assert_array_equal(cert.phi, [0.0])


# ---------------------------------------------------------------------------
# max quadratic lambda
# ---------------------------------------------------------------------------

def test_max_lambda_frozen_values():
    for k in (1, 2, 3, 4):
        p = get_preset("mu_k", k=k)
        X, Ym = _matched(p)
        assert max_quadratic_lambda(X, Ym) == pytest.approx(k / 20.0, abs=1e-9)


def test_max_lambda_zero_on_ties():
    cross = get_preset("cross")
    X, Ym = _matched(cross)
    assert max_quadratic_lambda(X, Ym) == 0.0


def test_max_lambda_identity_map_is_one(identity_pair):
    mu, nu = identity_pair
    assert max_quadratic_lambda(mu.points, nu.points) == 1.0


def test_max_lambda_is_the_feasibility_threshold():
    rng = np.random.default_rng(31)
    for _ in range(10):
        k = int(rng.integers(2, 6))
        mu = uniform_measure(rng.standard_normal((k, 2)))
        nu = uniform_measure(rng.standard_normal((k, 2)))
        sol = solve_w2(mu, nu)
        X, Ym = mu.points, nu.points[np.asarray(sol.matching.perm)]
        lam = max_quadratic_lambda(X, Ym)
        if lam <= 1e-8:
            continue
        assert solve_potentials(X, Ym, ResidualFunction.quadratic_y(lam / 2)).valid
        assert not solve_potentials(
            X, Ym, ResidualFunction.quadratic_y(lam * 1.01 + 1e-6)
        ).valid


def test_max_lambda_scale_invariant():
    """Scaling X and Y jointly by c scales both inequality sides by c^2."""
    rng = np.random.default_rng(37)
    mu = uniform_measure(rng.standard_normal((4, 2)))
    nu = uniform_measure(rng.standard_normal((4, 2)))
    sol = solve_w2(mu, nu)
    X, Ym = mu.points, nu.points[np.asarray(sol.matching.perm)]
    base = max_quadratic_lambda(X, Ym)
    for c in (0.5, 3.0):
        scaled = max_quadratic_lambda(c * X, c * Ym)
        assert scaled == pytest.approx(base, rel=1e-6, abs=1e-9)


@settings(deadline=None, max_examples=25)
@given(k=st.integers(2, 5), seed=st.integers(0, 2**31 - 1))
def test_positive_lambda_iff_unique(k, seed):
    """lam* > 0 exactly when the optimal matching is unique."""
    rng = np.random.default_rng(seed)
    mu = uniform_measure(rng.standard_normal((k, 2)))
    nu = uniform_measure(rng.standard_normal((k, 2)))
    sol = solve_w2(mu, nu)
    lam = max_quadratic_lambda(mu.points, nu.points, sol.matching)
    assert (lam > 1e-8) == is_unique_optimal(mu, nu, sol)


# ---------------------------------------------------------------------------
# convex/smooth certificates
# ---------------------------------------------------------------------------

def test_identity_map_certifies_convex_smooth(identity_pair):
    mu, nu = identity_pair
    cert = check_convex_smooth(mu.points, nu.points, 0.5, 2.0)
    _assert_certificate_sound(mu.points, nu.points, cert)


def test_convex_smooth_rejects_bad_constants(identity_pair):
    mu, nu = identity_pair
    with pytest.raises(UsageError):
        check_convex_smooth(mu.points, nu.points, 2.0, 0.5)


def test_implied_convexity_constants_round_trip():
    assert implied_convexity_constants(2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0) == (
        pytest.approx(0.5),
        pytest.approx(2.0),
    )
    with pytest.raises(UsageError):
        implied_convexity_constants(1.0, 1.0, 1.0)  # 1 + 1 != 1
    with pytest.raises(UsageError):
        implied_convexity_constants(-1.0, 1.0, 1.0)


def test_matching_argument_relabels():
    p = get_preset("mu_1")
    sol = solve_w2(p.mu, p.nu)
    direct = check_cyclical_monotonicity(
        p.mu.points, p.nu.points[np.asarray(sol.matching.perm)]
    )
    via_arg = check_cyclical_monotonicity(p.mu.points, p.nu.points, sol.matching)
    assert direct.monotone == via_arg.monotone


def test_matching_must_be_a_permutation():
    X = np.zeros((2, 1)) + np.arange(2)[:, None]
    with pytest.raises(UsageError):
        check_cyclical_monotonicity(X, X, [0, 0])
