"""Reduced-scale internal consistency suites (gotlab selfcheck).

Each suite re-derives a handful of results with independent methods (brute
force enumeration, closed forms, resampling) and compares.  The full run is
budgeted to stay well under two minutes on modest hardware.
"""

from __future__ import annotations

import io
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from . import certify, exact_ot, robustness, smoothing
from .errors import UsageError
from .measures import uniform_measure, DiscreteMeasure
from .presets import get_preset

__all__ = ["SUITES", "run_suites"]


def _random_uniform_pair(rng, k, d):
    x = rng.normal(size=(k, d))
    y = rng.normal(size=(k, d))
    return uniform_measure(x), uniform_measure(y)


def _random_general_pair(rng, m, n, d):
    wx = rng.random(m) + 0.2
    wy = rng.random(n) + 0.2
    wx /= wx.sum()
    wy /= wy.sum()
    return (
        DiscreteMeasure(points=rng.normal(size=(m, d)), weights=wx),
        DiscreteMeasure(points=rng.normal(size=(n, d)), weights=wy),
    )


def _suite_exact_ot() -> List[Tuple[bool, str]]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=101))
    checks = []
    for trial in range(24):
        k = int(rng.integers(2, 7))
        d = int(rng.integers(1, 4))
        mu, nu = _random_uniform_pair(rng, k, d)
        sol = exact_ot.solve_w2(mu, nu)
        bf = exact_ot.brute_force_w2(mu, nu)
        ok = abs(sol.w2_squared - bf.w2_squared) <= 1e-9
        checks.append((ok, f"uniform solve vs brute force (k={k}, d={d})"))
        uniq = exact_ot.is_unique_optimal(mu, nu)
        checks.append(
            (uniq == (len(bf.matchings) == 1), f"uniqueness vs enumeration (k={k})")
        )
    for trial in range(8):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(2, 5))
        mu, nu = _random_general_pair(rng, m, n, 2)
        sol = exact_ot.solve_w2(mu, nu)
        bf = exact_ot.brute_force_w2(mu, nu)
        checks.append(
            (
                abs(sol.w2_squared - bf.w2_squared) <= 1e-9,
                f"general solve vs vertex enumeration (m={m}, n={n})",
            )
        )
    return checks


def _suite_certify() -> List[Tuple[bool, str]]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=202))
    checks = []
    for trial in range(10):
        k = int(rng.integers(2, 6))
        mu, nu = _random_uniform_pair(rng, k, 2)
        sol = exact_ot.solve_w2(mu, nu)
        res = certify.check_cyclical_monotonicity(
            mu.points, nu.points, sol.matching
        )
        checks.append((res.monotone, f"optimal matching is monotone (k={k})"))
        lam = certify.max_quadratic_lambda(mu.points, nu.points, sol.matching)
        uniq = exact_ot.is_unique_optimal(mu, nu)
        checks.append(
            ((lam > 0) == uniq, f"max lambda positive iff unique (k={k})")
        )
        if lam > 0:
            cert = certify.solve_potentials(
                mu.points,
                nu.points,
                certify.ResidualFunction.quadratic_y(lam * 0.5),
                sol.matching,
            )
            ok = cert.valid and _potentials_hold(
                mu.points, nu.points, sol.matching, cert, lam * 0.5
            )
            checks.append((ok, f"potentials satisfy the inequalities (k={k})"))
    # a deliberately swapped matching on a spread-out instance is not monotone
    mu, nu = _random_uniform_pair(rng, 2, 2)
    sol = exact_ot.solve_w2(mu, nu)
    if exact_ot.is_unique_optimal(mu, nu):
        swapped = exact_ot.Matching((sol.matching.perm[1], sol.matching.perm[0]))
        res = certify.check_cyclical_monotonicity(mu.points, nu.points, swapped)
        checks.append((not res.monotone, "swapped matching fails monotonicity"))
    return checks


def _potentials_hold(px, py, matching, cert, lam) -> bool:
    X = np.asarray(px)
    Y = np.asarray(py)[list(matching.perm)]
    F = certify.ResidualFunction.quadratic_y(lam).values(X, Y)
    G = X @ Y.T
    lhs = np.diag(G)[:, None] - G
    slack = lhs - (cert.phi[:, None] - cert.phi[None, :]) - F
    np.fill_diagonal(slack, 0.0)
    return bool(slack.min() >= -1e-9)


def _suite_robustness() -> List[Tuple[bool, str]]:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=303))
    checks = []
    for trial in range(6):
        mu, nu = _random_uniform_pair(rng, 2, 2)
        sol = exact_ot.solve_w2(mu, nu)
        X = mu.points
        Ym = nu.points[list(sol.matching.perm)]
        r_hat = robustness.estimate_r(X, Ym)
        r_true = _two_cycle_radius(X, Ym)
        ok = abs(r_hat - r_true) <= 5e-4 or (
            np.isinf(r_true) and r_hat >= _config_diameter(X, Ym) - 1e-9
        )
        checks.append((ok, f"k=2 radius matches closed form (trial {trial})"))
        lam = certify.max_quadratic_lambda(X, Ym)
        if lam > 0:
            cert = certify.solve_potentials(
                X, Ym, certify.ResidualFunction.quadratic_y(lam)
            )
            lb = robustness.robustness_lb_general(X, Ym, cert)
            checks.append((lb <= r_hat + 5e-4, f"lb_general <= r_hat (trial {trial})"))
    prof = robustness.g_profile(
        get_preset("cross").mu.points,
        get_preset("cross").nu.points,
        [0.5, 1.0, 1.5],
    )
    expect = (6.0, 8.0, 8.0)
    ok = all(abs(a - b) <= 1e-6 for a, b in zip(prof.values, expect))
    checks.append((ok, f"cross G profile {prof.values} vs {expect}"))
    return checks


def _config_diameter(X, Ym) -> float:
    pts = np.vstack([X, Ym])
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


def _two_cycle_radius(X, Ym) -> float:
    """Closed-form robustness radius for k = 2 matched pairs."""
    delta = (
        ((X[0] - Ym[1]) ** 2).sum()
        + ((X[1] - Ym[0]) ** 2).sum()
        - ((X[0] - Ym[0]) ** 2).sum()
        - ((X[1] - Ym[1]) ** 2).sum()
    )
    g = float(np.sqrt((((X[0] - X[1]) + (Ym[0] - Ym[1])) ** 2).sum()))
    disc = g * g - 2.0 * delta
    if disc < 0 or g == 0.0:
        return np.inf  # the cycle never wins at any perturbation size
    s_star = (g - np.sqrt(disc)) / 2.0
    return s_star / 2.0


def _suite_smoothing() -> List[Tuple[bool, str]]:
    checks = []
    mu = uniform_measure([[0.0, 0.0], [0.0, 0.25]])
    kern = smoothing.SmoothingKernel.gaussian(0.3)
    a1 = smoothing.sample_smoothed(mu, kern, 64, seed=7)
    a2 = smoothing.sample_smoothed(mu, kern, 64, seed=7)
    checks.append(
        (np.array_equal(a1.points, a2.points), "sampling is seed-deterministic")
    )
    a3 = smoothing.sample_smoothed(mu, kern, 64, seed=8)
    checks.append((not np.array_equal(a1.points, a3.points), "seeds differ"))
    shifted = smoothing.PointCloud(points=a1.points + np.array([2.0, 0.0]), seed=0)
    w = smoothing.empirical_w2(a1, shifted)
    checks.append((abs(w - 2.0) <= 1e-9, f"translation distance {w} vs 2.0"))
    checks.append(
        (smoothing.empirical_w2(a1, a1) == 0.0, "identical clouds give exactly 0")
    )
    trunc = smoothing.SmoothingKernel.truncated_gaussian(0.5, 0.6)
    z = trunc.sample(np.random.default_rng(11), 2000, 3)
    checks.append(
        (
            float(np.sqrt((z**2).sum(axis=1)).max()) <= 0.6 + 1e-12,
            "truncated samples stay inside the cutoff",
        )
    )
    est1 = smoothing.got_estimate(mu, mu, kern, n=32, trials=3, seed=5)
    est2 = smoothing.got_estimate(mu, mu, kern, n=32, trials=3, seed=5)
    checks.append((est1 == est2, "got_estimate is deterministic"))
    return checks


def _suite_cli() -> List[Tuple[bool, str]]:
    # import here: cli imports selfcheck for its subcommand
    from . import cli

    checks = []
    buf1, buf2 = io.StringIO(), io.StringIO()
    args = [
        "sweep",
        "--preset",
        "cross",
        "--sigma-grid",
        "0.1:0.4:3:log",
        "--n",
        "24",
        "--trials",
        "2",
        "--seed",
        "3",
        "--out",
        "-",
    ]
    code1 = cli.main(args, stdout=buf1)
    code2 = cli.main(args, stdout=buf2)
    checks.append((code1 == 0 and code2 == 0, "sweep exits 0"))
    checks.append((buf1.getvalue() == buf2.getvalue(), "sweep output is byte-stable"))
    buf = io.StringIO()
    code = cli.main(["solve", "--preset", "cross"], stdout=buf)
    text = buf.getvalue()
    checks.append(
        (
            code == 0 and "w2_squared=4.0" in text and "unique=false" in text,
            "solve reports the cross instance",
        )
    )
    return checks


SUITES: Dict[str, Callable[[], List[Tuple[bool, str]]]] = {
    "exact-ot": _suite_exact_ot,
    "certify": _suite_certify,
    "robustness": _suite_robustness,
    "smoothing": _suite_smoothing,
    "cli": _suite_cli,
}

# the certify suite checks the uniqueness <-> certificate equivalence
_SUITE_ALIASES = {"equivalence": "certify"}


def run_suites(names=None, out=None) -> bool:
    """Run the named suites (all by default); print one line per suite.

    Returns True when every check in every selected suite passed.
    """
    import sys

    out = out or sys.stdout
    if names:
        names = [_SUITE_ALIASES.get(n, n) for n in names]
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise UsageError(
                f"unknown suite(s) {', '.join(unknown)}; "
                f"available: {', '.join(SUITES)}"
            )
        selected = {n: SUITES[n] for n in names}
    else:
        selected = dict(SUITES)

    all_ok = True
    for name, fn in selected.items():
        t0 = time.perf_counter()
        results = fn()
        dt = time.perf_counter() - t0
        bad = [msg for ok, msg in results if not ok]
        status = "PASS" if not bad else "FAIL"
        all_ok &= not bad
        print(f"suite {name}: {status} ({len(results)} checks, {dt:.2f}s)", file=out)
        for msg in bad:
            print(f"  failed: {msg}", file=out)
    return all_ok
