"""Robustness of an optimal matching to coherent support perturbations.

Each matched pair (x_i, y_i) may be shifted jointly by a vector alpha_i with
||alpha_i|| <= eps (both points of the pair move together, so the matched
cost is unchanged).  The matching is eps-robust when no relabeling along a
simple cycle sigma beats it after some such perturbation.  For a cycle with
pairs p_0, ..., p_{m-1} (p_m = p_0) the best-case decrease is

    D(alpha) = -Delta + 2 sum_i <alpha_i, g_i> - sum_i ||alpha_i - alpha_{i+1}||^2

where Delta = sum_i ||x_i - y_{i+1}||^2 - sum_i ||x_i - y_i||^2 >= 0 is the
unperturbed margin of the cycle and g_i = y_{i+1} - y_i + x_{i-1} - x_i.
D is concave; its maximum over the product of eps-balls is found by
projected gradient ascent (deterministic start along g plus random
restarts), and a positive maximum is returned as an explicit witness.

Only the found decreases are trusted: verification never reports a
violation without a feasible alpha achieving D > tolerance, and estimates
never exceed an actually evaluated D.  Cycles whose linear upper bound
-Delta + 2 eps sum_i ||g_i|| is nonpositive are provably safe and skipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from .certify import ResidualFunction, _matched_pairs, max_quadratic_lambda
from .certify import check_convex_smooth
from .errors import CapabilityError, UsageError

__all__ = [
    "MAX_VERIFY_ATOMS",
    "RobustnessWitness",
    "VerifyResult",
    "GProfile",
    "RobustnessReport",
    "verify_eps_robust",
    "estimate_r",
    "estimate_G",
    "g_profile",
    "robustness_lb_general",
    "robustness_lb_convex",
    "robustness_lb_simplified",
    "robustness_report",
]

MAX_VERIFY_ATOMS = 8
_VIOLATION_TOL = 1e-9  # decreases at or below this count as robust
_PREFILTER_TOL = 1e-12
_RESTARTS = 16
_ITERS = 200
_POLISH_ITERS = 50
_R_BISECTION_TOL = 1e-4


# ---------------------------------------------------------------------------
# cycle enumeration
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cycles_by_length(k: int):
    """Simple directed cycles on 0..k-1, canonical up to rotation.

    Each cycle is listed once with its smallest index first; for length >= 3
    both orientations appear (they relabel differently).  Returns a tuple of
    (m, cycles) with cycles an (count, m) int array, ascending m.
    """
    groups = []
    for m in range(2, k + 1):
        rows = []
        for combo in itertools.combinations(range(k), m):
            rest = combo[1:]
            for perm in itertools.permutations(rest):
                rows.append((combo[0],) + perm)
        if rows:
            arr = np.asarray(rows, dtype=np.intp)
            arr.flags.writeable = False
            groups.append((m, arr))
    return tuple(groups)


class _PairContext:
    """Per-configuration precomputation shared across eps values."""

    def __init__(self, X: np.ndarray, Ym: np.ndarray):
        self.X = X
        self.Ym = Ym
        self.k = X.shape[0]
        self.d = X.shape[1]
        self.groups = []
        for m, cycles in _cycles_by_length(self.k):
            Xc = X[cycles]  # (C, m, d)
            Yc = Ym[cycles]
            ynext = np.roll(Yc, -1, axis=1)
            delta = (
                ((Xc - ynext) ** 2).sum(axis=(1, 2))
                - ((Xc - Yc) ** 2).sum(axis=(1, 2))
            )
            g = ynext - Yc + np.roll(Xc, 1, axis=1) - Xc
            gnorm = np.sqrt((g**2).sum(axis=2))  # (C, m)
            self.groups.append(
                {
                    "m": m,
                    "cycles": cycles,
                    "delta": delta,
                    "g": g,
                    "gnorm": gnorm,
                    "gnorm_sum": gnorm.sum(axis=1),
                }
            )

    def diameter(self) -> float:
        pts = np.vstack([self.X, self.Ym])
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff**2).sum(axis=2)).max())


@dataclass(frozen=True)
class RobustnessWitness:
    """A feasible perturbation achieving the reported decrease.

    cycle lists the matched-pair indices in relabeling order; alphas[t] is
    the shift applied to pair cycle[t] (norms bounded by the eps in force).
    """

    cycle: Tuple[int, ...]
    alphas: np.ndarray
    decrease: float


def _evaluate_decrease(delta, g, alpha):
    """D(alpha) batched: alpha (C, R, m, d), g (C, m, d), delta (C,)."""
    lin = 2.0 * (alpha * g[:, None]).sum(axis=(2, 3))
    diff = alpha - np.roll(alpha, -1, axis=2)
    quad = (diff**2).sum(axis=(2, 3))
    return -delta[:, None] + lin - quad


def _max_decrease(
    ctx: _PairContext,
    eps: float,
    seed: int,
    restarts: int = _RESTARTS,
    iters: int = _ITERS,
    stop_above: Optional[float] = None,
):
    """Best decrease found over all cycles and feasible perturbations.

    Returns (best, witness, spread): best is an exactly evaluated D at a
    feasible point (alpha = 0 is always considered, so best >= -min Delta);
    spread is best-minus-worst across restart finals for the winning cycle
    (0 when the winner never entered gradient ascent).
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    best = -np.inf
    best_witness = None
    spread = 0.0

    # alpha = 0 baseline: decrease is -Delta, feasible for every eps
    for grp in ctx.groups:
        i = int(np.argmin(grp["delta"]))
        val = -float(grp["delta"][i])
        if val > best:
            best = val
            cyc = tuple(int(t) for t in grp["cycles"][i])
            best_witness = RobustnessWitness(
                cycle=cyc, alphas=np.zeros((grp["m"], ctx.d)), decrease=val
            )
            spread = 0.0
    if stop_above is not None and best > stop_above:
        return best, best_witness, spread

    if eps <= 0:
        return best, best_witness, spread

    for grp in ctx.groups:
        m = grp["m"]
        ub = -grp["delta"] + 2.0 * eps * grp["gnorm_sum"]
        keep = np.flatnonzero(ub > _PREFILTER_TOL)
        if keep.size == 0:
            continue
        delta = grp["delta"][keep]
        g = grp["g"][keep]
        gnorm = grp["gnorm"][keep]
        C = keep.size
        d = ctx.d

        # restart 0: straight to the boundary along g; others random in ball
        R = restarts
        alpha = np.empty((C, R, m, d))
        unit = g / np.maximum(gnorm, 1e-300)[:, :, None]
        alpha[:, 0] = eps * unit
        if R > 1:
            w = rng.standard_normal((C, R - 1, m, d))
            wn = np.sqrt((w**2).sum(axis=3, keepdims=True))
            radii = eps * rng.random((C, R - 1, m, 1)) ** (1.0 / d)
            alpha[:, 1:] = w / np.maximum(wn, 1e-300) * radii

        bestD = _evaluate_decrease(delta, g, alpha)
        best_alpha = alpha.copy()

        group_peak = bestD.max()
        # phase 1: spec step 0.25*eps; phase 2: curvature-safe polish (1/L, L=8)
        for phase, (phase_step, phase_iters) in enumerate(
            ((0.25 * eps, iters), (0.125, _POLISH_ITERS))
        ):
            if phase == 1:  # polish resumes from the incumbents
                alpha = best_alpha.copy()
            stall = 0
            for _ in range(phase_iters):
                grad = 2.0 * g[:, None] - 2.0 * (
                    2.0 * alpha - np.roll(alpha, 1, axis=2) - np.roll(alpha, -1, axis=2)
                )
                alpha += phase_step * grad
                norms = np.sqrt((alpha**2).sum(axis=3, keepdims=True))
                np.multiply(
                    alpha, np.minimum(1.0, eps / np.maximum(norms, 1e-300)), out=alpha
                )
                D = _evaluate_decrease(delta, g, alpha)
                upd = D > bestD
                if upd.any():
                    bestD[upd] = D[upd]
                    best_alpha[upd] = alpha[upd]
                peak = bestD.max()
                if stop_above is not None and peak > stop_above:
                    best, best_witness, spread = _harvest(
                        ctx, grp, keep, bestD, best_alpha, best, best_witness, spread
                    )
                    return best, best_witness, spread
                if peak > group_peak + 1e-14:
                    group_peak = peak
                    stall = 0
                else:
                    stall += 1
                    if stall >= 6:
                        break

        best, best_witness, spread = _harvest(
            ctx, grp, keep, bestD, best_alpha, best, best_witness, spread
        )
        if stop_above is not None and best > stop_above:
            return best, best_witness, spread

    return best, best_witness, spread


def _harvest(ctx, grp, keep, bestD, best_alpha, best, best_witness, spread):
    """Fold a group's PGA results into the global best."""
    per_cycle = bestD.max(axis=1)
    i = int(np.argmax(per_cycle))
    val = float(per_cycle[i])
    if val > best:
        r = int(np.argmax(bestD[i]))
        cyc = tuple(int(t) for t in grp["cycles"][keep[i]])
        best_witness = RobustnessWitness(
            cycle=cyc, alphas=best_alpha[i, r].copy(), decrease=val
        )
        spread = float(bestD[i].max() - bestD[i].min())
        best = val
    return best, best_witness, spread


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyResult:
    robust: bool
    eps: float
    best_decrease: float
    witness: Optional[RobustnessWitness] = None


def _context(points_x, points_y, matching) -> _PairContext:
    X, Ym = _matched_pairs(points_x, points_y, matching)
    if X.shape[0] > MAX_VERIFY_ATOMS:
        raise CapabilityError(
            f"cycle search supports k <= {MAX_VERIFY_ATOMS} matched pairs, "
            f"got {X.shape[0]}"
        )
    return _PairContext(X, Ym)


def verify_eps_robust(
    points_x, points_y, eps: float, matching=None, seed: int = 0
) -> VerifyResult:
    """Decide eps-robustness of the matched configuration (k <= 8).

    Robust means no simple-cycle relabeling achieves a cost decrease above
    1e-9 under any perturbation with ||alpha_i|| <= eps.  A non-robust
    verdict always carries an explicit feasible witness.
    """
    if not (eps >= 0) or not np.isfinite(eps):
        raise UsageError(f"eps must be finite and >= 0, got {eps}")
    ctx = _context(points_x, points_y, matching)
    best, witness, _ = _max_decrease(ctx, eps, seed, stop_above=_VIOLATION_TOL)
    robust = best <= _VIOLATION_TOL
    return VerifyResult(
        robust=robust,
        eps=float(eps),
        best_decrease=float(best),
        witness=None if robust else witness,
    )


def estimate_r(
    points_x, points_y, matching=None, seed: int = 0, tol: float = _R_BISECTION_TOL
) -> float:
    """Estimated robustness radius: the largest verified-robust eps.

    Bisection over [0, diameter of the configuration] to absolute tolerance
    tol, returning the verified lower endpoint.  Configurations robust at the
    diameter itself (e.g. translations) return the diameter.
    """
    ctx = _context(points_x, points_y, matching)
    diam = ctx.diameter()
    if diam <= 0.0:
        return 0.0

    def robust_at(eps: float) -> bool:
        b, _, _ = _max_decrease(ctx, eps, seed, stop_above=_VIOLATION_TOL)
        return b <= _VIOLATION_TOL

    if robust_at(diam):
        return diam
    if not robust_at(0.0):
        return 0.0
    lo, hi = 0.0, diam
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if robust_at(mid):
            lo = mid
        else:
            hi = mid
    return lo


def estimate_G(points_x, points_y, M: float, matching=None, seed: int = 0) -> float:
    """Largest found cost decrease under perturbations of size at most M.

    Never overestimates: the value is D evaluated at an explicit feasible
    perturbation, clipped at 0 (G is 0 whenever the matching is M-robust).
    """
    if not (M >= 0) or not np.isfinite(M):
        raise UsageError(f"M must be finite and >= 0, got {M}")
    ctx = _context(points_x, points_y, matching)
    best, _, _ = _max_decrease(ctx, M, seed)
    return max(0.0, float(best))


@dataclass(frozen=True)
class GProfile:
    """G estimates over an ascending grid of perturbation sizes.

    values carry a running maximum (the true G is nondecreasing, so a later
    grid point may only raise earlier estimates' floor); raw_values are the
    per-point estimates before the carry; spreads give best-minus-worst
    restart finals for each winning cycle (an optimizer-noise scale).
    """

    grid: Tuple[float, ...]
    values: Tuple[float, ...]
    raw_values: Tuple[float, ...]
    spreads: Tuple[float, ...]
    cycles: Tuple[Optional[Tuple[int, ...]], ...]

    def second_differences(self) -> np.ndarray:
        v = np.asarray(self.values)
        return v[:-2] - 2.0 * v[1:-1] + v[2:]


def g_profile(points_x, points_y, grid, matching=None, seed: int = 0) -> GProfile:
    """Estimate G over an ascending grid of perturbation sizes M."""
    grid = [float(t) for t in grid]
    if not grid:
        raise UsageError("grid must be nonempty")
    if any(not np.isfinite(t) or t < 0 for t in grid):
        raise UsageError("grid values must be finite and >= 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly ascending")
    ctx = _context(points_x, points_y, matching)

    values, raws, spreads, cycles = [], [], [], []
    carry = 0.0
    for M in grid:
        bestv, witness, spread = _max_decrease(ctx, M, seed)
        raw = max(0.0, float(bestv))
        carry = max(carry, raw)
        values.append(carry)
        raws.append(raw)
        spreads.append(float(spread))
        cycles.append(witness.cycle if witness is not None and raw > 0 else None)
    return GProfile(
        grid=tuple(grid),
        values=tuple(values),
        raw_values=tuple(raws),
        spreads=tuple(spreads),
        cycles=tuple(cycles),
    )


# ---------------------------------------------------------------------------
# certified lower bounds
# ---------------------------------------------------------------------------

def _pair_distances(X, Ym):
    dx = np.sqrt(_sq(X))
    dy = np.sqrt(_sq(Ym))
    return dx, dy


def _sq(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _min_over_pairs(values, denom_ok):
    iu = np.triu_indices(values.shape[0], k=1)
    vals = values[iu]
    ok = denom_ok[iu]
    if not ok.any():
        raise UsageError("no pair yields a finite bound (coincident pairs only)")
    return float(vals[ok].min())


def robustness_lb_general(points_x, points_y, certificate, matching=None) -> float:
    """Certified robustness lower bound from any valid positive residual:

        R >= 1/2 * min_{i != j} f(i, j) / (||x_i - x_j|| + ||y_i - y_j||).

    Requires a valid PotentialCertificate whose residual is positive
    off-diagonal (kind != "zero").  Pairs with coincident x and y positions
    impose no constraint and are skipped.
    """
    if not certificate.valid:
        raise UsageError("certificate is not valid; no lower bound applies")
    if certificate.residual.kind == "zero":
        raise UsageError("lower bound needs a positive residual, not kind='zero'")
    X, Ym = _matched_pairs(points_x, points_y, matching)
    if X.shape[0] < 2:
        raise UsageError("lower bound needs at least 2 matched pairs")
    F = certificate.residual.values(X, Ym)
    dx, dy = _pair_distances(X, Ym)
    denom = dx + dy
    ok = denom > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ok, F / np.where(ok, denom, 1.0), np.inf)
    return 0.5 * _min_over_pairs(ratio, ok)


def robustness_lb_convex(
    points_x, points_y, alpha: float, beta: float, matching=None, certificate=None
) -> float:
    """Certified lower bound specialized to a convex/smooth certificate:

        R >= 1/2 * min_{i != j} max(||dx||^2 / beta, alpha ||dy||^2)
                             / (||dx|| + ||dy||).
    """
    if certificate is None:
        certificate = check_convex_smooth(points_x, points_y, alpha, beta, matching)
    if not certificate.valid:
        raise UsageError(
            "configuration is not certified convex/smooth for these constants"
        )
    X, Ym = _matched_pairs(points_x, points_y, matching)
    if X.shape[0] < 2:
        raise UsageError("lower bound needs at least 2 matched pairs")
    dx, dy = _pair_distances(X, Ym)
    numer = np.maximum(dx**2 / beta, alpha * dy**2)
    denom = dx + dy
    ok = denom > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ok, numer / np.where(ok, denom, 1.0), np.inf)
    return 0.5 * _min_over_pairs(ratio, ok)


def robustness_lb_simplified(
    points_x, points_y, alpha: float, beta: float, matching=None, certificate=None
) -> float:
    """Closed-form relaxation of robustness_lb_convex:

        R >= 1/2 * min_{i != j} max( alpha ||dx|| / (beta (1 + alpha)),
                                     alpha ||dy|| / (1 + beta) ).

    Pair by pair this never exceeds robustness_lb_convex (each branch lower-
    bounds the corresponding ratio there), so it inherits its soundness.
    """
    if certificate is None:
        certificate = check_convex_smooth(points_x, points_y, alpha, beta, matching)
    if not certificate.valid:
        raise UsageError(
            "configuration is not certified convex/smooth for these constants"
        )
    X, Ym = _matched_pairs(points_x, points_y, matching)
    if X.shape[0] < 2:
        raise UsageError("lower bound needs at least 2 matched pairs")
    dx, dy = _pair_distances(X, Ym)
    term = np.maximum(alpha * dx / (beta * (1.0 + alpha)), alpha * dy / (1.0 + beta))
    ok = (dx + dy) > 1e-300
    vals = np.where(ok, term, np.inf)
    return 0.5 * _min_over_pairs(vals, ok)


# ---------------------------------------------------------------------------
# composite report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    """Bounds and estimates for one matched configuration."""

    lb_general: float
    lb_convex: Optional[float] = None
    lb_simplified: Optional[float] = None
    r_hat: Optional[float] = None
    max_lambda: Optional[float] = None
    method_notes: Tuple[str, ...] = ()


def robustness_report(
    points_x,
    points_y,
    matching=None,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
    with_r_hat: bool = False,
    seed: int = 0,
) -> RobustnessReport:
    """Assemble lower bounds (and optionally the search estimate r_hat).

    lb_general uses the largest feasible quadratic-in-y residual; when no
    positive residual certifies (tied optimal matchings) the bound is 0.
    lb_convex / lb_simplified require explicit alpha, beta and a valid
    convex/smooth certificate.  r_hat runs the cycle search (k <= 8).
    """
    from .certify import solve_potentials  # local import to keep API surface tidy

    X, Ym = _matched_pairs(points_x, points_y, matching)
    notes = []

    lam = max_quadratic_lambda(X, Ym)
    if lam > 0:
        cert = solve_potentials(X, Ym, ResidualFunction.quadratic_y(lam))
        lb_gen = robustness_lb_general(X, Ym, cert)
        notes.append(f"lb_general from quadratic residual at lambda={lam:.6g}")
    else:
        lb_gen = 0.0
        notes.append("no positive residual certifies (tied matching); lb_general=0")

    lb_cvx = lb_simp = None
    if alpha is not None or beta is not None:
        if alpha is None or beta is None:
            raise UsageError("alpha and beta must be supplied together")
        cert = check_convex_smooth(X, Ym, alpha, beta)
        if cert.valid:
            lb_cvx = robustness_lb_convex(X, Ym, alpha, beta, certificate=cert)
            lb_simp = robustness_lb_simplified(X, Ym, alpha, beta, certificate=cert)
        else:
            notes.append(
                f"convex/smooth certificate invalid for alpha={alpha}, beta={beta}"
            )

    r_hat = None
    if with_r_hat:
        r_hat = estimate_r(X, Ym, seed=seed)
        notes.append("r_hat from cycle search (bisection, abs tol 1e-4)")

    return RobustnessReport(
        lb_general=lb_gen,
        lb_convex=lb_cvx,
        lb_simplified=lb_simp,
        r_hat=r_hat,
        max_lambda=float(lam),
        method_notes=tuple(notes),
    )
