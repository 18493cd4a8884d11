"""Certificates for optimal matchings: cyclical monotonicity and potentials.

A matched configuration (x_i, y_i) is cyclically monotone iff no relabeling
cycle lowers the total squared cost, i.e. the complete digraph with arc
weights  w(i -> j) = ||x_i - y_j||^2 - ||x_i - y_i||^2  has no negative
cycle.  The strong (inner-product) form asks for potentials phi with

    <x_i, y_i - y_j>  >=  phi(y_i) - phi(y_j) + f(i, j)

for a residual f; such phi exist iff the digraph with arc weights
w(i -> j) = <x_i, y_i - y_j> - f(i, j) has no negative cycle, and then
shortest-path distances from any root give phi (up to a constant).  Both
checks run Bellman-Ford with negative-cycle extraction; extracted cycles
with total weight >= -1e-12 are treated as zero-weight float dust, so exact
ties still certify.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import UsageError

__all__ = [
    "ResidualFunction",
    "MonotonicityResult",
    "PotentialCertificate",
    "check_cyclical_monotonicity",
    "solve_potentials",
    "max_quadratic_lambda",
    "check_convex_smooth",
    "implied_convexity_constants",
]

_CYCLE_TOL = 1e-12  # extracted cycles above this (negated) weight are dust
_LAMBDA_CAP = 1e6
_LAMBDA_REL_TOL = 1e-10


# ---------------------------------------------------------------------------
# residual functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualFunction:
    """Residual f(i, j) entering the strong-implementability inequality.

    Kinds:
      * "zero":           f = 0 (plain cyclical monotonicity).
      * "quadratic_y":    f(i, j) = (lam / 2) ||y_i - y_j||^2, lam > 0.
      * "convex_smooth":  the residual implied by T = grad(psi) with psi
                          alpha-strongly convex and beta-smooth, 0 < alpha < beta:
                          f(i, j) = (||dx||^2 + alpha*beta*||dy||^2
                                     - 2*alpha*<dy, dx>) / (2*(beta - alpha)).
      * "table":          explicit symmetric k x k table, zero diagonal,
                          positive off-diagonal.
    """

    kind: str
    lam: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    table: Optional[np.ndarray] = None

    # -- constructors --------------------------------------------------
    @staticmethod
    def zero() -> "ResidualFunction":
        return ResidualFunction(kind="zero")

    @staticmethod
    def quadratic_y(lam: float) -> "ResidualFunction":
        if not (lam > 0):
            raise UsageError(f"quadratic_y residual needs lam > 0, got {lam}")
        return ResidualFunction(kind="quadratic_y", lam=float(lam))

    @staticmethod
    def convex_smooth(alpha: float, beta: float) -> "ResidualFunction":
        if not (0 < alpha < beta):
            raise UsageError(
                f"convex_smooth residual needs 0 < alpha < beta, got "
                f"alpha={alpha}, beta={beta}"
            )
        return ResidualFunction(kind="convex_smooth", alpha=float(alpha), beta=float(beta))

    @staticmethod
    def from_table(table) -> "ResidualFunction":
        arr = np.asarray(table, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError(f"residual table must be square, got {arr.shape}")
        if np.abs(np.diag(arr)).max(initial=0.0) > 0:
            raise UsageError("residual table must have zero diagonal")
        if arr.shape[0] > 1:
            off = arr[~np.eye(arr.shape[0], dtype=bool)]
            if off.min() <= 0:
                raise UsageError("residual table must be positive off-diagonal")
        if np.abs(arr - arr.T).max(initial=0.0) > 1e-12:
            raise UsageError("residual table must be symmetric")
        arr = arr.copy()
        arr.flags.writeable = False
        return ResidualFunction(kind="table", table=arr)

    # -- evaluation ----------------------------------------------------
    def values(self, points_x: np.ndarray, points_y: np.ndarray) -> np.ndarray:
        """The k x k matrix f(i, j) for matched pairs (x_i, y_i)."""
        k = points_x.shape[0]
        if self.kind == "zero":
            return np.zeros((k, k))
        if self.kind == "quadratic_y":
            return 0.5 * self.lam * _pairwise_sq(points_y)
        if self.kind == "convex_smooth":
            dxx = _pairwise_sq(points_x)
            dyy = _pairwise_sq(points_y)
            cross = _pairwise_ip(points_y, points_x)  # <y_i - y_j, x_i - x_j>
            return (dxx + self.alpha * self.beta * dyy - 2.0 * self.alpha * cross) / (
                2.0 * (self.beta - self.alpha)
            )
        if self.kind == "table":
            if self.table.shape != (k, k):
                raise UsageError(
                    f"residual table shape {self.table.shape} does not match k={k}"
                )
            return np.asarray(self.table)
        raise UsageError(f"unknown residual kind {self.kind!r}")


def _pairwise_sq(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _pairwise_ip(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """M[i, j] = <a_i - a_j, b_i - b_j>."""
    G = a @ b.T
    d = np.diag(G)
    return d[:, None] + d[None, :] - G - G.T


# ---------------------------------------------------------------------------
# Bellman-Ford with negative-cycle extraction
# ---------------------------------------------------------------------------

def _negative_cycle(W: np.ndarray):
    """Find a cycle with total weight < -_CYCLE_TOL in a complete digraph.

    W is (k, k) with +inf on the diagonal.  Returns (cycle, weight, dist):
    cycle is a node list in arc order (or None), weight its exact arc-weight
    sum, and dist the shortest-path distances from node 0 (valid only when
    no negative cycle was found).  Relaxations below 1e-15 are ignored so
    float dust on exactly-zero cycles cannot masquerade as negative.
    """
    k = W.shape[0]
    if k == 1:
        return None, None, np.zeros(1)

    dist = W[0].copy()
    dist[0] = 0.0
    pred = np.zeros(k, dtype=np.intp)
    improved = np.zeros(k, dtype=bool)

    for _ in range(2 * k):
        cand = dist[:, None] + W
        new = cand.min(axis=0)
        arg = cand.argmin(axis=0)
        improved = new < dist - 1e-15
        if not improved.any():
            return None, None, dist
        dist[improved] = new[improved]
        pred[improved] = arg[improved]

    # still relaxing after 2k rounds: walk predecessors into the cycle
    node = int(np.flatnonzero(improved)[0])
    for _ in range(2 * k):
        node = int(pred[node])
    cycle = [node]
    cur = int(pred[node])
    while cur != node:
        cycle.append(cur)
        cur = int(pred[cur])
    cycle.reverse()  # pred chains point backward; reverse into arc order
    weight = float(sum(W[cycle[t], cycle[(t + 1) % len(cycle)]] for t in range(len(cycle))))
    if weight < -_CYCLE_TOL:
        return cycle, weight, None
    return None, None, dist  # dust cycle; distances are converged enough


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityResult:
    monotone: bool
    violating_cycle: Optional[Tuple[int, ...]] = None
    cycle_weight: Optional[float] = None


@dataclass(frozen=True)
class PotentialCertificate:
    """Outcome of a strong-implementability check.

    When valid, phi satisfies
    <x_i, y_i - y_j> >= phi[i] - phi[j] + f(i, j) for all i != j
    (phi is indexed by atom, phi[0] = 0).  When invalid, violating_cycle
    is a cycle along which the inequalities cannot all hold.
    """

    valid: bool
    residual: ResidualFunction
    phi: Optional[np.ndarray] = None
    violating_cycle: Optional[Tuple[int, ...]] = None


def _matched_pairs(points_x, points_y, matching):
    X = np.asarray(points_x, dtype=np.float64)
    Y = np.asarray(points_y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape != Y.shape:
        raise UsageError(
            f"matched point arrays must share shape (k, d), got {X.shape} vs {Y.shape}"
        )
    if matching is not None:
        perm = np.asarray(
            matching.perm if hasattr(matching, "perm") else matching, dtype=np.intp
        )
        if sorted(perm.tolist()) != list(range(X.shape[0])):
            raise UsageError("matching is not a permutation")
        Y = Y[perm]
    return X, Y


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_cyclical_monotonicity(
    points_x, points_y, matching=None
) -> MonotonicityResult:
    """Is the matched configuration cyclically monotone for squared cost?

    With matching=None the arrays are taken as already matched pairs
    (x_i with y_i); otherwise y is relabeled by the matching first.
    """
    X, Y = _matched_pairs(points_x, points_y, matching)
    k = X.shape[0]
    if k == 1:
        return MonotonicityResult(monotone=True)
    # w(i -> j) = ||x_i - y_j||^2 - ||x_i - y_i||^2
    diff = X[:, None, :] - Y[None, :, :]
    costs = np.einsum("ijk,ijk->ij", diff, diff)
    W = costs - np.diag(costs)[:, None]
    np.fill_diagonal(W, np.inf)
    cycle, weight, _ = _negative_cycle(W)
    if cycle is None:
        return MonotonicityResult(monotone=True)
    return MonotonicityResult(
        monotone=False, violating_cycle=tuple(cycle), cycle_weight=weight
    )


def solve_potentials(
    points_x, points_y, residual: ResidualFunction, matching=None
) -> PotentialCertificate:
    """Find potentials phi certifying strong implementability with residual f.

    Builds the complete digraph with w(i -> j) = <x_i, y_i - y_j> - f(i, j)
    and runs Bellman-Ford from node 0.  No negative cycle: phi = -dist is a
    valid potential.  Negative cycle: no phi exists; the cycle is returned.
    """
    X, Y = _matched_pairs(points_x, points_y, matching)
    k = X.shape[0]
    if k == 1:
        return PotentialCertificate(valid=True, residual=residual, phi=np.zeros(1))

    F = residual.values(X, Y)
    G = X @ Y.T
    W = np.diag(G)[:, None] - G - F  # <x_i, y_i> - <x_i, y_j> - f(i, j)
    np.fill_diagonal(W, np.inf)
    cycle, _, dist = _negative_cycle(W)
    if cycle is not None:
        return PotentialCertificate(
            valid=False, residual=residual, violating_cycle=tuple(cycle)
        )
    phi = -dist
    phi[phi == 0.0] = 0.0  # normalize -0.0 (phi[0] is pinned to zero)
    phi.flags.writeable = False
    return PotentialCertificate(valid=True, residual=residual, phi=phi)


def max_quadratic_lambda(points_x, points_y, matching=None) -> float:
    """Largest lam such that the quadratic-in-y residual still certifies.

    Bisection to relative tolerance 1e-10, bracket grown by doubling from 1
    and capped at 1e6.  Returns 0.0 exactly when no positive lam certifies
    (equivalently: the optimal matching is not unique / has a tied cycle).
    """
    X, Y = _matched_pairs(points_x, points_y, matching)

    def feasible(lam: float) -> bool:
        return solve_potentials(X, Y, ResidualFunction.quadratic_y(lam)).valid

    lo, hi = 0.0, 1.0
    if feasible(hi):
        while hi < _LAMBDA_CAP:
            lo = hi
            hi = min(hi * 2.0, _LAMBDA_CAP)
            if not feasible(hi):
                break
        else:
            pass
        if hi >= _LAMBDA_CAP and feasible(_LAMBDA_CAP):
            return _LAMBDA_CAP
    while hi - lo > _LAMBDA_REL_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def check_convex_smooth(
    points_x, points_y, alpha: float, beta: float, matching=None
) -> PotentialCertificate:
    """Certify the matching as the gradient of an alpha-strongly-convex,
    beta-smooth potential (0 < alpha < beta required)."""
    residual = ResidualFunction.convex_smooth(alpha, beta)
    return solve_potentials(points_x, points_y, residual, matching=matching)


def implied_convexity_constants(
    lam_xx: float, lam_xy: float, lam_yy: float
) -> Tuple[float, float]:
    """Convert mixed quadratic-residual coefficients to (alpha, beta).

    A residual of the form
        f = (lam_xx ||dx||^2 + lam_yy ||dy||^2 - 2 lam_xy <dy, dx>) / 2
    matches the convex_smooth family iff lam_xy^2 + lam_xy = lam_xx * lam_yy
    (within 1e-9, scale-relative); then alpha = lam_xy / lam_xx and
    beta = lam_yy / lam_xy.
    """
    for name, val in (("lam_xx", lam_xx), ("lam_xy", lam_xy), ("lam_yy", lam_yy)):
        if not (val > 0):
            raise UsageError(f"{name} must be positive, got {val}")
    lhs = lam_xy * lam_xy + lam_xy
    rhs = lam_xx * lam_yy
    if abs(lhs - rhs) > 1e-9 * max(1.0, abs(rhs)):
        raise UsageError(
            "coefficients are not consistent with a convex/smooth residual: "
            f"lam_xy^2 + lam_xy = {lhs} but lam_xx * lam_yy = {rhs}"
        )
    alpha = lam_xy / lam_xx
    beta = lam_yy / lam_xy
    if not (0 < alpha < beta):
        raise UsageError(
            f"implied constants are not ordered 0 < alpha < beta: ({alpha}, {beta})"
        )
    return float(alpha), float(beta)
