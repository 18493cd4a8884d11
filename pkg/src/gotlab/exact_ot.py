"""Exact quadratic-cost optimal transport between discrete measures.

Solves min_pi sum_ij pi_ij ||x_i - y_j||^2 exactly.  Uniform measures with
equally many atoms go through the assignment kernel (gotlab.lap); general
marginals go through the transportation simplex (gotlab._simplex).  Reported
``w2_squared`` is the optimal value of that program, i.e. W2 squared.

Also provides desk-scale ground truth (brute_force_w2), an exact uniqueness
test for the optimal plan, and the cost of the second-best perfect matching.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import lap
from ._simplex import solve_transport
from .errors import CapabilityError, UsageError
from .measures import DiscreteMeasure

__all__ = [
    "Matching",
    "TransportPlan",
    "OTSolution",
    "BruteForceResult",
    "squared_distances",
    "solve_w2",
    "brute_force_w2",
    "is_unique_optimal",
    "second_best_matching_cost",
]

_SUPPORT_TOL = 1e-9  # marginal / optimality comparisons
_BRUTE_MAX_ATOMS = 8


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def squared_distances(a: np.ndarray, b: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Exact pairwise squared Euclidean distances, (len(a), len(b)).

    Computed as sums of coordinate-difference squares (never the expanded
    ||a||^2 - 2<a,b> + ||b||^2 form), so identical rows give exact zeros.
    Chunked over rows to bound peak memory at ~chunk*len(b)*dim floats.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    for lo in range(0, a.shape[0], chunk):
        hi = min(lo + chunk, a.shape[0])
        diff = a[lo:hi, None, :] - b[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Matching:
    """A perfect matching of k atom pairs: x_i is matched to y_perm[i]."""

    perm: Tuple[int, ...]

    def __post_init__(self):
        k = len(self.perm)
        if sorted(self.perm) != list(range(k)):
            raise ValueError(f"perm is not a permutation of 0..{k - 1}: {self.perm}")

    def __len__(self) -> int:
        return len(self.perm)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.perm, dtype=np.intp)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: mass masses[t] moves from atom rows[t] to cols[t]."""

    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    shape: Tuple[int, int]
    cost: float

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.intp)
        cols = np.ascontiguousarray(self.cols, dtype=np.intp)
        masses = np.ascontiguousarray(self.masses, dtype=np.float64)
        if not (rows.shape == cols.shape == masses.shape) or rows.ndim != 1:
            raise ValueError("rows/cols/masses must be 1-d arrays of equal length")
        if masses.size and masses.min() <= 0:
            raise ValueError("plan masses must be positive")
        for arr in (rows, cols, masses):
            arr.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "masses", masses)

    def __len__(self) -> int:
        return len(self.masses)

    def row_marginal(self) -> np.ndarray:
        out = np.zeros(self.shape[0])
        np.add.at(out, self.rows, self.masses)
        return out

    def col_marginal(self) -> np.ndarray:
        out = np.zeros(self.shape[1])
        np.add.at(out, self.cols, self.masses)
        return out

    def as_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.masses
        return out

    def to_matching(self) -> Optional[Matching]:
        """The underlying matching, or None if the plan is not a bijection."""
        m, n = self.shape
        if m != n or len(self.masses) != m:
            return None
        if len(set(self.rows.tolist())) != m or len(set(self.cols.tolist())) != n:
            return None
        perm = np.empty(m, dtype=np.intp)
        perm[self.rows] = self.cols
        return Matching(tuple(int(p) for p in perm))


@dataclass(frozen=True)
class OTSolution:
    """Optimal transport solve result; w2_squared is the optimal cost."""

    w2_squared: float
    plan: TransportPlan
    is_perfect_matching: bool
    matching: Optional[Matching] = None
    unique: Optional[bool] = None

    @property
    def w2(self) -> float:
        return float(np.sqrt(self.w2_squared))


@dataclass(frozen=True)
class BruteForceResult:
    """Exhaustive solve: optimal value plus every optimal vertex."""

    w2_squared: float
    plans: Tuple[TransportPlan, ...]
    matchings: Optional[Tuple[Matching, ...]] = None

    @property
    def unique(self) -> bool:
        return len(self.plans) == 1


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _check_dims(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if mu.dim != nu.dim:
        raise UsageError(f"dimension mismatch: {mu.dim} vs {nu.dim}")


def _is_assignment_case(mu: DiscreteMeasure, nu: DiscreteMeasure) -> bool:
    return (
        mu.num_atoms == nu.num_atoms and mu.is_uniform() and nu.is_uniform()
    )


def solve_w2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> OTSolution:
    """Exact optimal coupling for the squared Euclidean cost.

    Uniform marginals with equal atom counts use the assignment kernel; the
    optimal plan is then a perfect matching with masses 1/k.  Otherwise the
    transportation simplex returns an optimal vertex plan.
    """
    _check_dims(mu, nu)
    C = squared_distances(mu.points, nu.points)

    if _is_assignment_case(mu, nu):
        k = mu.num_atoms
        col_of_row, _, _, total = lap.solve_lap(C)
        masses = np.full(k, 1.0 / k)
        plan = TransportPlan(
            rows=np.arange(k, dtype=np.intp),
            cols=col_of_row.copy(),
            masses=masses,
            shape=(k, k),
            cost=float(total) / k,
        )
        matching = Matching(tuple(int(c) for c in col_of_row))
        sol = OTSolution(
            w2_squared=float(total) / k,
            plan=plan,
            is_perfect_matching=True,
            matching=matching,
        )
    else:
        rows, cols, masses, _, _ = solve_transport(C, mu.weights, nu.weights)
        cost = float((masses * C[rows, cols]).sum())
        plan = TransportPlan(
            rows=rows, cols=cols, masses=masses,
            shape=(mu.num_atoms, nu.num_atoms), cost=cost,
        )
        matching = plan.to_matching()
        sol = OTSolution(
            w2_squared=cost,
            plan=plan,
            is_perfect_matching=matching is not None,
            matching=matching,
        )

    _validate_plan(sol.plan, mu, nu)
    return sol


def _validate_plan(plan: TransportPlan, mu: DiscreteMeasure, nu: DiscreteMeasure):
    row_err = np.abs(plan.row_marginal() - mu.weights).max()
    col_err = np.abs(plan.col_marginal() - nu.weights).max()
    assert row_err <= _SUPPORT_TOL and col_err <= _SUPPORT_TOL, (
        f"plan marginals off by ({row_err:.2e}, {col_err:.2e})"
    )


# ---------------------------------------------------------------------------
# brute force (ground truth at desk scale)
# ---------------------------------------------------------------------------

def brute_force_w2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> BruteForceResult:
    """Exhaustive exact solve, reporting every optimal vertex plan.

    Uniform equal-size instances (k <= 8) enumerate all k! matchings.
    General instances with m + n <= 8 enumerate all spanning-tree vertices
    of the transportation polytope.  Larger inputs raise CapabilityError.
    """
    _check_dims(mu, nu)
    if _is_assignment_case(mu, nu):
        if mu.num_atoms > _BRUTE_MAX_ATOMS:
            raise CapabilityError(
                f"brute force supports k <= {_BRUTE_MAX_ATOMS} atoms, got {mu.num_atoms}"
            )
        return _brute_force_matchings(mu, nu)
    if mu.num_atoms + nu.num_atoms > _BRUTE_MAX_ATOMS:
        raise CapabilityError(
            f"brute force supports m + n <= {_BRUTE_MAX_ATOMS} atoms for general "
            f"marginals, got {mu.num_atoms} + {nu.num_atoms}"
        )
    return _brute_force_vertices(mu, nu)


def _brute_force_matchings(mu, nu) -> BruteForceResult:
    k = mu.num_atoms
    C = squared_distances(mu.points, nu.points)
    perms = np.array(list(itertools.permutations(range(k))), dtype=np.intp)
    totals = C[np.arange(k)[None, :], perms].sum(axis=1)
    best = float(totals.min())
    opt_idx = np.flatnonzero(totals <= best + _SUPPORT_TOL)

    matchings, plans = [], []
    for t in opt_idx:
        perm = tuple(int(p) for p in perms[t])
        matchings.append(Matching(perm))
        plans.append(
            TransportPlan(
                rows=np.arange(k, dtype=np.intp),
                cols=np.asarray(perm, dtype=np.intp),
                masses=np.full(k, 1.0 / k),
                shape=(k, k),
                cost=float(totals[t]) / k,
            )
        )
    return BruteForceResult(
        w2_squared=best / k, plans=tuple(plans), matchings=tuple(matchings)
    )


def _spanning_tree_flows(edges, m, n, supply, demand):
    """Unique flows on a spanning tree by leaf stripping; None if infeasible."""
    total = m + n
    deg = np.zeros(total, dtype=np.intp)
    incident = [[] for _ in range(total)]
    for idx, (i, j) in enumerate(edges):
        deg[i] += 1
        deg[m + j] += 1
        incident[i].append(idx)
        incident[m + j].append(idx)

    residual = np.concatenate([supply, demand]).astype(float)
    alive = np.ones(len(edges), dtype=bool)
    flows = np.zeros(len(edges))
    leaves = [node for node in range(total) if deg[node] == 1]
    for _ in range(len(edges)):
        if not leaves:
            return None
        node = leaves.pop()
        edge_idx = next((e for e in incident[node] if alive[e]), None)
        if edge_idx is None:
            return None
        i, j = edges[edge_idx]
        other = m + j if node == i else i
        q = residual[node]
        if q < -1e-12:
            return None
        flows[edge_idx] = q
        residual[node] = 0.0
        residual[other] -= q
        alive[edge_idx] = False
        deg[node] -= 1
        deg[other] -= 1
        if deg[other] == 1:
            leaves.append(other)
    if np.abs(residual).max() > 1e-9 or flows.min() < -1e-9:
        return None
    return np.clip(flows, 0.0, None)


def _brute_force_vertices(mu, nu) -> BruteForceResult:
    m, n = mu.num_atoms, nu.num_atoms
    C = squared_distances(mu.points, nu.points)
    edges = list(itertools.product(range(m), range(n)))
    total_nodes = m + n

    best = np.inf
    found = {}  # rounded support signature -> (cost, flows, edge subset)
    for subset in itertools.combinations(range(len(edges)), total_nodes - 1):
        # spanning check via union-find
        parent = list(range(total_nodes))

        def root(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for e in subset:
            i, j = edges[e]
            ri, rj = root(i), root(m + j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if not ok:
            continue

        sub_edges = [edges[e] for e in subset]
        flows = _spanning_tree_flows(sub_edges, m, n, mu.weights, nu.weights)
        if flows is None:
            continue
        cost = float(sum(f * C[i, j] for f, (i, j) in zip(flows, sub_edges)))
        if cost < best - _SUPPORT_TOL:
            best = cost
            found.clear()
        if cost <= best + _SUPPORT_TOL:
            best = min(best, cost)
            sig = tuple(
                (i, j, round(float(f), 10))
                for f, (i, j) in sorted(zip(flows, sub_edges), key=lambda t: t[1])
                if f > 1e-12
            )
            found.setdefault(sig, (cost, flows, sub_edges))

    plans = []
    for cost, flows, sub_edges in found.values():
        keep = [(i, j, f) for f, (i, j) in zip(flows, sub_edges) if f > 1e-12]
        keep.sort()
        plans.append(
            TransportPlan(
                rows=np.array([t[0] for t in keep], dtype=np.intp),
                cols=np.array([t[1] for t in keep], dtype=np.intp),
                masses=np.array([t[2] for t in keep]),
                shape=(m, n),
                cost=cost,
            )
        )
    matchings = None
    if m == n and mu.is_uniform() and nu.is_uniform():
        ms = [p.to_matching() for p in plans]
        if all(x is not None for x in ms):
            matchings = tuple(ms)
    return BruteForceResult(w2_squared=best, plans=tuple(plans), matchings=matchings)


# ---------------------------------------------------------------------------
# uniqueness of the optimal plan
# ---------------------------------------------------------------------------

def is_unique_optimal(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    solution: Optional[OTSolution] = None,
    tol: float = _SUPPORT_TOL,
) -> bool:
    """Whether the optimal transport plan is unique.

    Uniform equal-size case: every unused edge with zero reduced cost is
    re-solved with that edge forced into the matching; uniqueness fails iff
    some forced solve ties the optimum (exact, up to tol).

    General case: unused zero-reduced-cost edges are tested by a basis pivot
    (theta > 0 yields an explicit alternative vertex); degenerate pivots fall
    back to an optimal-face probe whose witness plan is verified directly
    against the optimal cost.  A degenerate chain longer than one pivot could
    in principle hide an alternative optimum from the probe; brute_force_w2
    is the ground truth at m + n <= 8.
    """
    _check_dims(mu, nu)
    if solution is not None:
        fresh = solve_w2(mu, nu)
        scale = max(1.0, abs(fresh.w2_squared))
        if abs(solution.w2_squared - fresh.w2_squared) > 1e-7 * scale:
            raise UsageError(
                "provided solution cost does not match the optimal cost "
                f"({solution.w2_squared} vs {fresh.w2_squared})"
            )

    C = squared_distances(mu.points, nu.points)
    if _is_assignment_case(mu, nu):
        return _unique_assignment(C, tol)
    return _unique_general(C, mu.weights, nu.weights, tol)


def _unique_assignment(C: np.ndarray, tol: float) -> bool:
    n = C.shape[0]
    col_of_row, u, v, total = lap.solve_lap(C)
    if n == 1:
        return True
    red = C - u[:, None] - v[None, :]
    used = np.zeros_like(C, dtype=bool)
    used[np.arange(n), col_of_row] = True
    candidates = np.argwhere(~used & (red <= tol))
    for i, j in candidates:
        forced = _forced_edge_cost(C, int(i), int(j))
        if forced <= total + tol:
            return False
    return True


def _forced_edge_cost(C: np.ndarray, i: int, j: int) -> float:
    """Cost of the best perfect matching that contains edge (i, j)."""
    sub = np.delete(np.delete(C, i, axis=0), j, axis=1)
    if sub.size == 0:
        return float(C[i, j])
    _, _, _, sub_total = lap.solve_lap(sub)
    return float(C[i, j] + sub_total)


def _unique_general(C, supply, demand, tol: float) -> bool:
    m, n = C.shape
    rows, cols, masses, u, v = solve_transport(C, supply, demand)
    red = C - u[:, None] - v[None, :]
    used = np.zeros((m, n), dtype=bool)
    used[rows, cols] = True
    best_cost = float((masses * C[rows, cols]).sum())

    candidates = [tuple(t) for t in np.argwhere(~used & (red <= tol))]
    if not candidates:
        return True

    dense = np.zeros((m, n))
    dense[rows, cols] = masses
    face = red <= tol  # includes the support
    for (i, j) in candidates:
        if _face_edge_usable(C, supply, demand, face, dense, (i, j), best_cost, tol):
            return False
    return True


def _face_edge_usable(C, supply, demand, face, dense, edge, best_cost, tol) -> bool:
    """Can edge carry positive mass in some optimal plan?

    Minimizes a probe cost (0 on optimal-face edges, +10 elsewhere, -1 on the
    probed edge) over the transportation polytope, then verifies the returned
    plan really is an alternative optimum for the original cost.  Sound
    (verified witness only); see is_unique_optimal for the completeness note.
    """
    i, j = edge
    probe = np.where(face, 0.0, 10.0)
    probe[i, j] = -1.0
    r, c, q, _, _ = solve_transport(probe, supply, demand)
    witness = np.zeros_like(C)
    witness[r, c] = q
    if witness[i, j] <= 1e-9:
        return False
    cost = float((witness * C).sum())
    if cost > best_cost + max(tol, 1e-9 * max(1.0, abs(best_cost))):
        return False
    return bool(np.abs(witness - dense).max() > 1e-9)


# ---------------------------------------------------------------------------
# second-best matching
# ---------------------------------------------------------------------------

def second_best_matching_cost(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Cost of the best perfect matching differing from an optimal one.

    Costs here are unweighted assignment sums  sum_i ||x_i - y_perm(i)||^2
    (no 1/k), so the value is comparable across matchings of the same k and
    equals the optimal sum exactly when the optimal matching is not unique.
    Requires uniform marginals with equal atom counts and k >= 2.
    """
    _check_dims(mu, nu)
    if not _is_assignment_case(mu, nu):
        raise CapabilityError(
            "second_best_matching_cost requires uniform marginals with "
            "equally many atoms"
        )
    k = mu.num_atoms
    if k < 2:
        raise UsageError("second-best matching is undefined for k = 1")

    C = squared_distances(mu.points, nu.points)
    col_of_row, _, _, _ = lap.solve_lap(C)
    best_alternative = np.inf
    for i in range(k):
        forbidden = C.copy()
        forbidden[i, col_of_row[i]] = np.inf
        _, _, _, total = lap.solve_lap(forbidden)
        best_alternative = min(best_alternative, total)
    return float(best_alternative)
