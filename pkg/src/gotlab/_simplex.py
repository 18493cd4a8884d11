"""Dense transportation simplex.

Exact solver for min <c, pi> over the transportation polytope
{pi >= 0 : pi 1 = supply, pi^T 1 = demand} at desk scale.  Starts from a
northwest-corner basis (a spanning tree of the bipartite supply/demand
graph, including degenerate zero-flow arcs) and pivots with Bland's rule
(first eligible entering arc in row-major order, lexicographically smallest
leaving arc among the tie minimizers), which rules out cycling.

Row node i is tree node i; column node j is tree node m + j.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_transport"]

_ENTER_TOL = 1e-11
_FLOW_ZERO = 1e-15


def _northwest_corner(supply, demand):
    """Initial basis: list of (i, j) arcs and their flows (may include zeros)."""
    m, n = len(supply), len(demand)
    a = supply.astype(float).copy()
    b = demand.astype(float).copy()
    basis = []
    flow = {}
    i = j = 0
    while True:
        q = min(a[i], b[j])
        basis.append((i, j))
        flow[(i, j)] = q
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if a[i] <= _FLOW_ZERO and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1
    assert len(basis) == m + n - 1, "northwest corner produced a non-tree basis"
    return basis, flow


def _tree_adjacency(basis, m):
    adj = {}
    for idx, (i, j) in enumerate(basis):
        adj.setdefault(i, []).append((m + j, idx))
        adj.setdefault(m + j, []).append((i, idx))
    return adj


def _tree_duals(C, basis, m, n):
    """u, v with u[i] + v[j] = C[i, j] on basic arcs, rooted at u[0] = 0."""
    adj = _tree_adjacency(basis, m)
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    stack = [0]
    seen = {0}
    while stack:
        node = stack.pop()
        for other, idx in adj.get(node, ()):
            if other in seen:
                continue
            i, j = basis[idx]
            if other >= m:
                v[j] = C[i, j] - u[i]
            else:
                u[i] = C[i, j] - v[j]
            seen.add(other)
            stack.append(other)
    if np.isnan(u).any() or np.isnan(v).any():
        raise AssertionError("basis is not a spanning tree")
    return u, v


def _tree_path(basis, m, src, dst):
    """Arc indices + node sequence from src to dst through the basis tree."""
    adj = _tree_adjacency(basis, m)
    parent = {src: (None, None)}
    stack = [src]
    while stack:
        node = stack.pop()
        if node == dst:
            break
        for other, idx in adj.get(node, ()):
            if other not in parent:
                parent[other] = (node, idx)
                stack.append(other)
    nodes = [dst]
    arcs = []
    node = dst
    while parent[node][0] is not None:
        prev, idx = parent[node]
        arcs.append(idx)
        nodes.append(prev)
        node = prev
    nodes.reverse()
    arcs.reverse()
    return nodes, arcs


def solve_transport(cost, supply, demand, max_iter=None):
    """Solve the balanced transportation problem exactly.

    Args:
        cost: (m, n) float matrix.
        supply: (m,) positive masses.
        demand: (n,) positive masses, sum matching supply within 1e-9.

    Returns:
        (rows, cols, masses, u, v): support arcs of an optimal vertex plan
        (masses > 1e-15 only) plus optimal duals with u[i] + v[j] <= c[i, j]
        on every arc (within float error).
    """
    C = np.asarray(cost, dtype=np.float64)
    supply = np.asarray(supply, dtype=np.float64)
    demand = np.asarray(demand, dtype=np.float64)
    m, n = C.shape
    if abs(supply.sum() - demand.sum()) > 1e-9:
        raise ValueError("unbalanced transportation problem")
    if max_iter is None:
        max_iter = max(10_000, 60 * m * n)

    basis, flow = _northwest_corner(supply, demand)
    basic_mask = np.zeros((m, n), dtype=bool)
    for (i, j) in basis:
        basic_mask[i, j] = True

    for _ in range(max_iter):
        u, v = _tree_duals(C, basis, m, n)
        red = C - u[:, None] - v[None, :]
        red[basic_mask] = 0.0

        # Bland: first eligible entering arc in row-major order
        viol = np.argwhere(red < -_ENTER_TOL)
        if viol.size == 0:
            break
        ei, ej = int(viol[0, 0]), int(viol[0, 1])

        # cycle = entering arc + tree path from column node ej back to row ei
        nodes, arcs = _tree_path(basis, m, m + ej, ei)
        # walking from ej toward ei the tree arcs alternate -, +, -, ...
        minus, plus = [], []
        for pos, idx in enumerate(arcs):
            (minus if pos % 2 == 0 else plus).append(idx)

        theta = min(flow[basis[idx]] for idx in minus)
        leaving = min(
            (idx for idx in minus if flow[basis[idx]] <= theta + 1e-15),
            key=lambda idx: basis[idx],
        )

        for idx in minus:
            arc = basis[idx]
            flow[arc] = max(flow[arc] - theta, 0.0)
        for idx in plus:
            flow[basis[idx]] += theta

        old = basis[leaving]
        del flow[old]
        basic_mask[old] = False
        basis[leaving] = (ei, ej)
        basic_mask[ei, ej] = True
        flow[(ei, ej)] = theta
    else:
        raise RuntimeError("transportation simplex failed to converge")

    u, v = _tree_duals(C, basis, m, n)
    rows, cols, masses = [], [], []
    for (i, j) in sorted(flow):
        q = flow[(i, j)]
        if q > _FLOW_ZERO:
            rows.append(i)
            cols.append(j)
            masses.append(q)
    return (
        np.asarray(rows, dtype=np.intp),
        np.asarray(cols, dtype=np.intp),
        np.asarray(masses, dtype=np.float64),
        u,
        v,
    )
