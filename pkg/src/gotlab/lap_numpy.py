"""Dense square linear assignment, NumPy implementation.

Shortest-augmenting-path method: rows are inserted one at a time; for each
row a Dijkstra-style search runs over reduced costs ``c[i, j] - u[i] - v[j]``
until it reaches an unassigned column, after which duals are updated and the
alternating path is flipped.  Runs in O(n^3) with O(n) memory per row scan.

Returns optimal dual variables alongside the assignment so callers can do
reduced-cost analysis (uniqueness checks, second-best probes).  Entries may
be ``+inf`` to forbid an edge; a problem with no finite perfect matching
raises ``ValueError``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["solve_lap"]


def solve_lap(cost: np.ndarray):
    """Solve min_perm sum_i cost[i, perm[i]] for a square cost matrix.

    Args:
        cost: (n, n) float array; +inf entries mark forbidden edges.

    Returns:
        (col_of_row, u, v, total): the optimal column for each row, dual
        vectors satisfying u[i] + v[j] <= cost[i, j] (within float error,
        with equality on assigned edges), and the optimal total cost.
    """
    C = np.ascontiguousarray(cost, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"cost must be square, got shape {C.shape}")
    n = C.shape[0]
    if n == 0:
        raise ValueError("empty assignment problem")
    if np.isnan(C).any():
        raise ValueError("cost contains NaN")

    u = np.zeros(n)
    v = np.zeros(n)
    col_of_row = np.full(n, -1, dtype=np.intp)
    row_of_col = np.full(n, -1, dtype=np.intp)
    inf = np.inf

    for cur in range(n):
        shortest = np.full(n, inf)
        path = np.full(n, -1, dtype=np.intp)
        done = np.zeros(n, dtype=bool)
        scanned_rows = []
        minval = 0.0
        i = cur
        sink = -1
        while sink < 0:
            scanned_rows.append(i)
            red = (minval - u[i]) + C[i] - v
            upd = ~done & (red < shortest)
            shortest[upd] = red[upd]
            path[upd] = i
            cand = np.where(done, inf, shortest)
            j = int(np.argmin(cand))
            minval = float(cand[j])
            if not np.isfinite(minval):
                raise ValueError("assignment problem is infeasible")
            done[j] = True
            r = row_of_col[j]
            if r < 0:
                sink = j
            else:
                i = int(r)

        # dual update over the scanned tree
        u[cur] += minval
        for irow in scanned_rows[1:]:
            u[irow] += minval - shortest[col_of_row[irow]]
        v[done] -= minval - shortest[done]

        # augment along the alternating path back to cur
        j = sink
        while True:
            i = int(path[j])
            row_of_col[j] = i
            col_of_row[i], j = j, col_of_row[i]
            if i == cur:
                break

    total = float(C[np.arange(n), col_of_row].sum())
    return col_of_row, u, v, total
