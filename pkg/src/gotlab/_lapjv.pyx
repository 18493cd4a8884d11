# cython: language_level=3
"""Dense square linear assignment, C kernel.

Same shortest-augmenting-path algorithm as gotlab.lap_numpy, ported to a
tight nogil loop with an explicit "remaining columns" worklist.  Column ties
prefer an unassigned column, which shortens augmenting paths; the NumPy twin
breaks ties by index instead, so the two backends can return different (but
equally optimal) permutations.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport INFINITY, isnan


@cython.boundscheck(False)
@cython.wraparound(False)
def solve_lap(cost):
    """Solve min_perm sum_i cost[i, perm[i]] for a square cost matrix.

    Returns (col_of_row, u, v, total), matching gotlab.lap_numpy.solve_lap.
    """
    C_arr = np.ascontiguousarray(cost, dtype=np.float64)
    if C_arr.ndim != 2 or C_arr.shape[0] != C_arr.shape[1]:
        raise ValueError(f"cost must be square, got shape {C_arr.shape}")
    cdef Py_ssize_t n = C_arr.shape[0]
    if n == 0:
        raise ValueError("empty assignment problem")

    u_arr = np.zeros(n)
    v_arr = np.zeros(n)
    col_of_row_arr = np.full(n, -1, dtype=np.intp)
    row_of_col_arr = np.full(n, -1, dtype=np.intp)
    shortest_arr = np.empty(n)
    path_arr = np.empty(n, dtype=np.intp)
    remaining_arr = np.empty(n, dtype=np.intp)
    scanned_arr = np.empty(n, dtype=np.intp)
    done_arr = np.zeros(n, dtype=np.uint8)

    cdef double[:, ::1] C = C_arr
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] shortest = shortest_arr
    cdef Py_ssize_t[::1] col_of_row = col_of_row_arr
    cdef Py_ssize_t[::1] row_of_col = row_of_col_arr
    cdef Py_ssize_t[::1] path = path_arr
    cdef Py_ssize_t[::1] remaining = remaining_arr
    cdef Py_ssize_t[::1] scanned = scanned_arr
    cdef unsigned char[::1] done = done_arr

    cdef Py_ssize_t cur, i, j, jj, it, idx, num_rem, sink, nscanned
    cdef double minval, lowest, red
    cdef int bad = 0

    with nogil:
        for cur in range(n):
            num_rem = n
            for j in range(n):
                remaining[j] = j
                shortest[j] = INFINITY
                done[j] = 0
            minval = 0.0
            i = cur
            sink = -1
            nscanned = 0
            while sink == -1:
                scanned[nscanned] = i
                nscanned += 1
                lowest = INFINITY
                idx = -1
                for it in range(num_rem):
                    j = remaining[it]
                    red = minval + C[i, j] - u[i] - v[j]
                    if isnan(red):
                        bad = 1
                        break
                    if red < shortest[j]:
                        shortest[j] = red
                        path[j] = i
                    if shortest[j] < lowest or (
                        shortest[j] == lowest and idx >= 0
                        and row_of_col[j] == -1
                        and row_of_col[remaining[idx]] != -1
                    ):
                        lowest = shortest[j]
                        idx = it
                if bad or idx < 0 or lowest == INFINITY:
                    bad = 1
                    break
                minval = lowest
                j = remaining[idx]
                if row_of_col[j] == -1:
                    sink = j
                else:
                    i = row_of_col[j]
                done[j] = 1
                num_rem -= 1
                remaining[idx] = remaining[num_rem]
            if bad:
                break

            u[cur] += minval
            for it in range(1, nscanned):
                i = scanned[it]
                u[i] += minval - shortest[col_of_row[i]]
            for j in range(n):
                if done[j]:
                    v[j] -= minval - shortest[j]

            j = sink
            while True:
                i = path[j]
                row_of_col[j] = i
                jj = col_of_row[i]
                col_of_row[i] = j
                j = jj
                if i == cur:
                    break

    if bad:
        raise ValueError("assignment problem is infeasible or contains NaN")
    total = float(C_arr[np.arange(n), col_of_row_arr].sum())
    return col_of_row_arr, u_arr, v_arr, total
