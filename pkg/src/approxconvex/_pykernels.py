"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_kernels.pyx`` must match them
exactly (same output order, same floating-point operations).
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_CAP = 2


def convex_triples(nums, keys, key_ids, pows, offset, j, row_start, row_stop):
    """Grid-closed triples for the x ids in ``[row_start, row_stop)``.

    A triple ``(x, y, a)`` is kept when ``(a*X + (2**j - a)*Y) / 2**j`` has
    integer numerators and is a grid point. Output is ordered by
    ``(x, y, a)``.
    """
    n, _ = nums.shape
    full = 1 << j
    a = np.arange(full + 1, dtype=np.int64)
    b = full - a
    out_x, out_y, out_a, out_c = [], [], [], []
    for x in range(row_start, row_stop):
        # shape (n, full+1, dim)
        num = a[None, :, None] * nums[x][None, None, :] + b[None, :, None] * nums[:, None, :]
        ok = np.all((num & (full - 1)) == 0, axis=2)
        q = num >> j
        key = ((q + offset) * pows).sum(axis=2)
        pos = np.searchsorted(keys, key)
        pos_c = np.minimum(pos, len(keys) - 1)
        ok &= keys[pos_c] == key
        yy, aa = np.nonzero(ok)
        out_x.append(np.full(len(yy), x, dtype=np.int64))
        out_y.append(yy.astype(np.int64))
        out_a.append(aa.astype(np.int64))
        out_c.append(key_ids[pos_c[yy, aa]])
    if not out_x:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy(), empty.copy()
    return (np.concatenate(out_x), np.concatenate(out_y),
            np.concatenate(out_a), np.concatenate(out_c))


def simplex_iterate(T, basis, max_iter, bland_after, tol, it0=0):
    """Run primal simplex pivots on tableau ``T`` in place.

    Rows ``0..m-1`` are constraints, row ``m`` holds reduced costs of a
    minimisation, the last column is the right-hand side. Dantzig pricing is
    used for the first ``bland_after`` pivots, Bland's rule afterwards. Ratio
    test ties go to the largest pivot element under Dantzig pricing and to the
    smallest basis index under Bland's rule.
    Returns ``(status, iterations)``.
    """
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    it = it0
    while True:
        cost = T[m, :ncols]
        if it < bland_after:
            e = int(np.argmin(cost))
            if not cost[e] < -tol:
                return OPTIMAL, it
        else:
            neg = np.flatnonzero(cost < -tol)
            if len(neg) == 0:
                return OPTIMAL, it
            e = int(neg[0])
        if it >= max_iter:
            return ITERATION_CAP, it
        col = T[:m, e]
        rows = np.flatnonzero(col > tol)
        if len(rows) == 0:
            return UNBOUNDED, it
        ratios = T[rows, ncols] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        if it < bland_after:
            r = int(ties[np.argmax(col[ties])])  # largest pivot, first on ties
        else:
            r = int(ties[np.argmin(basis[ties])])
        prow = T[r] / T[r, e]
        T -= np.outer(T[:, e], prow)
        T[r] = prow
        basis[r] = e
        it += 1
