"""Compiled numerical kernels for sparse Cholesky work and sequential sampling.

Everything in this module operates on raw CSC arrays (``Xp`` column pointers,
``Xi`` row indices, ``Xx`` values) so that numba can compile it.  Factor
columns are stored with the diagonal entry first followed by subdiagonal rows
in ascending order; several kernels rely on that layout.

The wrappers in :mod:`contourcred.linalg` own all validation.  Kernels signal
failure through integer status codes instead of exceptions.
"""

import math

import numpy as np
from numba import njit

_INV_SQRT2 = math.sqrt(0.5)


@njit(cache=True)
def phi(x):
    """Standard normal CDF, exact at +-inf."""
    return 0.5 * math.erfc(-x * _INV_SQRT2)


@njit(cache=True)
def ndtri(p):
    """Inverse standard normal CDF for p in (0, 1).

    Rational approximation with relative error below 1e-15; callers clamp
    p away from 0 and 1.
    """
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    if q < 0.0:
        return -val
    return val


@njit(cache=True)
def etree(n, Ap, Ai):
    """Elimination tree of a symmetric matrix given its upper-triangular CSC."""
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


@njit(cache=True)
def _ereach(k, Ap, Ai, parent, w, stack, out):
    # Pattern of row k of L (excluding the diagonal), topologically ordered.
    # w is a workspace marked with k; returns the start offset into out.
    n = w.shape[0]
    top = n
    w[k] = k
    for p in range(Ap[k], Ap[k + 1]):
        i = Ai[p]
        if i >= k:
            continue
        depth = 0
        while w[i] != k:
            stack[depth] = i
            depth += 1
            w[i] = k
            i = parent[i]
        while depth > 0:
            depth -= 1
            top -= 1
            out[top] = stack[depth]
    return top


@njit(cache=True)
def column_counts(n, Ap, Ai, parent):
    """Nonzero count of each column of L, diagonal included."""
    counts = np.ones(n, dtype=np.int64)
    w = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        top = _ereach(k, Ap, Ai, parent, w, stack, out)
        for t in range(top, n):
            counts[out[t]] += 1
    return counts


@njit(cache=True)
def chol_numeric(n, Ap, Ai, Ax, parent, Lp, Li, Lx):
    """Up-looking sparse Cholesky of A (upper CSC) into preallocated L.

    Columns of L come out with the diagonal first, then ascending rows.
    Returns 0 on success, or -(k + 1) if pivot k is not positive.
    """
    w = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    x = np.zeros(n, dtype=np.float64)
    free = Lp[:n].copy()
    for k in range(n):
        top = _ereach(k, Ap, Ai, parent, w, stack, out)
        d = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            if i == k:
                d = Ax[p]
            elif i < k:
                x[i] = Ax[p]
        for t in range(top, n):
            j = out[t]
            lkj = x[j] / Lx[Lp[j]]
            x[j] = 0.0
            for p in range(Lp[j] + 1, free[j]):
                x[Li[p]] -= Lx[p] * lkj
            d -= lkj * lkj
            p = free[j]
            free[j] = p + 1
            Li[p] = k
            Lx[p] = lkj
        if d <= 0.0 or not math.isfinite(d):
            return -(k + 1)
        p = free[k]
        free[k] = p + 1
        Li[p] = k
        Lx[p] = math.sqrt(d)
    return 0


@njit(cache=True)
def solve_lower(n, Lp, Li, Lx, b):
    """In-place solve of L y = b."""
    for j in range(n):
        yj = b[j] / Lx[Lp[j]]
        b[j] = yj
        for p in range(Lp[j] + 1, Lp[j + 1]):
            b[Li[p]] -= Lx[p] * yj


@njit(cache=True)
def solve_upper(n, Lp, Li, Lx, b):
    """In-place solve of L^T x = b."""
    for j in range(n - 1, -1, -1):
        acc = b[j]
        for p in range(Lp[j] + 1, Lp[j + 1]):
            acc -= Lx[p] * b[Li[p]]
        b[j] = acc / Lx[Lp[j]]


@njit(cache=True)
def solve_lower_multi(n, Lp, Li, Lx, B):
    # B has shape (m, n); each row is solved independently.
    for r in range(B.shape[0]):
        for j in range(n):
            yj = B[r, j] / Lx[Lp[j]]
            B[r, j] = yj
            for p in range(Lp[j] + 1, Lp[j + 1]):
                B[r, Li[p]] -= Lx[p] * yj


@njit(cache=True)
def solve_upper_multi(n, Lp, Li, Lx, B):
    for r in range(B.shape[0]):
        for j in range(n - 1, -1, -1):
            acc = B[r, j]
            for p in range(Lp[j] + 1, Lp[j + 1]):
                acc -= Lx[p] * B[r, Li[p]]
            B[r, j] = acc / Lx[Lp[j]]


@njit(cache=True)
def takahashi(n, Lp, Li, Lx, Z):
    """Selected inverse on the factor pattern.

    Fills Z (same layout as L) with entries of A^{-1}; Z[Lp[j]] ends up as
    the j-th diagonal of the inverse.  Returns the number of pattern lookups
    that missed, which is 0 for a pattern produced by ``chol_numeric``.
    """
    misses = 0
    for i in range(n - 1, -1, -1):
        lii = Lx[Lp[i]]
        start = Lp[i]
        end = Lp[i + 1]
        for pj in range(end - 1, start - 1, -1):
            j = Li[pj]
            s = 0.0
            for pk in range(start + 1, end):
                k = Li[pk]
                if k <= j:
                    ca, rb = k, j
                else:
                    ca, rb = j, k
                lo = Lp[ca]
                hi = Lp[ca + 1] - 1
                found = False
                val = 0.0
                while lo <= hi:
                    mid = (lo + hi) // 2
                    r = Li[mid]
                    if r == rb:
                        val = Z[mid]
                        found = True
                        break
                    elif r < rb:
                        lo = mid + 1
                    else:
                        hi = mid - 1
                if not found:
                    misses += 1
                s += (Lx[pk] / lii) * val
            if j == i:
                Z[pj] = 1.0 / (lii * lii) - s
            else:
                Z[pj] = -s
    return misses


@njit(cache=True)
def sequential_box_sweep(Lp, Li, Lx, mu, lo, hi, U, traj_sum, traj_sumsq,
                         weights, wmean_acc):
    """Sequential separation-of-variables sweep over a box.

    All node arrays are in factor (permuted) coordinates.  Nodes are
    processed from position n-1 down to 0; step t handles position n-1-t.
    For each Monte Carlo row of ``U`` the running product of conditional
    interval probabilities after step t estimates the joint probability of
    the box restricted to the t+1 processed nodes; the sweep accumulates its
    sum and sum of squares into ``traj_sum``/``traj_sumsq`` indexed by t.

    When ``weights`` has length n it also accumulates, per sample, the
    weighted mean of the running product (weight at index t applies to the
    node processed at step t), summing value and square into ``wmean_acc``.
    """
    n = mu.shape[0]
    m = U.shape[0]
    use_w = weights.shape[0] == n
    v = np.empty(n, dtype=np.float64)
    for s in range(m):
        run = 1.0
        acc = 0.0
        for t in range(n):
            i = n - 1 - t
            dii = Lx[Lp[i]]
            dot = 0.0
            for p in range(Lp[i] + 1, Lp[i + 1]):
                dot += Lx[p] * v[Li[p]]
            cmean = -dot / dii
            csd = 1.0 / dii
            za = (lo[i] - mu[i] - cmean) / csd
            zb = (hi[i] - mu[i] - cmean) / csd
            pa = phi(za)
            pb = phi(zb)
            pc = pb - pa
            if pc < 0.0:
                pc = 0.0
            run *= pc
            u = pa + U[s, t] * (pb - pa)
            if u < 1e-300:
                u = 1e-300
            elif u > 1.0 - 1e-16:
                u = 1.0 - 1e-16
            v[i] = cmean + csd * ndtri(u)
            traj_sum[t] += run
            traj_sumsq[t] += run * run
            if use_w:
                acc += weights[t] * run
        if use_w:
            wmean_acc[0] += acc
            wmean_acc[1] += acc * acc


@njit(cache=True)
def logdet_from_factor(n, Lp, Lx):
    acc = 0.0
    for j in range(n):
        acc += math.log(Lx[Lp[j]])
    return 2.0 * acc
