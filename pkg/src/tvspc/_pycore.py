"""Pure-Python kernels: per-slice PCA training and observation scoring.

This is the fallback backend used when the compiled extension
(``tvspc._core``) is unavailable.  The compiled module implements the
same loops in C; both are written with identical operation order (plain
IEEE-754 double arithmetic, no reductions reordered) so that models
trained by either backend are byte-for-byte equal.  Keep any edit here
in lockstep with ``_core.pyx``.
"""

from __future__ import annotations

from math import sqrt

BACKEND_NAME = "python"


def _jacobi(a, v, n, tol_factor, max_sweeps):
    """Cyclic Jacobi on a symmetric n*n matrix (nested lists, in place).

    ``a`` is destroyed (converges to diagonal), ``v`` accumulates the
    rotations.  Returns the number of sweeps used, or -1 when the
    off-diagonal norm has not dropped below tol_factor * ||a||_F after
    max_sweeps full passes.
    """
    ss = 0.0
    for i in range(n):
        ai = a[i]
        for j in range(n):
            ss += ai[j] * ai[j]
    fro = sqrt(ss)
    thresh = tol_factor * fro

    ss = 0.0
    for i in range(n - 1):
        ai = a[i]
        for j in range(i + 1, n):
            ss += ai[j] * ai[j]
    off = sqrt(2.0 * ss)

    sweeps = 0
    while off > thresh:
        if sweeps == max_sweeps:
            return -1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                app = a[p][p]
                aqq = a[q][q]
                theta = (aqq - app) / (2.0 * apq)
                # Guard: theta*theta overflows for |theta| ~ 1e154.
                if theta > 1e150 or theta < -1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (abs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p][p] = app - t * apq
                a[q][q] = aqq + t * apq
                a[p][q] = 0.0
                a[q][p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i][p]
                        aiq = a[i][q]
                        aip_new = aip - s * (aiq + tau * aip)
                        aiq_new = aiq + s * (aip - tau * aiq)
                        a[i][p] = aip_new
                        a[p][i] = aip_new
                        a[i][q] = aiq_new
                        a[q][i] = aiq_new
                for i in range(n):
                    vi = v[i]
                    vip = vi[p]
                    viq = vi[q]
                    vi[p] = vip - s * (viq + tau * vip)
                    vi[q] = viq + s * (vip - tau * viq)
        sweeps += 1
        ss = 0.0
        for i in range(n - 1):
            ai = a[i]
            for j in range(i + 1, n):
                ss += ai[j] * ai[j]
        off = sqrt(2.0 * ss)
    return sweeps


def _sort_sign_clamp(w, v, n, clamp_tol):
    """Order eigenpairs descending, fix column signs, clamp tiny negatives.

    Selection sort with strict > keeps the original order of exactly
    equal eigenvalues.  Sign rule: the largest-|entry| of each column is
    made non-negative (first such entry wins ties).  Eigenvalues in
    (-clamp_tol, 0) are roundoff from PSD inputs and become exactly 0.
    """
    for i in range(n):
        m = i
        for j in range(i + 1, n):
            if w[j] > w[m]:
                m = j
        if m != i:
            w[i], w[m] = w[m], w[i]
            for r in range(n):
                vr = v[r]
                vr[i], vr[m] = vr[m], vr[i]
    for j in range(n):
        best = 0
        bestmag = abs(v[0][j])
        for i in range(1, n):
            mag = abs(v[i][j])
            if mag > bestmag:
                bestmag = mag
                best = i
        if v[best][j] < 0.0:
            for i in range(n):
                v[i][j] = -v[i][j]
    for i in range(n):
        if -clamp_tol < w[i] < 0.0:
            w[i] = 0.0


def jacobi_eigh(s, tol_factor, max_sweeps, clamp_tol):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    s : (n, n) float64 array, symmetric; not modified.
    tol_factor : convergence threshold as a fraction of ||s||_F.
    max_sweeps : maximum full cyclic passes.
    clamp_tol : negative eigenvalues above -clamp_tol are set to 0.

    Returns ``(w, v, sweeps)``: eigenvalues descending (list), the matrix
    of eigenvector columns (nested list), and the sweep count (-1 means
    no convergence).
    """
    n = len(s)
    a = [[float(x) for x in row] for row in s]
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    sweeps = _jacobi(a, v, n, tol_factor, max_sweeps)
    w = [a[i][i] for i in range(n)]
    if sweeps >= 0:
        _sort_sign_clamp(w, v, n, clamp_tol)
    return w, v, sweeps


def _stats_inplace(xk, ncols, nrows, mean, std, active, eps):
    """Column mean / sample std / activity flags for one slice."""
    na = 0
    for j in range(ncols):
        s = 0.0
        for i in range(nrows):
            s += xk[i][j]
        m = s / nrows
        ss = 0.0
        for i in range(nrows):
            d = xk[i][j] - m
            ss += d * d
        sd = sqrt(ss / (nrows - 1))
        mean[j] = m
        if sd >= eps:
            std[j] = sd
            active[j] = 1
            na += 1
        else:
            std[j] = 1.0
            active[j] = 0
    return na


def column_stats(x2d, eps):
    """Per-column mean, sample std (I-1 denominator) and active flags.

    A column whose std falls below ``eps`` is inactive: its std is
    stored as 1.0 so downstream standardization maps it to exactly 0.
    """
    nrows = len(x2d)
    ncols = len(x2d[0]) if nrows else 0
    xk = [[float(c) for c in row] for row in x2d]
    mean = [0.0] * ncols
    std = [0.0] * ncols
    active = [0] * ncols
    na = _stats_inplace(xk, ncols, nrows, mean, std, active, eps)
    return mean, std, active, na


def train_slices(
    x,
    k0,
    k1,
    eps,
    tol_factor,
    max_sweeps,
    clamp_tol,
    out_mean,
    out_std,
    out_active,
    out_nactive,
    out_eigvals,
    out_vecs,
    out_sweeps,
):
    """Train slices k0..k1 of the (I, K, J) tensor ``x``.

    Per slice: column stats, standardization of active columns, compact
    correlation matrix over active columns, full-rank Jacobi
    eigendecomposition, then scatter back to J-wide outputs (inactive
    rows/columns stay 0; out arrays must be zero-initialized).

    Returns ``(0, -1)`` on success, ``(1, k)`` for a slice with no
    active variable, ``(2, k)`` for eigensolver non-convergence.
    """
    nrows = x.shape[0]
    ncols = x.shape[2]
    mean = [0.0] * ncols
    std = [0.0] * ncols
    active = [0] * ncols
    for k in range(k0, k1):
        xk = x[:, k, :].tolist()
        na = _stats_inplace(xk, ncols, nrows, mean, std, active, eps)
        if na == 0:
            return 1, k
        cols = [j for j in range(ncols) if active[j]]
        xh = [[0.0] * na for _ in range(nrows)]
        for a_ in range(na):
            j = cols[a_]
            m = mean[j]
            sd = std[j]
            for i in range(nrows):
                xh[i][a_] = (xk[i][j] - m) / sd
        corr = [[0.0] * na for _ in range(na)]
        for a_ in range(na):
            for b in range(a_, na):
                s = 0.0
                for i in range(nrows):
                    s += xh[i][a_] * xh[i][b]
                c = s / (nrows - 1)
                corr[a_][b] = c
                corr[b][a_] = c
        v = [[1.0 if i == j else 0.0 for j in range(na)] for i in range(na)]
        sweeps = _jacobi(corr, v, na, tol_factor, max_sweeps)
        if sweeps < 0:
            return 2, k
        w = [corr[i][i] for i in range(na)]
        _sort_sign_clamp(w, v, na, clamp_tol)
        for j in range(ncols):
            out_mean[k, j] = mean[j]
            out_std[k, j] = std[j]
            out_active[k, j] = active[j]
        out_nactive[k] = na
        out_sweeps[k] = sweeps
        for r in range(na):
            out_eigvals[k, r] = w[r]
        for a_ in range(na):
            j = cols[a_]
            va = v[a_]
            for r in range(na):
                out_vecs[k, j, r] = va[r]
    return 0, -1


def score_points(means, stds, active, loadings, eigvals, ks, xs, out_scores, out_t2):
    """Standardize, project and compute T-squared for a batch of points.

    ``ks`` holds the slice index of each row of ``xs``; model arrays are
    indexed by slice.  Retained eigenvalues must be positive.
    """
    n_points = xs.shape[0]
    ncols = xs.shape[1]
    rank = loadings.shape[2]
    for n in range(n_points):
        k = ks[n]
        row = xs[n].tolist()
        m = means[k].tolist()
        sd = stds[k].tolist()
        act = active[k].tolist()
        load = loadings[k].tolist()
        lam = eigvals[k].tolist()
        xh = [0.0] * ncols
        for j in range(ncols):
            if act[j]:
                xh[j] = (row[j] - m[j]) / sd[j]
            else:
                xh[j] = 0.0
        t2 = 0.0
        for r in range(rank):
            s = 0.0
            for j in range(ncols):
                s += xh[j] * load[j][r]
            out_scores[n, r] = s
            t2 += s * s / lam[r]
        out_t2[n] = t2
