# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: per-slice PCA training and observation scoring.

C mirror of ``tvspc._pycore``.  Operation order matches the pure-Python
fallback exactly (same arithmetic, same sequencing, no reassociated
reductions) so both backends produce byte-identical models.  The build
disables FP contraction for the same reason.  Keep any edit here in
lockstep with ``_pycore.py``.
"""

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

BACKEND_NAME = "c"


cdef int _jacobi(double* a, double* v, int n, double tol_factor,
                 int max_sweeps) noexcept nogil:
    cdef int i, j, p, q, sweeps
    cdef double ss, fro, thresh, off
    cdef double apq, app, aqq, theta, t, c, s, tau
    cdef double aip, aiq, aip_new, aiq_new, vip, viq
    ss = 0.0
    for i in range(n):
        for j in range(n):
            ss += a[i * n + j] * a[i * n + j]
    fro = sqrt(ss)
    thresh = tol_factor * fro
    ss = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            ss += a[i * n + j] * a[i * n + j]
    off = sqrt(2.0 * ss)
    sweeps = 0
    while off > thresh:
        if sweeps == max_sweeps:
            return -1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p * n + q]
                if apq == 0.0:
                    continue
                app = a[p * n + p]
                aqq = a[q * n + q]
                theta = (aqq - app) / (2.0 * apq)
                # Guard: theta*theta overflows for |theta| ~ 1e154.
                if theta > 1e150 or theta < -1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p * n + p] = app - t * apq
                a[q * n + q] = aqq + t * apq
                a[p * n + q] = 0.0
                a[q * n + p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i * n + p]
                        aiq = a[i * n + q]
                        aip_new = aip - s * (aiq + tau * aip)
                        aiq_new = aiq + s * (aip - tau * aiq)
                        a[i * n + p] = aip_new
                        a[p * n + i] = aip_new
                        a[i * n + q] = aiq_new
                        a[q * n + i] = aiq_new
                for i in range(n):
                    vip = v[i * n + p]
                    viq = v[i * n + q]
                    v[i * n + p] = vip - s * (viq + tau * vip)
                    v[i * n + q] = viq + s * (vip - tau * viq)
        sweeps += 1
        ss = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ss += a[i * n + j] * a[i * n + j]
        off = sqrt(2.0 * ss)
    return sweeps


cdef void _sort_sign_clamp(double* w, double* v, int n,
                           double clamp_tol) noexcept nogil:
    cdef int i, j, m, r, best
    cdef double tmp, mag, bestmag
    for i in range(n):
        m = i
        for j in range(i + 1, n):
            if w[j] > w[m]:
                m = j
        if m != i:
            tmp = w[i]
            w[i] = w[m]
            w[m] = tmp
            for r in range(n):
                tmp = v[r * n + i]
                v[r * n + i] = v[r * n + m]
                v[r * n + m] = tmp
    for j in range(n):
        best = 0
        bestmag = fabs(v[j])
        for i in range(1, n):
            mag = fabs(v[i * n + j])
            if mag > bestmag:
                bestmag = mag
                best = i
        if v[best * n + j] < 0.0:
            for i in range(n):
                v[i * n + j] = -v[i * n + j]
    for i in range(n):
        if -clamp_tol < w[i] < 0.0:
            w[i] = 0.0


cdef int _stats(const double* xk, Py_ssize_t nrows, Py_ssize_t ncols,
                double* mean, double* std, int* active,
                double eps) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef int na = 0
    cdef double s, m, ss, d, sd
    for j in range(ncols):
        s = 0.0
        for i in range(nrows):
            s += xk[i * ncols + j]
        m = s / nrows
        ss = 0.0
        for i in range(nrows):
            d = xk[i * ncols + j] - m
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


def jacobi_eigh(const double[:, ::1] s, double tol_factor, int max_sweeps,
                double clamp_tol):
    """See ``tvspc._pycore.jacobi_eigh``."""
    cdef int n = s.shape[0]
    if n == 0:
        return [], [], 0
    cdef double* a = <double*> malloc(n * n * sizeof(double))
    cdef double* v = <double*> malloc(n * n * sizeof(double))
    cdef double* w = <double*> malloc(n * sizeof(double))
    if a == NULL or v == NULL or w == NULL:
        free(a)
        free(v)
        free(w)
        raise MemoryError()
    cdef int i, j, sweeps
    for i in range(n):
        for j in range(n):
            a[i * n + j] = s[i, j]
            v[i * n + j] = 1.0 if i == j else 0.0
    with nogil:
        sweeps = _jacobi(a, v, n, tol_factor, max_sweeps)
        for i in range(n):
            w[i] = a[i * n + i]
        if sweeps >= 0:
            _sort_sign_clamp(w, v, n, clamp_tol)
    wl = [w[i] for i in range(n)]
    vl = [[v[i * n + j] for j in range(n)] for i in range(n)]
    free(a)
    free(v)
    free(w)
    return wl, vl, sweeps


def column_stats(const double[:, ::1] x2d, double eps):
    """See ``tvspc._pycore.column_stats``."""
    cdef Py_ssize_t nrows = x2d.shape[0]
    cdef Py_ssize_t ncols = x2d.shape[1]
    if nrows == 0 or ncols == 0:
        return [], [], [], 0
    cdef double* mean = <double*> malloc(ncols * sizeof(double))
    cdef double* std = <double*> malloc(ncols * sizeof(double))
    cdef int* active = <int*> malloc(ncols * sizeof(int))
    if mean == NULL or std == NULL or active == NULL:
        free(mean)
        free(std)
        free(active)
        raise MemoryError()
    cdef int na
    with nogil:
        na = _stats(&x2d[0, 0], nrows, ncols, mean, std, active, eps)
    ml = [mean[j] for j in range(ncols)]
    sl = [std[j] for j in range(ncols)]
    al = [active[j] for j in range(ncols)]
    free(mean)
    free(std)
    free(active)
    return ml, sl, al, na


def train_slices(const double[:, :, ::1] x, Py_ssize_t k0, Py_ssize_t k1, double eps,
                 double tol_factor, int max_sweeps, double clamp_tol,
                 double[:, ::1] out_mean, double[:, ::1] out_std,
                 unsigned char[:, ::1] out_active, int[::1] out_nactive,
                 double[:, ::1] out_eigvals, double[:, :, ::1] out_vecs,
                 int[::1] out_sweeps):
    """See ``tvspc._pycore.train_slices``."""
    cdef Py_ssize_t nrows = x.shape[0]
    cdef Py_ssize_t ncols = x.shape[2]
    cdef double* xk = <double*> malloc(nrows * ncols * sizeof(double))
    cdef double* xh = <double*> malloc(nrows * ncols * sizeof(double))
    cdef double* corr = <double*> malloc(ncols * ncols * sizeof(double))
    cdef double* v = <double*> malloc(ncols * ncols * sizeof(double))
    cdef double* w = <double*> malloc(ncols * sizeof(double))
    cdef double* mean = <double*> malloc(ncols * sizeof(double))
    cdef double* std = <double*> malloc(ncols * sizeof(double))
    cdef int* active = <int*> malloc(ncols * sizeof(int))
    cdef int* cols = <int*> malloc(ncols * sizeof(int))
    if (xk == NULL or xh == NULL or corr == NULL or v == NULL or w == NULL
            or mean == NULL or std == NULL or active == NULL or cols == NULL):
        free(xk)
        free(xh)
        free(corr)
        free(v)
        free(w)
        free(mean)
        free(std)
        free(active)
        free(cols)
        raise MemoryError()
    cdef int code = 0
    cdef Py_ssize_t err_k = -1
    cdef Py_ssize_t k, i, j, a_, b, r
    cdef int na, sweeps
    cdef double m, sd, s, c
    with nogil:
        for k in range(k0, k1):
            for i in range(nrows):
                for j in range(ncols):
                    xk[i * ncols + j] = x[i, k, j]
            na = _stats(xk, nrows, ncols, mean, std, active, eps)
            if na == 0:
                code = 1
                err_k = k
                break
            na = 0
            for j in range(ncols):
                if active[j]:
                    cols[na] = j
                    na += 1
            for a_ in range(na):
                j = cols[a_]
                m = mean[j]
                sd = std[j]
                for i in range(nrows):
                    xh[i * na + a_] = (xk[i * ncols + j] - m) / sd
            for a_ in range(na):
                for b in range(a_, na):
                    s = 0.0
                    for i in range(nrows):
                        s += xh[i * na + a_] * xh[i * na + b]
                    c = s / (nrows - 1)
                    corr[a_ * na + b] = c
                    corr[b * na + a_] = c
            for i in range(na):
                for j in range(na):
                    v[i * na + j] = 1.0 if i == j else 0.0
            sweeps = _jacobi(corr, v, na, tol_factor, max_sweeps)
            if sweeps < 0:
                code = 2
                err_k = k
                break
            for i in range(na):
                w[i] = corr[i * na + i]
            _sort_sign_clamp(w, v, na, clamp_tol)
            for j in range(ncols):
                out_mean[k, j] = mean[j]
                out_std[k, j] = std[j]
                out_active[k, j] = <unsigned char> active[j]
            out_nactive[k] = na
            out_sweeps[k] = sweeps
            for r in range(na):
                out_eigvals[k, r] = w[r]
            for a_ in range(na):
                j = cols[a_]
                for r in range(na):
                    out_vecs[k, j, r] = v[a_ * na + r]
    free(xk)
    free(xh)
    free(corr)
    free(v)
    free(w)
    free(mean)
    free(std)
    free(active)
    free(cols)
    if code:
        return code, err_k
    return 0, -1


def score_points(const double[:, ::1] means, const double[:, ::1] stds,
                 const unsigned char[:, ::1] active,
                 const double[:, :, ::1] loadings,
                 const double[:, ::1] eigvals, const long long[::1] ks,
                 const double[:, ::1] xs,
                 double[:, ::1] out_scores, double[::1] out_t2):
    """See ``tvspc._pycore.score_points``."""
    cdef Py_ssize_t n_points = xs.shape[0]
    cdef Py_ssize_t ncols = xs.shape[1]
    cdef Py_ssize_t rank = loadings.shape[2]
    cdef Py_ssize_t n, j, r, k
    cdef double s, t2
    cdef double* xh = <double*> malloc(ncols * sizeof(double))
    if xh == NULL:
        raise MemoryError()
    with nogil:
        for n in range(n_points):
            k = ks[n]
            for j in range(ncols):
                if active[k, j]:
                    xh[j] = (xs[n, j] - means[k, j]) / stds[k, j]
                else:
                    xh[j] = 0.0
            t2 = 0.0
            for r in range(rank):
                s = 0.0
                for j in range(ncols):
                    s += xh[j] * loadings[k, j, r]
                out_scores[n, r] = s
                t2 += s * s / eigvals[k, r]
            out_t2[n] = t2
    free(xh)
