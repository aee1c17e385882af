# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Mirrors the function surface of ``affdim._purepy``. Matrices are small
(d <= 8), so the kernels work on fixed stack buffers: one-sided Jacobi
for singular values, modified Gram-Schmidt with a positive diagonal for
the QR chains, and an odometer DFS for exhaustive word enumeration in
lexicographic order.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

DEF MAXD = 8
DEF MAXSQ = 64


cdef inline void _mm(const double* a, const double* b, double* c, int d) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += a[i * d + k] * b[k * d + j]
            c[i * d + j] = acc


cdef inline void _mm_rect(const double* a, const double* b, double* c, int d, int k) noexcept nogil:
    # c (d x k) = a (d x d) @ b (d x k), all row-major
    cdef int i, j, p
    cdef double acc
    for i in range(d):
        for j in range(k):
            acc = 0.0
            for p in range(d):
                acc += a[i * d + p] * b[p * k + j]
            c[i * k + j] = acc


cdef void _jacobi_sv(double* a, int d, double* sv) noexcept nogil:
    # one-sided Jacobi on the columns of the row-major d x d buffer
    cdef int p, q, i, sweep, jj
    cdef bint rotated
    cdef double app, aqq, apq, tau, t, c, s, x, y
    for sweep in range(60):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                app = 0.0
                aqq = 0.0
                apq = 0.0
                for i in range(d):
                    x = a[i * d + p]
                    y = a[i * d + q]
                    app += x * x
                    aqq += y * y
                    apq += x * y
                if fabs(apq) <= 1e-15 * sqrt(app * aqq):
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for i in range(d):
                    x = a[i * d + p]
                    y = a[i * d + q]
                    a[i * d + p] = c * x - s * y
                    a[i * d + q] = s * x + c * y
        if not rotated:
            break
    for p in range(d):
        app = 0.0
        for i in range(d):
            app += a[i * d + p] * a[i * d + p]
        sv[p] = sqrt(app)
    for p in range(1, d):
        x = sv[p]
        jj = p - 1
        while jj >= 0 and sv[jj] < x:
            sv[jj + 1] = sv[jj]
            jj -= 1
        sv[jj + 1] = x


cdef int _mgs(double* y, int d, int k, double* lognorm) noexcept nogil:
    # orthonormalize the k columns of the row-major (d x k) buffer in place,
    # adding log of each positive diagonal into lognorm; -1 on collapse
    cdef int i, j, p, rep
    cdef double dot, nrm
    for j in range(k):
        for rep in range(2):
            for p in range(j):
                dot = 0.0
                for i in range(d):
                    dot += y[i * k + p] * y[i * k + j]
                for i in range(d):
                    y[i * k + j] -= dot * y[i * k + p]
        nrm = 0.0
        for i in range(d):
            nrm += y[i * k + j] * y[i * k + j]
        nrm = sqrt(nrm)
        if nrm < 1e-300:
            return -1
        for i in range(d):
            y[i * k + j] /= nrm
        if lognorm != NULL:
            lognorm[j] += log(nrm)
    return 0


cdef inline double _log_svf(const double* sv, int d, double s) noexcept nogil:
    cdef double acc = 0.0
    cdef int i, k
    if s > d:
        for i in range(d):
            acc += log(sv[i])
        return acc * (s / d)
    k = <int> s
    for i in range(k):
        acc += log(sv[i])
    if s > k and k < d:
        acc += (s - k) * log(sv[k])
    return acc


cdef void _check_dim(int d):
    if d < 1 or d > MAXD:
        raise ValueError(f"compiled kernels support 1 <= d <= {MAXD}, got {d}")


def singular_values_batch(mats):
    """Singular values of a stack of (d, d) matrices, descending per row."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef int m = a.shape[0], d = a.shape[1]
    _check_dim(d)
    out = np.empty((m, d))
    cdef double[:, ::1] ov = out
    cdef double buf[MAXSQ]
    cdef double sv[MAXD]
    cdef int i, r
    with nogil:
        for i in range(m):
            for r in range(d * d):
                buf[r] = (&a[i, 0, 0])[r]
            _jacobi_sv(buf, d, sv)
            for r in range(d):
                ov[i, r] = sv[r]
    return out


def word_products_level(mats, int n):
    """Products A_w for every word w of length n, lex order, (N^n, d, d)."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef int n_maps = a.shape[0], d = a.shape[1]
    _check_dim(d)
    total_py = int(n_maps) ** int(n)
    if total_py > (1 << 31):
        raise MemoryError(f"{n_maps}**{n} products will not fit in memory")
    cdef long long total = total_py
    out = np.empty((total_py, d, d))
    cdef double[:, :, ::1] ov = out
    if n == 0:
        out[0] = np.eye(d)
        return out
    work = np.empty((n + 1, d, d))
    work[0] = np.eye(d)
    cdef double[:, :, ::1] wv = work
    sym = np.zeros(n, dtype=np.int64)
    cdef long long[::1] sv_ = sym
    cdef long long idx = 0
    cdef int level = 0, j, r
    with nogil:
        while True:
            while level < n:
                _mm(&wv[level, 0, 0], &a[sv_[level], 0, 0], &wv[level + 1, 0, 0], d)
                level += 1
            for r in range(d * d):
                (&ov[idx, 0, 0])[r] = (&wv[n, 0, 0])[r]
            idx += 1
            if idx == total:
                break
            j = n - 1
            while sv_[j] == n_maps - 1:
                sv_[j] = 0
                j -= 1
            sv_[j] += 1
            level = j
    return out


def word_logsv_level(mats, int n):
    """Log singular values of A_w for all N^n words, lex order, (N^n, d)."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef int n_maps = a.shape[0], d = a.shape[1]
    _check_dim(d)
    total_py = int(n_maps) ** int(n)
    if total_py > (1 << 31):
        raise MemoryError(f"{n_maps}**{n} rows will not fit in memory")
    cdef long long total = total_py
    out = np.empty((total_py, d))
    cdef double[:, ::1] ov = out
    if n == 0:
        out[0] = 0.0
        return out
    work = np.empty((n + 1, d, d))
    work[0] = np.eye(d)
    cdef double[:, :, ::1] wv = work
    sym = np.zeros(n, dtype=np.int64)
    cdef long long[::1] sv_ = sym
    cdef double buf[MAXSQ]
    cdef double sval[MAXD]
    cdef long long idx = 0
    cdef int level = 0, j, r
    with nogil:
        while True:
            while level < n:
                _mm(&wv[level, 0, 0], &a[sv_[level], 0, 0], &wv[level + 1, 0, 0], d)
                level += 1
            for r in range(d * d):
                buf[r] = (&wv[n, 0, 0])[r]
            _jacobi_sv(buf, d, sval)
            for r in range(d):
                ov[idx, r] = log(sval[r])
            idx += 1
            if idx == total:
                break
            j = n - 1
            while sv_[j] == n_maps - 1:
                sv_[j] = 0
                j -= 1
            sv_[j] += 1
            level = j
    return out


cdef double _dfs_pressure(double[:, :, ::1] a, int n, double s, double shift, bint want_max) noexcept nogil:
    # single DFS pass: either the max of log phi^s (want_max) or the
    # Kahan-compensated sum of exp(log phi^s - shift) in lex order
    cdef int n_maps = a.shape[0], d = a.shape[1]
    cdef double work[(MAXD * MAXD) * 33]
    cdef long long sym[32]
    cdef double buf[MAXSQ]
    cdef double sval[MAXD]
    cdef long long total = 1
    cdef int i, j, r, level
    cdef double best = -1e308
    cdef double acc = 0.0, comp = 0.0, term, t, val
    for i in range(n):
        total *= n_maps
        sym[i] = 0
    for r in range(d * d):
        work[r] = 0.0
    for r in range(d):
        work[r * d + r] = 1.0
    level = 0
    cdef long long idx = 0
    while True:
        while level < n:
            _mm(&work[level * d * d], &a[sym[level], 0, 0], &work[(level + 1) * d * d], d)
            level += 1
        for r in range(d * d):
            buf[r] = work[n * d * d + r]
        _jacobi_sv(buf, d, sval)
        val = _log_svf(sval, d, s)
        if want_max:
            if val > best:
                best = val
        else:
            term = exp(val - shift) - comp
            t = acc + term
            comp = (t - acc) - term
            acc = t
        idx += 1
        if idx == total:
            break
        j = n - 1
        while sym[j] == n_maps - 1:
            sym[j] = 0
            j -= 1
        sym[j] += 1
        level = j
    if want_max:
        return best
    return acc


def pressure_logsumexp(mats, int n, double s):
    """log sum over all words of length n of phi^s(A_w); two DFS passes
    (max, then compensated sum) so the result is scheduling-independent."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef int d = a.shape[1]
    _check_dim(d)
    if n == 0:
        return 0.0
    if n > 32:
        raise ValueError("word length above 32 is outside any sane budget")
    cdef double top, total
    with nogil:
        top = _dfs_pressure(a, n, s, 0.0, True)
        total = _dfs_pressure(a, n, s, top, False)
    return top + log(total)


def qr_cocycle_batch(mats_t, symbols, int burn_in, int qr_every):
    """Accumulated log |diag R| of the QR-factorized cocycle, per trial.

    Semantics identical to the pure backend: re-factorize every
    ``qr_every`` steps, force a factorization at the burn-in boundary and
    at the end, discard logs from the first ``burn_in`` steps.
    """
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats_t, dtype=np.float64)
    cdef long long[:, ::1] sy = np.ascontiguousarray(symbols, dtype=np.int64)
    cdef int d = a.shape[1]
    cdef long long trials = sy.shape[0], steps = sy.shape[1]
    _check_dim(d)
    if burn_in >= steps:
        raise ValueError(f"steps ({steps}) must exceed burn-in ({burn_in})")
    if qr_every < 1:
        raise ValueError("qr_every must be >= 1")
    out = np.zeros((trials, d))
    cdef double[:, ::1] ov = out
    cdef double y[MAXSQ]
    cdef double z[MAXSQ]
    cdef int fault = 0
    cdef long long t, m
    cdef int r, status
    with nogil:
        for t in range(trials):
            for r in range(d * d):
                y[r] = 0.0
            for r in range(d):
                y[r * d + r] = 1.0
            for m in range(steps):
                _mm(&a[sy[t, m], 0, 0], y, z, d)
                for r in range(d * d):
                    y[r] = z[r]
                if (m + 1 == burn_in) or (m + 1 > burn_in and (m + 1 - burn_in) % qr_every == 0) or (m + 1 == steps):
                    if m + 1 > burn_in:
                        status = _mgs(y, d, d, &ov[t, 0])
                    else:
                        status = _mgs(y, d, d, NULL)
                    if status != 0:
                        fault = 1
                        break
            if fault:
                break
    if fault:
        raise ArithmeticError("cocycle re-normalization fault: collapsed diagonal")
    return out


def chain_qr_logs(mats, symbols, b0):
    """Per-step QR chain from the frame b0; returns (logs, bases)."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef long long[::1] sy = np.ascontiguousarray(symbols, dtype=np.int64)
    cdef double[:, ::1] b = np.ascontiguousarray(b0, dtype=np.float64)
    cdef int d = a.shape[1], k = b.shape[1]
    cdef long long steps = sy.shape[0]
    _check_dim(d)
    if b.shape[0] != d or k < 1 or k > d:
        raise ValueError(f"frame must be (d, k) with 1 <= k <= {d}")
    logs = np.empty((steps, k))
    bases = np.empty((steps + 1, d, k))
    cdef double[:, ::1] lv = logs
    cdef double[:, :, ::1] bv = bases
    cdef double y[MAXSQ]
    cdef double z[MAXSQ]
    cdef int fault = 0
    cdef long long m
    cdef int r, status
    with nogil:
        for r in range(d * k):
            y[r] = (&b[0, 0])[r]
            (&bv[0, 0, 0])[r] = y[r]
        for m in range(steps):
            _mm_rect(&a[sy[m], 0, 0], y, z, d, k)
            for r in range(k):
                lv[m, r] = 0.0
            status = _mgs(z, d, k, &lv[m, 0])
            if status != 0:
                fault = 1
                break
            for r in range(d * k):
                y[r] = z[r]
                (&bv[m + 1, 0, 0])[r] = z[r]
    if fault:
        raise ArithmeticError("frame re-normalization fault: collapsed diagonal")
    return logs, bases


def project_words_batch(mats, trans, symbols):
    """Truncated natural projection per symbol row, (m, d) points."""
    cdef double[:, :, ::1] a = np.ascontiguousarray(mats, dtype=np.float64)
    cdef double[:, ::1] tv = np.ascontiguousarray(trans, dtype=np.float64)
    cdef long long[:, ::1] sy = np.ascontiguousarray(symbols, dtype=np.int64)
    cdef int d = a.shape[1]
    cdef long long m = sy.shape[0], depth = sy.shape[1]
    _check_dim(d)
    out = np.zeros((m, d))
    cdef double[:, ::1] ov = out
    cdef double p[MAXSQ]
    cdef double q[MAXSQ]
    cdef long long i, kk
    cdef int r, c
    cdef long long s
    cdef double acc
    with nogil:
        for i in range(m):
            for r in range(d * d):
                p[r] = 0.0
            for r in range(d):
                p[r * d + r] = 1.0
            for kk in range(depth):
                s = sy[i, kk]
                for r in range(d):
                    acc = 0.0
                    for c in range(d):
                        acc += p[r * d + c] * tv[s, c]
                    ov[i, r] += acc
                if kk + 1 < depth:
                    _mm(p, &a[s, 0, 0], q, d)
                    for r in range(d * d):
                        p[r] = q[r]
    return out
