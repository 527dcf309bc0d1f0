# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled line-sweep kernels (OpenMP over lines).

Same contract as :mod:`adiheat._kernels_py`; see that module for the
meaning of the arguments.  Each line is processed start to finish by one
thread, and per-line maxima are written to an array, so the results do
not depend on the thread count.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport fabs

NAME = "cython"

cdef enum:
    RULE_MEAN_TEMPERATURE = 0
    IFACE_HARMONIC = 1


cdef struct Table:
    const double* knots
    const double* values
    const int* counts
    int stride


cdef struct Line:
    const int* layer
    const double* isc     # 1 / (wc * bar)
    const double* wfd     # wf / d
    int n
    bint dirich
    double T_dir


cdef Table make_table(const double[:, ::1] kn, const double[:, ::1] va, const int[::1] cnt):
    cdef Table t
    t.knots = &kn[0, 0]
    t.values = &va[0, 0]
    t.counts = &cnt[0]
    t.stride = kn.shape[1]
    return t


cdef inline Line make_line(const int* layer, const double* isc, const double* wfd, int n, bint dirich,
                           double T_dir) noexcept nogil:
    cdef Line ln
    ln.layer = layer
    ln.isc = isc
    ln.wfd = wfd
    ln.n = n
    ln.dirich = dirich
    ln.T_dir = T_dir
    return ln


cdef inline double interp(const Table* t, int m, double x) noexcept nogil:
    cdef int n = t.counts[m]
    cdef const double* kn = t.knots + m * t.stride
    cdef const double* va = t.values + m * t.stride
    cdef int lo, hi, mid
    if n == 0:
        return 0.0
    if x <= kn[0]:
        return va[0]
    if x >= kn[n - 1]:
        return va[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if kn[mid] <= x:
            lo = mid
        else:
            hi = mid
    return (va[hi] - va[lo]) / (kn[hi] - kn[lo]) * (x - kn[lo]) + va[lo]


cdef inline double side_lambda(const Table* lam, int m, double ta, double tb, int rule) noexcept nogil:
    if rule == RULE_MEAN_TEMPERATURE:
        return interp(lam, m, 0.5 * (ta + tb))
    return 0.5 * (interp(lam, m, ta) + interp(lam, m, tb))


cdef inline double face_lambda(const Table* lam, int ma, int mb, double ta, double tb,
                               int rule, int iface) noexcept nogil:
    cdef double la = side_lambda(lam, ma, ta, tb, rule)
    cdef double lb
    if iface == IFACE_HARMONIC and ma != mb and mb >= 0:
        lb = side_lambda(lam, mb, ta, tb, rule)
        return 2.0 * la * lb / (la + lb)
    return la


cdef inline void line_faces(const double* T, const Line* ln, const Table* lam, int rule, int iface,
                            double* A) noexcept nogil:
    # A[k] is the conductance of the face between points k-1 and k
    cdef int k
    cdef int n = ln.n
    A[0] = 0.0
    for k in range(1, n):
        A[k] = ln.wfd[k] * face_lambda(lam, ln.layer[k - 1], ln.layer[k], T[k - 1], T[k], rule, iface)
    if ln.dirich:
        A[n] = ln.wfd[n] * interp(lam, ln.layer[n - 1], ln.T_dir)
    else:
        A[n] = 0.0


cdef void operator_line(const double* T, Line ln, const Table* lam, int rule, int iface, int npt,
                        double* A, double* out) noexcept nogil:
    cdef int k
    cdef int n = ln.n
    cdef double fin = 0.0
    cdef double fout
    line_faces(T, &ln, lam, rule, iface, A)
    for k in range(n):
        if k + 1 < n:
            fout = A[k + 1] * (T[k + 1] - T[k])
        elif ln.dirich:
            fout = 2.0 * A[n] * (ln.T_dir - T[k])
        else:
            fout = 0.0
        out[k] = (fout - fin) * ln.isc[k]
        fin = fout
    for k in range(n, npt):
        out[k] = 0.0


cdef int sweep_line(const double* Ti, const double* Tb, const double* ex, const double* capf, bint frozen,
                    double inv_ht, Line ln, const double* rho, const Table* cv, const Table* lam,
                    const Table* chi, const double* src_amp, int rule, int iface, int npt,
                    double* A, double* cp, double* dp, double* out, double* line_max) noexcept nogil:
    # solves for the update out - Ti, so a steady state reproduces itself exactly
    cdef int k, m
    cdef int n = ln.n
    cdef double cap, x, sc, lower, upper, diag, rhs, den, g, diff, mx
    cdef double fin = 0.0
    cdef double fout
    line_faces(Ti, &ln, lam, rule, iface, A)
    for k in range(n):
        m = ln.layer[k]
        sc = ln.isc[k]
        x = 0.0
        if frozen:
            cap = capf[k]
        else:
            cap = rho[m] * interp(cv, m, Ti[k])
            if src_amp[m] != 0.0:
                x = src_amp[m] * interp(chi, m, Ti[k])
        lower = -A[k] * sc
        upper = -A[k + 1] * sc
        diag = cap * inv_ht + (A[k] + A[k + 1]) * sc
        if k + 1 < n:
            fout = A[k + 1] * (Ti[k + 1] - Ti[k])
        elif ln.dirich:
            # ghost elimination doubles the end-face coupling
            g = A[n] * sc
            diag = diag + g
            fout = 2.0 * A[n] * (ln.T_dir - Ti[k])
        else:
            fout = 0.0
        rhs = cap * inv_ht * (Tb[k] - Ti[k]) + ex[k] + x + (fout - fin) * sc
        fin = fout
        if k == 0:
            den = diag
        else:
            den = diag - lower * cp[k - 1]
        if den == 0.0:
            line_max[0] = 0.0
            return 1
        den = 1.0 / den
        cp[k] = upper * den
        if k == 0:
            dp[k] = rhs * den
        else:
            dp[k] = (rhs - lower * dp[k - 1]) * den
    mx = 0.0
    for k in range(n - 1, -1, -1):
        if k == n - 1:
            x = dp[k]
        else:
            x = dp[k] - cp[k] * dp[k + 1]
        dp[k] = x
        out[k] = Ti[k] + x
        diff = fabs(x)
        if diff > mx or diff != diff:
            mx = diff
    for k in range(n, npt):
        out[k] = Ti[k]
    line_max[0] = mx
    return 0


def _inv_scale(wc, bar):
    return np.ascontiguousarray(1.0 / (np.asarray(wc, dtype=float) * np.asarray(bar, dtype=float)))


def _face_factor(wf, d):
    return np.ascontiguousarray(np.asarray(wf, dtype=float) / np.asarray(d, dtype=float))


def apply_operator(const double[:, ::1] T, const int[:, ::1] layer, const int[::1] length,
                   wc, bar, wf, d, const unsigned char[::1] dirichlet, double T_dir,
                   const double[:, ::1] lk, const double[:, ::1] lv, const int[::1] ln,
                   int rule, int iface, double[:, ::1] out, int workers=1, bint interleave=False):
    cdef Py_ssize_t nl = T.shape[0]
    cdef int npt = T.shape[1]
    if nl == 0 or npt == 0:
        return np.asarray(out)
    cdef double[:, ::1] A = np.empty((nl, npt + 1))
    cdef const double[::1] isc = _inv_scale(wc, bar)
    cdef const double[::1] wfd = _face_factor(wf, d)
    cdef Table lam = make_table(lk, lv, ln)
    cdef Py_ssize_t l
    cdef int chunk = 1 if interleave else <int>((nl + workers - 1) // workers)
    for l in prange(nl, nogil=True, num_threads=workers, schedule="static", chunksize=chunk):
        operator_line(&T[l, 0], make_line(&layer[l, 0], &isc[0], &wfd[0], length[l], dirichlet[l] != 0, T_dir),
                      &lam, rule, iface, npt, &A[l, 0], &out[l, 0])
    return np.asarray(out)


def sweep_iteration(const double[:, ::1] T_iter, const double[:, ::1] T_base, const double[:, ::1] explicit,
                    cap_fixed, bint frozen, double half_tau,
                    const int[:, ::1] layer, const int[::1] length, wc, bar, wf, d,
                    const unsigned char[::1] dirichlet, double T_dir, const double[::1] rho,
                    const double[:, ::1] cvk, const double[:, ::1] cvv, const int[::1] cvn,
                    const double[:, ::1] lk, const double[:, ::1] lv, const int[::1] ln,
                    const double[:, ::1] chik, const double[:, ::1] chiv, const int[::1] chin,
                    const double[::1] src_amp, int rule, int iface,
                    double[:, ::1] out, double[::1] line_max, int[::1] status,
                    int workers=1, bint interleave=False):
    cdef Py_ssize_t nl = T_iter.shape[0]
    cdef int npt = T_iter.shape[1]
    if nl == 0 or npt == 0:
        return
    cdef double[:, ::1] A = np.empty((nl, npt + 1))
    cdef double[:, ::1] cp = np.empty((nl, npt))
    cdef double[:, ::1] dp = np.empty((nl, npt))
    cdef const double[::1] isc = _inv_scale(wc, bar)
    cdef const double[::1] wfd = _face_factor(wf, d)
    cdef const double[:, ::1] capf = cap_fixed if frozen else T_iter
    cdef Table cv = make_table(cvk, cvv, cvn)
    cdef Table lam = make_table(lk, lv, ln)
    cdef Table chi = make_table(chik, chiv, chin)
    cdef double inv_ht = 1.0 / half_tau
    cdef Py_ssize_t l
    cdef int chunk = 1 if interleave else <int>((nl + workers - 1) // workers)
    for l in prange(nl, nogil=True, num_threads=workers, schedule="static", chunksize=chunk):
        status[l] = sweep_line(
            &T_iter[l, 0], &T_base[l, 0], &explicit[l, 0], &capf[l, 0], frozen, inv_ht,
            make_line(&layer[l, 0], &isc[0], &wfd[0], length[l], dirichlet[l] != 0, T_dir),
            &rho[0], &cv, &lam, &chi, &src_amp[0], rule, iface, npt,
            &A[l, 0], &cp[l, 0], &dp[l, 0], &out[l, 0], &line_max[l])
