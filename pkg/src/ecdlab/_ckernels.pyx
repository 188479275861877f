# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: telegraph first-passage Monte Carlo and tridiagonal eigensolver.

Every routine mirrors a pure-Python twin in ``_pykernels`` operation for
operation, so the two backends agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel import prange
from libc.math cimport fabs, log1p, asinh, hypot, copysign, INFINITY, sqrt
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

from .errors import SolverError

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _stream_init(uint64_t seed, uint64_t index) noexcept nogil:
    return _mix(seed + GOLDEN * (index + 1))


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    state[0] += GOLDEN
    return <double>(_mix(state[0]) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double _expo(uint64_t* state, double rate) noexcept nogil:
    return -log1p(-_uniform(state)) / rate


def uniform_stream(uint64_t seed, uint64_t index, Py_ssize_t count):
    """First ``count`` uniforms of the stream for ``(seed, index)``."""
    cdef uint64_t st = _stream_init(seed, index)
    out = np.empty(count)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(count):
        o[i] = _uniform(&st)
    return out


cdef struct Table:
    double c
    double xi0
    double dxi
    Py_ssize_t n
    double* W
    double* D


cdef inline double _w_eval(const Table* tb, double x) noexcept nogil:
    cdef double xi = asinh(x / tb.c)
    cdef double f = (xi - tb.xi0) / tb.dxi
    cdef Py_ssize_t i
    if f <= 0.0:
        f = 0.0
    elif f >= tb.n - 1:
        f = tb.n - 1
    i = <Py_ssize_t>f
    if i > tb.n - 2:
        i = tb.n - 2
    cdef double t = f - i
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    cdef double h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    cdef double h10 = t3 - 2.0 * t2 + t
    cdef double h01 = -2.0 * t3 + 3.0 * t2
    cdef double h11 = t3 - t2
    return (h00 * tb.W[i] + h10 * tb.dxi * tb.D[i]
            + h01 * tb.W[i + 1] + h11 * tb.dxi * tb.D[i + 1])


def w_eval(double c, double xi0, double dxi, double[::1] W, double[::1] D, double[::1] x):
    """Vectorised table lookup of the real-time antiderivative."""
    cdef Table tb
    tb.c = c; tb.xi0 = xi0; tb.dxi = dxi; tb.n = W.shape[0]
    tb.W = &W[0]; tb.D = &D[0]
    out = np.empty(x.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        o[i] = _w_eval(&tb, x[i])
    return out


cdef void _one(const Table* tb, double L_hit, double x_d, double tail_cost, double lam,
               int u0, double max_s, uint64_t seed, uint64_t traj,
               signed char* hit, double* t_out, double* s_out, int64_t* flips_out,
               int64_t* legs_out, signed char* first_out, int64_t* clos_out) noexcept nogil:
    cdef uint64_t st = _stream_init(seed, traj)
    cdef double x = 0.0, s = 0.0, t = 0.0, b, dist, step, wn
    cdef double wx = _w_eval(tb, 0.0)
    cdef double w0 = wx
    cdef double wt = _w_eval(tb, L_hit)
    cdef double wd = _w_eval(tb, x_d) if x_d > -INFINITY else 0.0
    cdef int u = u0
    cdef int64_t flips = 0, legs = 0, clos = 0
    cdef signed char first = -1, h = 0
    cdef double tf = _expo(&st, lam) if lam > 0.0 else INFINITY
    while True:
        if u > 0:
            b = 0.0 if x < 0.0 else L_hit
        else:
            b = 0.0 if x > 0.0 else x_d
        dist = fabs(b - x)
        step = tf if tf < dist else dist
        if s + step > max_s:
            step = max_s - s
            x = x + u * step
            s = max_s
            wn = _w_eval(tb, x)
            t += fabs(wn - wx)
            break
        if tf < dist:
            x = x + u * tf
            s += tf
            wn = _w_eval(tb, x)
            t += fabs(wn - wx)
            wx = wn
            flips += 1
            u = -u
            tf = _expo(&st, lam)
        else:
            x = b
            s += dist
            tf -= dist
            if b == L_hit:
                t += fabs(wt - wx)
                legs += 1
                if first < 0:
                    first = 1
                h = 1
                break
            elif b == 0.0:
                t += fabs(w0 - wx)
                wx = w0
                legs += 1
                if u < 0 and first < 0:
                    first = 0
            else:
                t += fabs(wd - wx) + tail_cost
                wx = wd
                clos += 1
                u = 1
                tf = _expo(&st, lam)
    hit[0] = h
    t_out[0] = t
    s_out[0] = s
    flips_out[0] = flips
    legs_out[0] = legs
    first_out[0] = first
    clos_out[0] = clos


def simulate_batch(double c, double xi0, double dxi, double[::1] W, double[::1] D,
                   double L_hit, double x_d, double tail_cost, double lam, int u0,
                   double max_s, uint64_t seed, uint64_t first_traj, Py_ssize_t n_traj,
                   int n_threads=1):
    """Run ``n_traj`` telegraph trajectories with indices ``first_traj ...``."""
    cdef Table tb
    tb.c = c; tb.xi0 = xi0; tb.dxi = dxi; tb.n = W.shape[0]
    tb.W = &W[0]; tb.D = &D[0]
    hit = np.zeros(n_traj, dtype=np.int8)
    t_real = np.zeros(n_traj)
    s_el = np.zeros(n_traj)
    flips = np.zeros(n_traj, dtype=np.int64)
    legs = np.zeros(n_traj, dtype=np.int64)
    first = np.zeros(n_traj, dtype=np.int8)
    clos = np.zeros(n_traj, dtype=np.int64)
    cdef signed char[::1] hv = hit, fv = first
    cdef double[::1] tv = t_real, sv = s_el
    cdef int64_t[::1] flv = flips, lv = legs, cv = clos
    cdef Py_ssize_t k
    for k in prange(n_traj, nogil=True, schedule="dynamic", chunksize=64,
                    num_threads=max(n_threads, 1)):
        _one(&tb, L_hit, x_d, tail_cost, lam, u0, max_s, seed, first_traj + k,
             &hv[k], &tv[k], &sv[k], &flv[k], &lv[k], &fv[k], &cv[k])
    return hit, t_real, s_el, flips, legs, first, clos


def count_flips(double lam, double duration, uint64_t seed, Py_ssize_t n_traj):
    """Number of rate-``lam`` Poisson events in ``[0, duration]`` per stream."""
    out = np.zeros(n_traj, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t k
    cdef uint64_t st
    cdef double s
    cdef int64_t m
    for k in range(n_traj):
        st = _stream_init(seed, k)
        s = _expo(&st, lam)
        m = 0
        while s <= duration:
            m += 1
            s += _expo(&st, lam)
        o[k] = m
    return out


# ---------------------------------------------------------------------------
# symmetric tridiagonal eigenproblem

def tridiag_eigvals(double[::1] diag, double[::1] off):
    """All eigenvalues, ascending, by implicit-shift QL (values only)."""
    cdef Py_ssize_t n = diag.shape[0]
    d_arr = np.array(diag, dtype=float)
    e_arr = np.zeros(n)
    if n > 1:
        e_arr[:n - 1] = off
    cdef double[::1] d = d_arr, e = e_arr
    cdef Py_ssize_t l, m, i
    cdef int it
    cdef double dd, g, r, s, c, p, f, b
    cdef bint under
    cdef double EPS = 2.220446049250313e-16
    with nogil:
        for l in range(n):
            it = 0
            while True:
                m = l
                while m < n - 1:
                    dd = fabs(d[m]) + fabs(d[m + 1])
                    if fabs(e[m]) <= EPS * dd:
                        break
                    m += 1
                if m == l:
                    break
                it += 1
                if it > 60:
                    with gil:
                        raise SolverError("implicit QL did not converge")
                g = (d[l + 1] - d[l]) / (2.0 * e[l])
                r = hypot(g, 1.0)
                g = d[m] - d[l] + e[l] / (g + copysign(r, g))
                s = 1.0
                c = 1.0
                p = 0.0
                under = False
                i = m - 1
                while i >= l:
                    f = s * e[i]
                    b = c * e[i]
                    r = hypot(f, g)
                    e[i + 1] = r
                    if r == 0.0:
                        d[i + 1] -= p
                        e[m] = 0.0
                        under = True
                        break
                    s = f / r
                    c = g / r
                    g = d[i + 1] - p
                    r = (d[i] - g) * s + 2.0 * c * b
                    p = s * r
                    d[i + 1] = g + p
                    g = c * r - b
                    i -= 1
                if under:
                    continue
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    d_arr.sort()
    return d_arr


cdef void _factor_solve(const double* diag, const double* off, Py_ssize_t n, double lam,
                        double eps3, double* dl, double* dd, double* du, double* du2,
                        char* piv, double* x) noexcept nogil:
    """Solve ``(T - lam I) y = x`` in place by LU with partial pivoting."""
    cdef Py_ssize_t i
    cdef double fact, temp
    for i in range(n):
        dd[i] = diag[i] - lam
    for i in range(n - 1):
        dl[i] = off[i]
        du[i] = off[i]
    for i in range(n - 1):
        piv[i] = 0
        if fabs(dd[i]) >= fabs(dl[i]):
            if dd[i] != 0.0:
                fact = dl[i] / dd[i]
                dl[i] = fact
                dd[i + 1] -= fact * du[i]
            if i < n - 2:
                du2[i] = 0.0
        else:
            fact = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = temp - fact * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            piv[i] = 1
    for i in range(n):
        if fabs(dd[i]) < eps3:
            dd[i] = eps3 if dd[i] >= 0.0 else -eps3
    for i in range(n - 1):
        if piv[i] == 0:
            x[i + 1] -= dl[i] * x[i]
        else:
            temp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = temp - dl[i] * x[i]
    x[n - 1] /= dd[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    i = n - 3
    while i >= 0:
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
        i -= 1


def tridiag_eigvecs(double[::1] diag, double[::1] off, double[::1] evals,
                    double cluster_tol=1e-5, int n_iter=3):
    """Eigenvectors by inverse iteration, one row per eigenvalue.

    Eigenvalues closer than ``cluster_tol * ||T||`` form a cluster whose
    vectors are orthogonalised against each other after every solve.
    """
    cdef Py_ssize_t n = diag.shape[0], m = evals.shape[0]
    Z = np.zeros((m, n))
    cdef double[:, ::1] z = Z
    cdef double tnorm = 0.0, v, nrm, dot, lam, prev_lam = -INFINITY, big
    cdef Py_ssize_t i, j, k, it, start = 0, imax
    for i in range(n):
        v = fabs(diag[i])
        if i > 0:
            v += fabs(off[i - 1])
        if i < n - 1:
            v += fabs(off[i])
        if v > tnorm:
            tnorm = v
    cdef double eps3 = 10.0 * 2.220446049250313e-16 * tnorm
    cdef double ortol = cluster_tol * tnorm
    cdef double* dl = <double*>malloc(n * sizeof(double))
    cdef double* dd = <double*>malloc(n * sizeof(double))
    cdef double* du = <double*>malloc(n * sizeof(double))
    cdef double* du2 = <double*>malloc(n * sizeof(double))
    cdef char* piv = <char*>malloc(n * sizeof(char))
    try:
        with nogil:
            for j in range(m):
                lam = evals[j]
                if j == 0 or lam - evals[j - 1] > ortol:
                    start = j
                elif lam - prev_lam < eps3:
                    lam = prev_lam + eps3
                prev_lam = lam
                for i in range(n):
                    z[j, i] = 1.0 + 0.5 * _start_component(i, j)
                for it in range(n_iter + 1):
                    _factor_solve(&diag[0], &off[0], n, lam, eps3, dl, dd, du, du2, piv, &z[j, 0])
                    for k in range(start, j):
                        dot = 0.0
                        for i in range(n):
                            dot += z[k, i] * z[j, i]
                        for i in range(n):
                            z[j, i] -= dot * z[k, i]
                    nrm = 0.0
                    for i in range(n):
                        nrm += z[j, i] * z[j, i]
                    nrm = 1.0 / sqrt(nrm)
                    for i in range(n):
                        z[j, i] *= nrm
                big = 0.0
                for i in range(n):
                    if fabs(z[j, i]) > big:
                        big = fabs(z[j, i])
                imax = 0
                while fabs(z[j, imax]) <= big / (1.0 + 1e-9):
                    imax += 1
                if z[j, imax] < 0.0:
                    for i in range(n):
                        z[j, i] = -z[j, i]
    finally:
        free(dl); free(dd); free(du); free(du2); free(piv)
    return Z


cdef inline double _start_component(Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef uint64_t st = _stream_init(<uint64_t>j, <uint64_t>i)
    return 2.0 * _uniform(&st) - 1.0
