"""Pure-Python twins of the compiled kernels.

The Monte Carlo routines repeat the compiled arithmetic step for step, so
trajectories agree with the extension to rounding.  The eigensolver uses a
different but equally exact route that vectorises well in numpy: Sturm
bisection for the eigenvalues and simultaneous inverse iteration for the
vectors.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import SolverError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_EPS = 2.220446049250313e-16


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Stream:
    """Counter-based splitmix64 stream keyed by ``(seed, index)``."""

    __slots__ = ("state",)

    def __init__(self, seed: int, index: int):
        self.state = _mix((seed + _GOLDEN * (index + 1)) & _MASK)

    def uniform(self) -> float:
        self.state = (self.state + _GOLDEN) & _MASK
        return (_mix(self.state) >> 11) * (1.0 / 9007199254740992.0)

    def expo(self, rate: float) -> float:
        return -math.log1p(-self.uniform()) / rate


def uniform_stream(seed, index, count):
    st = Stream(seed, index)
    return np.array([st.uniform() for _ in range(count)])


class _Table:
    __slots__ = ("c", "xi0", "dxi", "n", "W", "D")

    def __init__(self, c, xi0, dxi, W, D):
        self.c, self.xi0, self.dxi = c, xi0, dxi
        self.n = len(W)
        self.W = np.asarray(W, dtype=float).tolist()
        self.D = np.asarray(D, dtype=float).tolist()

    def __call__(self, x: float) -> float:
        f = (math.asinh(x / self.c) - self.xi0) / self.dxi
        if f <= 0.0:
            f = 0.0
        elif f >= self.n - 1:
            f = float(self.n - 1)
        i = min(int(f), self.n - 2)
        t = f - i
        t2 = t * t
        t3 = t2 * t
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + t
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        return (h00 * self.W[i] + h10 * self.dxi * self.D[i]
                + h01 * self.W[i + 1] + h11 * self.dxi * self.D[i + 1])


def w_eval(c, xi0, dxi, W, D, x):
    tb = _Table(c, xi0, dxi, W, D)
    return np.array([tb(v) for v in np.asarray(x, dtype=float)])


def simulate_one(tb, L_hit, x_d, tail_cost, lam, u0, max_s, seed, traj, record=False):
    """One telegraph trajectory; with ``record`` also returns the flip log.

    The log holds ``(s, x, kind)`` rows, ``kind`` in ``{"flip", "zero",
    "closure", "hit", "timeout"}``.
    """
    st = Stream(seed, traj)
    x = s = t = 0.0
    wx = w0 = tb(0.0)
    wt = tb(L_hit)
    wd = tb(x_d) if x_d > -math.inf else 0.0
    u = u0
    flips = legs = clos = 0
    first = -1
    h = 0
    tf = st.expo(lam) if lam > 0.0 else math.inf
    log = [] if record else None
    while True:
        if u > 0:
            b = 0.0 if x < 0.0 else L_hit
        else:
            b = 0.0 if x > 0.0 else x_d
        dist = abs(b - x)
        step = tf if tf < dist else dist
        if s + step > max_s:
            step = max_s - s
            x = x + u * step
            s = max_s
            t += abs(tb(x) - wx)
            if record:
                log.append((s, x, "timeout"))
            break
        if tf < dist:
            x = x + u * tf
            s += tf
            wn = tb(x)
            t += abs(wn - wx)
            wx = wn
            flips += 1
            u = -u
            tf = st.expo(lam)
            if record:
                log.append((s, x, "flip"))
        else:
            x = b
            s += dist
            tf -= dist
            if b == L_hit:
                t += abs(wt - wx)
                legs += 1
                if first < 0:
                    first = 1
                h = 1
                if record:
                    log.append((s, x, "hit"))
                break
            elif b == 0.0:
                t += abs(w0 - wx)
                wx = w0
                legs += 1
                if u < 0 and first < 0:
                    first = 0
                if record:
                    log.append((s, x, "zero"))
            else:
                t += abs(wd - wx) + tail_cost
                wx = wd
                clos += 1
                u = 1
                tf = st.expo(lam)
                if record:
                    log.append((s, x, "closure"))
    out = (h, t, s, flips, legs, first, clos)
    return (out, log) if record else out


def simulate_batch(c, xi0, dxi, W, D, L_hit, x_d, tail_cost, lam, u0, max_s, seed,
                   first_traj, n_traj, n_threads=1):
    tb = _Table(c, xi0, dxi, W, D)
    rows = [simulate_one(tb, L_hit, x_d, tail_cost, lam, u0, max_s, seed, first_traj + k)
            for k in range(n_traj)]
    cols = list(zip(*rows)) if rows else [[]] * 7
    return (np.array(cols[0], dtype=np.int8), np.array(cols[1], dtype=float),
            np.array(cols[2], dtype=float), np.array(cols[3], dtype=np.int64),
            np.array(cols[4], dtype=np.int64), np.array(cols[5], dtype=np.int8),
            np.array(cols[6], dtype=np.int64))


def count_flips(lam, duration, seed, n_traj):
    out = np.zeros(n_traj, dtype=np.int64)
    for k in range(n_traj):
        st = Stream(seed, k)
        s = st.expo(lam)
        m = 0
        while s <= duration:
            m += 1
            s += st.expo(lam)
        out[k] = m
    return out


# ---------------------------------------------------------------------------
# symmetric tridiagonal eigenproblem

def _sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues below each entry of ``x``."""
    q = diag[0] - x
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, len(diag)):
        q = diag[i] - x - off2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def tridiag_eigvals(diag, off):
    """All eigenvalues, ascending, by vectorised Sturm-sequence bisection."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    n = len(diag)
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    glo = float(np.min(diag - radius))
    ghi = float(np.max(diag + radius))
    tnorm = max(abs(glo), abs(ghi), 1e-300)
    pivmin = np.finfo(float).tiny * max(float(np.max(off * off, initial=0.0)), 1.0)
    lo = np.full(n, glo - 2 * _EPS * tnorm)
    hi = np.full(n, ghi + 2 * _EPS * tnorm)
    k = np.arange(n)
    off2 = off * off
    tol = 2 * _EPS * tnorm
    for _ in range(200):
        active = hi - lo > tol + 2 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        below = _sturm_count(diag, off2, mid, pivmin) > k
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    else:
        raise SolverError("bisection did not converge")
    return 0.5 * (lo + hi)


def _mix_np(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _start_components(n, m):
    """Starting vectors; entry ``(j, i)`` is drawn from the stream ``(seed=j, index=i)``."""
    g = np.uint64(_GOLDEN)
    j = np.arange(m, dtype=np.uint64)[:, None]
    i = np.arange(n, dtype=np.uint64)[None, :]
    state = _mix_np(j + g * (i + np.uint64(1))) + g
    u = (_mix_np(state) >> np.uint64(11)).astype(float) * (1.0 / 9007199254740992.0)
    return 1.0 + 0.5 * (2.0 * u - 1.0)


def tridiag_eigvecs(diag, off, evals, cluster_tol=1e-5, n_iter=3):
    """Eigenvectors (rows) by inverse iteration run for all shifts at once."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    evals = np.asarray(evals, dtype=float).copy()
    n, m = len(diag), len(evals)
    absoff = np.abs(off)
    rowsum = np.abs(diag).copy()
    rowsum[:-1] += absoff
    rowsum[1:] += absoff
    tnorm = float(rowsum.max())
    eps3 = 10.0 * _EPS * tnorm
    ortol = cluster_tol * tnorm

    starts = np.zeros(m, dtype=np.int64)
    for j in range(1, m):
        if evals[j] - evals[j - 1] > ortol:
            starts[j] = j
        else:
            starts[j] = starts[j - 1]
            if evals[j] - evals[j - 1] < eps3:
                evals[j] = evals[j - 1] + eps3
    clusters = [np.flatnonzero(starts == s0) for s0 in np.unique(starts)]
    clusters = [c for c in clusters if len(c) > 1]

    # LU with partial pivoting of T - lam I for every shift, columns = shifts
    dd = diag[:, None] - evals[None, :]
    dl = np.repeat(off[:, None], m, axis=1)
    du = dl.copy()
    du2 = np.zeros((max(n - 2, 0), m))
    piv = np.zeros((max(n - 1, 0), m), dtype=bool)
    for i in range(n - 1):
        swap = np.abs(dd[i]) < np.abs(dl[i])
        safe = np.where(dd[i] != 0.0, dd[i], 1.0)
        fact_k = np.where(dd[i] != 0.0, dl[i] / safe, 0.0)
        fact_s = dd[i] / np.where(swap, dl[i], 1.0)
        new_dd_i = np.where(swap, dl[i], dd[i])
        new_dl_i = np.where(swap, fact_s, fact_k)
        old_du_i = du[i].copy()
        new_du_i = np.where(swap, dd[i + 1], du[i])
        new_dd_next = np.where(swap, old_du_i - fact_s * dd[i + 1], dd[i + 1] - fact_k * du[i])
        dd[i], dl[i], du[i], dd[i + 1] = new_dd_i, new_dl_i, new_du_i, new_dd_next
        if i < n - 2:
            du2[i] = np.where(swap, du[i + 1], 0.0)
            du[i + 1] = np.where(swap, -fact_s * du[i + 1], du[i + 1])
        piv[i] = swap
    small = np.abs(dd) < eps3
    dd = np.where(small, np.where(dd >= 0.0, eps3, -eps3), dd)

    def solve(x):
        x = x.copy()
        for i in range(n - 1):
            xi, xn = x[i].copy(), x[i + 1].copy()
            x[i] = np.where(piv[i], xn, xi)
            x[i + 1] = np.where(piv[i], xi - dl[i] * xn, xn - dl[i] * xi)
        x[n - 1] /= dd[n - 1]
        if n > 1:
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
        for i in range(n - 3, -1, -1):
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
        return x

    X = _start_components(n, m).T
    for _ in range(n_iter + 1):
        X = solve(X)
        for c in clusters:
            for a, j in enumerate(c):
                for k in c[:a]:
                    X[:, j] -= (X[:, k] @ X[:, j]) * X[:, k]
                X[:, j] /= np.linalg.norm(X[:, j])
        X /= np.linalg.norm(X, axis=0)
    Z = X.T.copy()
    imax = np.argmax(np.abs(Z) > np.abs(Z).max(axis=1, keepdims=True) / (1.0 + 1e-9), axis=1)
    sign = np.sign(Z[np.arange(m), imax])
    Z *= np.where(sign == 0, 1.0, sign)[:, None]
    return Z
