# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled banded box-QP kernel.

Same algorithm as the numpy fallback in swarmpath.qp: projected-gradient
Cauchy step with exact segment line search, then a Newton step on the free
variable set via banded Cholesky. Results agree with the fallback to solver
tolerance; tests assert the equivalence.
"""

from libc.math cimport sqrt, fabs, INFINITY

import numpy as np


cdef void band_matvec(double[:, ::1] band, double[::1] x,
                      double[::1] y) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t bw = band.shape[0] - 1
    cdef Py_ssize_t j, d
    for j in range(n):
        y[j] = band[0, j] * x[j]
    for d in range(1, bw + 1):
        for j in range(n - d):
            y[j + d] += band[d, j] * x[j]
            y[j] += band[d, j] * x[j + d]


cdef int band_cholesky(double[:, ::1] a, Py_ssize_t nf) noexcept nogil:
    """In-place LL' of a banded SPD matrix in lower storage; 0 on success."""
    cdef Py_ssize_t bw = a.shape[0] - 1
    cdef Py_ssize_t j, i, k, lo
    cdef double s
    for j in range(nf):
        s = a[0, j]
        lo = j - bw if j >= bw else 0
        for k in range(lo, j):
            s -= a[j - k, k] * a[j - k, k]
        if s <= 0.0:
            return 1
        a[0, j] = sqrt(s)
        for i in range(j + 1, j + bw + 1 if j + bw + 1 <= nf else nf):
            s = a[i - j, j]
            lo = i - bw if i >= bw else 0
            for k in range(lo, j):
                s -= a[i - k, k] * a[j - k, k]
            a[i - j, j] = s / a[0, j]
    return 0


cdef void band_chol_solve(double[:, ::1] l, double[::1] b,
                          Py_ssize_t nf) noexcept nogil:
    """Solve LL' p = b in place given the banded factor from band_cholesky."""
    cdef Py_ssize_t bw = l.shape[0] - 1
    cdef Py_ssize_t j, d
    cdef double s
    for j in range(nf):
        s = b[j]
        for d in range(1, bw + 1 if bw < j + 1 else j + 1):
            s -= l[d, j - d] * b[j - d]
        b[j] = s / l[0, j]
    for j in range(nf - 1, -1, -1):
        s = b[j]
        for d in range(1, bw + 1 if j + bw < nf else nf - j):
            s -= l[d, j] * b[j + d]
        b[j] = s / l[0, j]


def solve_banded_boxqp(double[:, ::1] band, double[::1] q, double[::1] lo,
                       double[::1] up, double[::1] x0, double tol,
                       int max_iter):
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t bw = band.shape[0] - 1
    x_arr = np.array(x0, dtype=np.float64)
    g_arr = np.empty(n)
    d_arr = np.empty(n)
    hd_arr = np.empty(n)
    sub_arr = np.empty((bw + 1, n))
    fac_arr = np.empty((bw + 1, n))
    rhs_arr = np.empty(n)
    fidx_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] x = x_arr
    cdef double[::1] g = g_arr
    cdef double[::1] dv = d_arr
    cdef double[::1] hd = hd_arr
    cdef double[:, ::1] sub = sub_arr
    cdef double[:, ::1] fac = fac_arr
    cdef double[::1] rhs = rhs_arr
    cdef Py_ssize_t[::1] fidx = fidx_arr

    cdef double eps = 0.0, kkt = INFINITY, xc, dhd, gd, alpha, t, ridge, s
    cdef Py_ssize_t it = 0, j, a, d, nf, gap, fa, attempt
    cdef bint converged = 0, at_lo, at_up

    for j in range(n):
        if fabs(lo[j]) > eps:
            eps = fabs(lo[j])
        if fabs(up[j]) > eps:
            eps = fabs(up[j])
    eps = 1e-12 * (1.0 + eps)

    while it < max_iter:
        it += 1
        band_matvec(band, x, g)
        kkt = 0.0
        for j in range(n):
            g[j] += q[j]
            xc = x[j] - g[j]
            if xc < lo[j]:
                xc = lo[j]
            elif xc > up[j]:
                xc = up[j]
            dv[j] = xc - x[j]
            if fabs(dv[j]) > kkt:
                kkt = fabs(dv[j])
        if kkt <= tol:
            converged = 1
            break
        # Cauchy step along the feasible segment
        band_matvec(band, dv, hd)
        dhd = 0.0
        gd = 0.0
        for j in range(n):
            dhd += dv[j] * hd[j]
            gd += g[j] * dv[j]
        alpha = 1.0
        if dhd > 0.0 and -gd / dhd < 1.0:
            alpha = -gd / dhd
        for j in range(n):
            x[j] += alpha * dv[j]
            if x[j] < lo[j]:
                x[j] = lo[j]
            elif x[j] > up[j]:
                x[j] = up[j]
        # free set for the Newton step
        band_matvec(band, x, g)
        nf = 0
        for j in range(n):
            g[j] += q[j]
            if up[j] - lo[j] <= eps:
                continue
            at_lo = x[j] <= lo[j] + eps
            at_up = x[j] >= up[j] - eps
            if (at_lo and g[j] > 0.0) or (at_up and g[j] < 0.0):
                continue
            fidx[nf] = j
            nf += 1
        if nf == 0:
            continue
        for a in range(nf):
            fa = fidx[a]
            sub[0, a] = band[0, fa]
            for d in range(1, bw + 1):
                sub[d, a] = 0.0
                if a + d < nf:
                    gap = fidx[a + d] - fa
                    if gap <= bw:
                        sub[d, a] = band[gap, fa]
        ridge = 1e-12
        for a in range(nf):
            if sub[0, a] > ridge * 1e12:
                ridge = 1e-12 * sub[0, a]
        for attempt in range(3):
            for a in range(nf):
                for d in range(bw + 1):
                    fac[d, a] = sub[d, a]
            if attempt > 0:
                for a in range(nf):
                    fac[0, a] += ridge
                ridge *= 1e4
            if band_cholesky(fac, nf) == 0:
                break
        else:
            continue
        for a in range(nf):
            rhs[a] = -g[fidx[a]]
        band_chol_solve(fac, rhs, nf)
        # cap the Newton step at the first bound hit
        t = 1.0
        for a in range(nf):
            fa = fidx[a]
            if rhs[a] > 0.0:
                s = (up[fa] - x[fa]) / rhs[a]
                if s < t:
                    t = s
            elif rhs[a] < 0.0:
                s = (lo[fa] - x[fa]) / rhs[a]
                if s < t:
                    t = s
        if t > 0.0:
            for a in range(nf):
                fa = fidx[a]
                x[fa] += t * rhs[a]
                if x[fa] < lo[fa]:
                    x[fa] = lo[fa]
                elif x[fa] > up[fa]:
                    x[fa] = up[fa]

    if not converged:
        band_matvec(band, x, g)
        kkt = 0.0
        for j in range(n):
            g[j] += q[j]
            xc = x[j] - g[j]
            if xc < lo[j]:
                xc = lo[j]
            elif xc > up[j]:
                xc = up[j]
            if fabs(xc - x[j]) > kkt:
                kkt = fabs(xc - x[j])
        converged = kkt <= tol
    return x_arr, kkt, it, bool(converged)
