# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Metropolis sweeps for the log-gas and polyline distances."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()


cdef double _q(int family, const double[:] par, double x, double y) noexcept nogil:
    cdef double q = x * x + y * y
    cdef double zr, zi, pr, pi, tr, ti, tmp, poly, e, g, r2
    cdef int nk, j, k, m
    if family == 2:
        tr = x - par[1]
        ti = y - par[2]
        r2 = tr * tr + ti * ti
        if r2 == 0.0:
            return 1e300
        return q - par[0] * log(r2)
    if family == 1:
        nk = <int> par[0]
        poly = 0.0
        for j in range(nk):
            k = <int> par[1 + 3 * j]
            pr = 1.0
            pi = 0.0
            for m in range(k):
                tmp = pr * x - pi * y
                pi = pr * y + pi * x
                pr = tmp
            poly = poly + (par[2 + 3 * j] * pr - par[3 + 3 * j] * pi)
        q = q - 2.0 * poly
        g = par[1 + 3 * nk]
        if g > 0.0:
            tr = x / par[2 + 3 * nk]
            ti = y / par[3 + 3 * nk]
            e = sqrt(tr * tr + ti * ti) - 1.0
            if e > 0.0:
                r2 = 1.0 + x * x + y * y
                q = q + g * e * e * e * e * r2 * r2
    return q


def potential_values(int family, double[:] par, double[:] x, double[:] y):
    cdef Py_ssize_t i, m = x.shape[0]
    out = np.empty(m)
    cdef double[:] o = out
    for i in range(m):
        o[i] = _q(family, par, x[i], y[i])
    return out


def mh_run(double[:] x, double[:] y, int family, double[:] par, double beta_n,
           long[:] site, double[:] dx, double[:] dy, double[:] logu,
           int record_every, double[:, :] rec_x, double[:, :] rec_y):
    """Single-site Metropolis updates in place; returns the acceptance count.

    The state (x, y) is recorded into rec_x/rec_y after every record_every
    steps.  All randomness is supplied by the caller.
    """
    cdef Py_ssize_t n = x.shape[0], steps = site.shape[0]
    cdef Py_ssize_t s, k, j, r = 0
    cdef long acc = 0
    cdef double nx, ny, dh, d_old, d_new, ax, ay
    for s in range(steps):
        j = site[s]
        nx = x[j] + dx[s]
        ny = y[j] + dy[s]
        dh = beta_n * (_q(family, par, nx, ny) - _q(family, par, x[j], y[j]))
        for k in range(n):
            if k == j:
                continue
            ax = nx - x[k]
            ay = ny - y[k]
            d_new = ax * ax + ay * ay
            if d_new == 0.0:
                dh = 1e300
                break
            ax = x[j] - x[k]
            ay = y[j] - y[k]
            d_old = ax * ax + ay * ay
            dh = dh + (log(d_old) - log(d_new))
        if logu[s] < -dh:
            x[j] = nx
            y[j] = ny
            acc += 1
        if record_every > 0 and (s + 1) % record_every == 0:
            for k in range(n):
                rec_x[r, k] = x[k]
                rec_y[r, k] = y[k]
            r += 1
    return acc


def polyline_min_distance(double[:] px, double[:] py, double[:] ax, double[:] ay,
                          double[:] bx, double[:] by):
    """Distance from each point to the nearest of the segments [a_k, b_k]."""
    cdef Py_ssize_t i, k, m = px.shape[0], ns = ax.shape[0]
    out = np.empty(m)
    cdef double[:] o = out
    cdef double best, ux, uy, vx, vy, t, L, d, qx, qy
    for i in range(m):
        best = 1e308
        for k in range(ns):
            ux = bx[k] - ax[k]
            uy = by[k] - ay[k]
            vx = px[i] - ax[k]
            vy = py[i] - ay[k]
            L = ux * ux + uy * uy
            t = 0.0
            if L > 0.0:
                t = (ux * vx + uy * vy) / L
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            qx = vx - t * ux
            qy = vy - t * uy
            d = qx * qx + qy * qy
            if d < best:
                best = d
        o[i] = sqrt(best)
    return out
