"""Pure-Python twin of the compiled core, with identical arithmetic order."""
import math

import numpy as np


def _q(family, par, x, y):
    q = x * x + y * y
    if family == 2:
        tr = x - par[1]
        ti = y - par[2]
        r2 = tr * tr + ti * ti
        if r2 == 0.0:
            return 1e300
        return q - par[0] * math.log(r2)
    if family == 1:
        nk = int(par[0])
        poly = 0.0
        for j in range(nk):
            k = int(par[1 + 3 * j])
            pr, pi = 1.0, 0.0
            for _ in range(k):
                pr, pi = pr * x - pi * y, pr * y + pi * x
            poly = poly + (par[2 + 3 * j] * pr - par[3 + 3 * j] * pi)
        q = q - 2.0 * poly
        g = par[1 + 3 * nk]
        if g > 0.0:
            tr = x / par[2 + 3 * nk]
            ti = y / par[3 + 3 * nk]
            e = math.sqrt(tr * tr + ti * ti) - 1.0
            if e > 0.0:
                r2 = 1.0 + x * x + y * y
                q = q + g * e * e * e * e * r2 * r2
    return q


def potential_values(family, par, x, y):
    par = [float(v) for v in par]
    return np.array([_q(family, par, float(a), float(b)) for a, b in zip(x, y)])


def mh_run(x, y, family, par, beta_n, site, dx, dy, logu, record_every, rec_x, rec_y):
    par = [float(v) for v in par]
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    n = len(xs)
    acc = 0
    r = 0
    log = math.log
    site = site.tolist()
    dx = dx.tolist()
    dy = dy.tolist()
    logu = logu.tolist()
    for s in range(len(site)):
        j = site[s]
        xj, yj = xs[j], ys[j]
        nx = xj + dx[s]
        ny = yj + dy[s]
        dh = beta_n * (_q(family, par, nx, ny) - _q(family, par, xj, yj))
        for k in range(n):
            if k == j:
                continue
            ax = nx - xs[k]
            ay = ny - ys[k]
            d_new = ax * ax + ay * ay
            if d_new == 0.0:
                dh = 1e300
                break
            ax = xj - xs[k]
            ay = yj - ys[k]
            d_old = ax * ax + ay * ay
            dh = dh + (log(d_old) - log(d_new))
        if logu[s] < -dh:
            xs[j] = nx
            ys[j] = ny
            acc += 1
        if record_every > 0 and (s + 1) % record_every == 0:
            rec_x[r, :] = xs
            rec_y[r, :] = ys
            r += 1
    x[:] = xs
    y[:] = ys
    return acc


def polyline_min_distance(px, py, ax, ay, bx, by):
    out = np.empty(len(px))
    ux = bx - ax
    uy = by - ay
    L = ux * ux + uy * uy
    safe = np.where(L > 0, L, 1.0)
    for i in range(len(px)):
        vx = px[i] - ax
        vy = py[i] - ay
        t = np.where(L > 0, np.clip((ux * vx + uy * vy) / safe, 0.0, 1.0), 0.0)
        qx = vx - t * ux
        qy = vy - t * uy
        out[i] = math.sqrt(np.min(qx * qx + qy * qy))
    return out
