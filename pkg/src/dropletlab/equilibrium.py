"""Equilibrium measure, obstacle function and droplet on a square lattice.

The weighted energy I_Q[mu] = int Q dmu + iint log 1/|z - w| dmu dmu is
discretized with cell masses m_i in [0, Delta Q h^2 / pi] and sum m_i = 1,
which turns the density bound dsigma = Delta Q 1_S dA into box constraints.
The resulting convex QP is solved by monotone FISTA with exact projection
onto the capped simplex; the Frank-Wolfe duality gap certifies optimality.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import ndimage
from skimage.measure import find_contours

from .errors import DegenerateSupport, NonConvergence, OutOfGrid
from .geometry import Droplet
from .model import fd_laplacian


@dataclass(frozen=True)
class Grid:
    """Cell-centred lattice: centres x0 + h*j, y0 + h*i, row-major (i = row)."""
    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    @classmethod
    def square(cls, half_width, h, center=0j):
        n = int(round(2 * half_width / h))
        c = complex(center)
        return cls(c.real - half_width + h / 2, c.imag - half_width + h / 2, float(h), n, n)

    @classmethod
    def box(cls, xlim, ylim, h):
        nx = int(round((xlim[1] - xlim[0]) / h))
        ny = int(round((ylim[1] - ylim[0]) / h))
        return cls(xlim[0] + h / 2, ylim[0] + h / 2, float(h), nx, ny)

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.h * np.arange(self.ny)

    def centers(self):
        X, Y = np.meshgrid(self.x, self.y)
        return X + 1j * Y

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return ((z.real >= self.x0) & (z.real <= self.x0 + self.h * (self.nx - 1))
                & (z.imag >= self.y0) & (z.imag <= self.y0 + self.h * (self.ny - 1)))

    def to_dict(self):
        return {"x0": self.x0, "y0": self.y0, "h": self.h, "nx": self.nx, "ny": self.ny,
                "order": "row-major, row index along y"}


class LogConvolver:
    """U_i = sum_j L_ij m_j with L_ij = log 1/|z_i - z_j| and the disk self-term.

    The self-interaction uses the exact potential at the centre of a uniform
    disk of equal area: log(1/a) + 1/2 with a = h / sqrt(pi).
    """

    def __init__(self, grid):
        self.grid = grid
        nx, ny, h = grid.nx, grid.ny, grid.h
        i = np.arange(-(ny - 1), ny)
        j = np.arange(-(nx - 1), nx)
        J, I = np.meshgrid(j, i)
        R = h * np.hypot(I, J)
        with np.errstate(divide="ignore"):
            K = -np.log(R)
        a = h / np.sqrt(np.pi)
        K[ny - 1, nx - 1] = np.log(1.0 / a) + 0.5
        self.shape = (sfft.next_fast_len(3 * ny - 2), sfft.next_fast_len(3 * nx - 2))
        self.Kf = sfft.rfft2(K, self.shape)

    def __call__(self, m):
        ny, nx = self.grid.ny, self.grid.nx
        out = sfft.irfft2(sfft.rfft2(m, self.shape) * self.Kf, self.shape)
        return out[ny - 1:2 * ny - 1, nx - 1:2 * nx - 1]

    def at(self, m, z):
        """Potential of the cell measure at arbitrary points by direct summation."""
        g = self.grid
        Z = g.centers().ravel()
        w = m.ravel()
        keep = w > 0
        Z, w = Z[keep], w[keep]
        a = g.h / np.sqrt(np.pi)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        for k, zz in enumerate(z.ravel()):
            r = np.abs(zz - Z)
            # inside a cell's equal-area disk use the disk potential
            inner = r < a
            v = -np.log(np.where(inner, 1.0, r))
            v = np.where(inner, np.log(1.0 / a) + 0.5 * (1 - (r / a) ** 2), v)
            out.flat[k] = np.dot(w, v)
        return out


def project_capped_simplex(v, cap, total=1.0, tol=1e-15):
    """Euclidean projection onto {0 <= m <= cap, sum m = total}.

    m = clip(v - theta, 0, cap) with theta found by safeguarded Newton on
    the piecewise-linear mass function.
    """
    lo = float(np.min(v - cap)) - 1.0
    hi = float(np.max(v))
    th = 0.5 * (lo + hi)
    for _ in range(200):
        m = np.clip(v - th, 0.0, cap)
        s = m.sum() - total
        if abs(s) <= tol * total:
            break
        if s > 0:
            lo = th
        else:
            hi = th
        free = np.count_nonzero((v - th > 0) & (v - th < cap))
        nt = th + s / free if free else 0.5 * (lo + hi)
        th = nt if lo < nt < hi else 0.5 * (lo + hi)
    m = np.clip(v - th, 0.0, cap)
    # remove the residual rounding on the free cells
    free = (m > 0) & (m < cap)
    if np.any(free):
        m[free] += (total - m.sum()) / np.count_nonzero(free)
        np.clip(m, 0.0, cap, out=m)
    return m


def frank_wolfe_gap(g, m, cap, total=1.0):
    """<g, m - s> with s the linear minimizer over the capped simplex."""
    order = np.argsort(g, axis=None, kind="stable")
    c = cap.ravel()[order]
    cs = np.cumsum(c)
    k = int(np.searchsorted(cs, total))
    s = np.zeros(g.size)
    s[order[:k]] = c[:k]
    if k < g.size:
        s[order[k]] = total - (cs[k - 1] if k > 0 else 0.0)
    return float(np.dot(g.ravel(), m.ravel() - s))


@dataclass
class DiscretizedMeasure:
    grid: Grid
    weights: np.ndarray
    cap: np.ndarray
    energy: float
    gap: float
    iterations: int
    history: list = field(default_factory=list)
    q: np.ndarray = None

    @property
    def total_mass(self):
        return float(self.weights.sum())


def cell_caps(P, grid):
    Z = grid.centers()
    q = np.asarray(P(Z), dtype=float)
    lap = np.ones(Z.shape)
    out = ~P.in_region(Z)
    if np.any(out):
        lap[out] = np.maximum(fd_laplacian(P, Z[out], 1e-4), 0.0)
    cap = lap * grid.h ** 2 / np.pi
    cap[~np.isfinite(q)] = 0.0
    q = np.where(np.isfinite(q), q, 0.0)
    return q, cap


def minimize_energy(P, grid, max_iter=3000, tol=1e-7, m0=None, check_every=25,
                    raise_on_fail=True):
    """Monotone FISTA on the capped-simplex QP for the weighted log energy.

    Stops when the Frank-Wolfe gap (an upper bound on the energy error)
    drops below tol; raises NonConvergence with the gap otherwise.
    """
    conv = LogConvolver(grid)
    q, cap = cell_caps(P, grid)
    if cap.sum() < 1.0:
        raise DegenerateSupport("grid cannot hold unit mass under the density cap")
    # largest eigenvalue of the log-kernel operator by power iteration
    v = np.random.default_rng(0).random(q.shape)
    lam = 1.0
    for _ in range(40):
        v = conv(v)
        lam = np.linalg.norm(v)
        v /= lam
    Lf = 2.0 * lam
    if m0 is None:
        m = project_capped_simplex(np.full(q.shape, 1.0 / q.size), cap)
    else:
        m = project_capped_simplex(np.asarray(m0, dtype=float), cap)

    def energy(x):
        U = conv(x)
        return float(np.sum(q * x) + np.sum(x * U)), U

    fm, U = energy(m)
    hist = [fm]
    y = m.copy()
    t = 1.0
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = q + 2.0 * conv(y)
        z = project_capped_simplex(y - g / Lf, cap)
        fz, Uz = energy(z)
        t1 = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if fz < fm:
            mn, fn, U = z, fz, Uz
            hist.append(fz)
        else:
            mn, fn = m, fm
        y = mn + (t / t1) * (z - mn) + ((t - 1.0) / t1) * (mn - m)
        m, fm, t = mn, fn, t1
        if it % check_every == 0 or it == max_iter:
            gap = frank_wolfe_gap(q + 2.0 * U, m, cap)
            if gap <= tol:
                break
    out = DiscretizedMeasure(grid, m, cap, fm, gap, it, hist, q)
    if gap > tol and raise_on_fail:
        e = NonConvergence("duality gap %.3e above tolerance %.1e" % (gap, tol), gap)
        e.measure = out
        raise e
    return out


@dataclass
class ObstacleField:
    grid: Grid
    qcheck: np.ndarray
    frostman: float
    coincidence: np.ndarray
    fill: np.ndarray
    q: np.ndarray
    potential: np.ndarray
    measure: DiscretizedMeasure = None
    P: object = None

    def gap(self, z, method="direct"):
        return exterior_gap(self, self.P, z, method)

    def complementarity(self, rtol=1e-3, sat=1e-9):
        """Fraction of cells with saturated weight or |Q + 2U - F| within tolerance."""
        G = self.q + 2 * self.potential
        ok = ((self.fill <= sat) | (self.fill >= 1 - sat)
              | (np.abs(G - self.frostman) <= rtol * (1 + abs(self.frostman))))
        return float(np.mean(ok))


def obstacle_function(P, sigma):
    """Q_check = F - 2 U^sigma with F the median of Q + 2U over interior coincidence cells."""
    grid = sigma.grid
    conv = LogConvolver(grid)
    U = conv(sigma.weights)
    with np.errstate(invalid="ignore", divide="ignore"):
        fill = np.where(sigma.cap > 0, sigma.weights / np.where(sigma.cap > 0, sigma.cap, 1), 0.0)
    full = fill >= 1 - 1e-9
    interior = ndimage.binary_erosion(full, structure=ndimage.generate_binary_structure(2, 1))
    if np.count_nonzero(interior) < 100:
        raise DegenerateSupport("coincidence set has fewer than 100 interior cells")
    q = sigma.q if sigma.q is not None else np.asarray(P(grid.centers()), dtype=float)
    G = q + 2 * U
    F = float(np.median(G[interior]))
    qcheck = F - 2 * U
    coincidence = fill >= 0.5
    return ObstacleField(grid, qcheck, F, coincidence, fill, q, U, sigma, P)


def exterior_gap(field, P, z, method="direct"):
    """(Q - Q_check)(z); 'direct' sums the cell potential, 'bilinear' interpolates."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g = field.grid
    if not np.all(g.contains(z)):
        raise OutOfGrid("point outside the lattice hull")
    if method == "bilinear":
        fx = (z.real - g.x0) / g.h
        fy = (z.imag - g.y0) / g.h
        j = np.clip(np.floor(fx).astype(int), 0, g.nx - 2)
        i = np.clip(np.floor(fy).astype(int), 0, g.ny - 2)
        tx, ty = fx - j, fy - i
        A = field.qcheck
        qc = ((1 - tx) * (1 - ty) * A[i, j] + tx * (1 - ty) * A[i, j + 1]
              + (1 - tx) * ty * A[i + 1, j] + tx * ty * A[i + 1, j + 1])
    else:
        conv = LogConvolver.__new__(LogConvolver)
        conv.grid = g
        qc = field.frostman - 2 * conv.at(field.measure.weights, z)
    return np.asarray(P(z), dtype=float) - qc


def _turning(poly, h):
    """Turning angle over an arc window of length about 4h centred at each vertex."""
    n = len(poly)
    seg = np.abs(np.roll(poly, -1) - poly)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    ext = np.concatenate([poly, poly, poly])
    sext = np.concatenate([s[:-1] - total, s[:-1], s[:-1] + total])
    out = np.zeros(n)
    for k in range(n):
        sk = s[k]
        a = np.searchsorted(sext, sk - 2 * h) + 0
        b = np.searchsorted(sext, sk + 2 * h)
        i0 = max(a, n + k - 1 - 50)
        i1 = min(b, n + k + 1 + 50)
        c = n + k
        if i0 >= c:
            i0 = c - 1
        if i1 <= c:
            i1 = c + 1
        t1 = ext[c] - ext[i0]
        t2 = ext[i1] - ext[c]
        out[k] = abs(np.angle(t2 / t1)) if t1 != 0 and t2 != 0 else 0.0
    return out


def extract_droplet(field, P=None, approach=2.0, curvature=0.25, arc_far=4.0,
                    pair_reach=2.0):
    """Marching-squares boundary of the coincidence set with singular-point flags.

    Cusp candidates: mean curvature over a 4h arc exceeds curvature / h.
    Double candidates: two boundary points within approach*h that are far
    apart along the boundary and lie on different polylines or have U
    between them, or two tip candidates within pair_reach*sqrt(h) pointing
    at each other across U (horns near a double point thin out below the
    lattice scale about sqrt(h) before they meet).  Cusp candidates near
    a double candidate are merged into it.
    """
    g = field.grid
    h = g.h
    rho = np.pad(field.fill, 1)
    polys = []
    for c in find_contours(rho, 0.5):
        z = (g.x0 + (c[:, 1] - 1) * h) + 1j * (g.y0 + (c[:, 0] - 1) * h)
        if len(z) > 1 and abs(z[0] - z[-1]) < 1e-12:
            z = z[:-1]
        if len(z) >= 4:
            polys.append(z)
    lab, ncomp = ndimage.label(field.fill >= 0.5, structure=np.ones((3, 3)))
    drop = Droplet(polys, [], resolution=h, components=int(ncomp),
                   grid=(g.x, g.y, field.fill >= 0.5), source="lattice")
    cusps = []
    for poly in polys:
        turn = _turning(poly, h)
        # mean curvature over the 4h window above curvature / h
        hit = np.flatnonzero(turn > 4 * curvature)
        if len(hit):
            runs = np.split(hit, np.flatnonzero(np.diff(hit) > 1) + 1)
            m = max(int(round(3 * h / np.mean(np.abs(np.diff(poly))))), 1)
            for r in runs:
                k = r[np.argmax(turn[r])]
                # direction in which the tip points
                t = poly[k] - 0.5 * (poly[(k - m) % len(poly)] + poly[(k + m) % len(poly)])
                cusps.append((complex(poly[k]), complex(t / abs(t)) if abs(t) else 0j))
    doubles = []
    owner = np.concatenate([np.full(len(p), i) for i, p in enumerate(polys)])
    cum = np.concatenate([np.concatenate([[0.0], np.cumsum(np.abs(np.diff(p)))])
                          for p in polys])
    perim = np.array([np.sum(np.abs(np.roll(p, -1) - p)) for p in polys])
    verts = drop._verts
    pairs = drop._tree.query_pairs(approach * h, output_type="ndarray")
    for i, j in pairs:
        if owner[i] == owner[j]:
            ds = abs(cum[i] - cum[j])
            if min(ds, perim[owner[i]] - ds) < arc_far * h:
                continue
            mid = 0.5 * (verts[i] + verts[j])
            if drop.contains(mid)[0]:
                continue
        mid = 0.5 * (verts[i] + verts[j])
        dist = abs(verts[i] - verts[j])
        doubles.append((dist, complex(mid)))
    # two tips facing each other across U: a double point the lattice cannot resolve
    reach = pair_reach * np.sqrt(h)
    paired = set()
    for i, (ci, ti) in enumerate(cusps):
        for j in range(i + 1, len(cusps)):
            cj, tj = cusps[j]
            d = cj - ci
            if abs(d) == 0 or abs(d) > reach:
                continue
            u = d / abs(d)
            if (ti * np.conj(u)).real > 0.9 and (tj * np.conj(-u)).real > 0.9:
                seg = ci + d * np.linspace(0.1, 0.9, 9)
                if not np.any(drop.contains(seg)):
                    doubles.append((abs(d), 0.5 * (ci + cj)))
                    paired.update((i, j))
    # cluster double candidates and report cluster means
    doubles.sort(key=lambda t: t[0])
    clusters = []
    for dist, mid in doubles:
        for cl in clusters:
            if abs(mid - cl[0]) <= reach:
                cl.append(mid)
                break
        else:
            clusters.append([mid])
    dloc = [complex(np.mean(cl)) for cl in clusters]
    sp = [{"location": d, "kind": "double", "nu": None} for d in dloc]
    cl = []
    for i, (c, t) in enumerate(cusps):
        if i in paired or any(abs(c - d) <= reach for d in dloc):
            continue
        if all(abs(c - e[0]) > 5 * h for e in cl):
            cl.append((c, t))
    sp += [{"location": c, "kind": "cusp", "nu": None, "tangent": t} for c, t in cl]
    drop.singular_points = sp
    return drop


def radial_oracle_radius(total=1.0):
    """Radius R of the Ginibre droplet from the mass balance int_0^R 2r dr = total."""
    return float(np.sqrt(total))


def point_charge_droplet(c, a, samples=1 << 15):
    """Closed-form candidate droplet D(0, sqrt(1+c)) minus D(a, sqrt(c)).

    Valid for |a| + sqrt(c) <= sqrt(1+c); at equality the two circles touch
    at a double point, which is recorded with the common tangent direction.
    """
    R = np.sqrt(1.0 + c)
    r = np.sqrt(c)
    a = complex(a)
    th = 2 * np.pi * np.arange(samples) / samples
    outer = R * np.exp(1j * th)
    hole = a + r * np.exp(1j * th)
    sp = []
    if abs(abs(a) + r - R) < 1e-12 and abs(a) > 0:
        u = a / abs(a)
        sp.append({"location": complex(R * u), "kind": "double", "nu": 4,
                   "tangent": complex(1j * u)})
    # rotate the sampling so a vertex sits exactly on the double point
    if sp:
        ph = np.angle(a)
        outer = R * np.exp(1j * (th + ph))
        hole = a + r * np.exp(1j * (th + ph))
    return Droplet([outer, hole], sp, components=1, source="point-charge")
