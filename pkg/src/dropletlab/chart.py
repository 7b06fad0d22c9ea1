"""Conformal descriptions of droplets near singular boundary points.

A DiskMap is a Laurent polynomial f(w) = sum_j c_j w^{p_j}.  Interior maps
(p_j >= 1) send the unit disk onto the droplet; exterior maps (leading
power 1, remaining powers negative) send |w| > 1 onto the unbounded
complement U, so the droplet is C minus f(|w| > 1).  The exterior family
is the canonical cusp model: its droplets are thin horns at the cusp and
they are droplets of a harmonic-moment potential with finitely many t_k.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.spatial import cKDTree

from .errors import (NoSolution, NotACusp, NotUnivalent, QuadratureFailure,
                     Unclassifiable, Unreachable, AtSingularPoint)
from .geometry import Droplet, polygon_area
from .model import harmonic_moment


# ----------------------------------------------------------------------------
# disk maps

@dataclass(frozen=True)
class DiskMap:
    powers: tuple
    coeffs: tuple
    exterior: bool = False
    symmetry: int = 2

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(int(p) for p in self.powers))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.zeros_like(w)
        for p, c in zip(self.powers, self.coeffs):
            out = out + c * w ** p
        return out

    def deriv(self, w, order=1):
        w = np.asarray(w, dtype=complex)
        out = np.zeros_like(w)
        for p, c in zip(self.powers, self.coeffs):
            f = 1.0
            for k in range(order):
                f *= (p - k)
            if f != 0:
                out = out + c * f * w ** (p - order)
        return out

    def to_dict(self):
        return {"powers": list(self.powers),
                "coeffs": [[c.real, c.imag] for c in self.coeffs],
                "exterior": self.exterior, "symmetry": self.symmetry}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["powers"]), tuple(complex(a, b) for a, b in d["coeffs"]),
                   bool(d["exterior"]), int(d.get("symmetry", 2)))


def interior_map(a1=1.0, a3=0.0, a5=0.0):
    """f(w) = a1 w + a3 w^3 + a5 w^5 on the unit disk."""
    return DiskMap((1, 3, 5), (a1, a3, a5), exterior=False, symmetry=2)


def _winding(vals):
    ang = np.unwrap(np.angle(vals))
    return int(np.rint((ang[-1] - ang[0] + np.angle(vals[0] / vals[-1])) / (2 * np.pi)))


def critical_point_count(m, eps=1e-3, samples=1 << 15):
    """Zeros of f' in the open region of definition (argument principle)."""
    th = 2 * np.pi * np.arange(samples + 1) / samples
    if m.exterior:
        # zeros of h(v) = f'(1/v) in |v| < 1; h is analytic at v = 0
        v = (1 - eps) * np.exp(1j * th)
        vals = m.deriv(1 / v)
    else:
        vals = m.deriv((1 - eps) * np.exp(1j * th))
    ang = np.unwrap(np.angle(vals))
    return int(np.rint((ang[-1] - ang[0]) / (2 * np.pi)))


def _self_intersects(z):
    """Segment-intersection scan of a closed polyline (non-adjacent pairs)."""
    a = z
    b = np.roll(z, -1)
    n = len(z)
    ax, ay, bx, by = a.real, a.imag, b.real, b.imag
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if len(j) == 0:
            continue
        d1 = (bx[i] - ax[i]) * (ay[j] - ay[i]) - (by[i] - ay[i]) * (ax[j] - ax[i])
        d2 = (bx[i] - ax[i]) * (by[j] - ay[i]) - (by[i] - ay[i]) * (bx[j] - ax[i])
        d3 = (bx[j] - ax[j]) * (ay[i] - ay[j]) - (by[j] - ay[j]) * (ax[i] - ax[j])
        d4 = (bx[j] - ax[j]) * (by[i] - ay[j]) - (by[j] - ay[j]) * (bx[i] - ax[j])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


def check_univalent(m, scan_samples=1024):
    """Argument-principle count of critical points and self-intersection scan."""
    if critical_point_count(m) != 0:
        return False
    th = 2 * np.pi * np.arange(scan_samples) / scan_samples
    return not _self_intersects(m(np.exp(1j * th)))


def boundary_curve(m, samples=2048, check=True):
    """(theta, f(e^{i theta})) as a closed polyline, first point repeated."""
    if check and not check_univalent(m):
        raise NotUnivalent("map is not univalent on its domain")
    th = 2 * np.pi * np.arange(samples + 1) / samples
    return th, m(np.exp(1j * th))


def cusp_points(m, tol=1e-9, samples=1 << 14):
    """Critical points of f on the unit circle (candidate cusp preimages)."""
    th = 2 * np.pi * np.arange(samples) / samples
    d = np.abs(m.deriv(np.exp(1j * th)))
    out = []
    for i in np.flatnonzero((d <= np.roll(d, 1)) & (d <= np.roll(d, -1))):
        res = optimize.minimize_scalar(lambda t: abs(m.deriv(np.exp(1j * t))),
                                       bracket=(th[i] - 2e-3, th[i], th[i] + 2e-3))
        if res.fun <= tol * max(1.0, abs(m.coeffs[0])):
            out.append(complex(np.exp(1j * res.x)))
    return out


# ----------------------------------------------------------------------------
# the (5,2) cusp family

def _area_factor(powers, coeffs):
    """Area of the droplet divided by pi, for unit leading coefficient scale."""
    s = 0.0
    for p, c in zip(powers, coeffs):
        s += p * abs(c) ** 2
    return s


def cusp_family(t=0.04):
    """Exterior (5,2)-cusp map r(w + (10t-1)/w + 5t/w^3 + t/w^5) of area pi.

    f'(w) has a zero at w = +-i and the first transverse coefficient of the
    half-plane chart vanishes identically in t; univalent for 0 < t <= 1/15.
    """
    a = np.array([1.0, 10 * t - 1.0, 5 * t, t])
    pw = (1, -1, -3, -5)
    r = 1.0 / np.sqrt(_area_factor(pw, a))
    return DiskMap(pw, tuple(r * a), exterior=True, symmetry=2)


def _transverse_coeff(m, w0, k=3):
    ch = halfplane_chart(m, w0, check=False)
    return ch.coeffs[k].imag


def tune_cusp(nu=5, symmetry=2, t=0.04, tol=1e-12):
    """Solve f'(i) = 0 and vanishing of the lambda^3 transverse coefficient.

    Unknowns are the real coefficients (a3, a5) of
    w + a3/w + a5/w^3 + t/w^5 (t fixed); the result is rescaled to area pi.
    Only the (5,2) target is supported.
    """
    if nu != 5 or symmetry != 2:
        raise NoSolution("only the (5,2) cusp is available in this family")
    pw = (1, -1, -3, -5)

    def build(x):
        a = np.array([1.0, x[0], x[1], t])
        r = 1.0 / np.sqrt(_area_factor(pw, a))
        return DiskMap(pw, tuple(r * a), exterior=True, symmetry=2)

    def eqs(x):
        m = build(x)
        d = m.deriv(np.array(1j))
        return [float(np.real(d)) / abs(m.coeffs[0]), _transverse_coeff(m, 1j, 3)]

    x0 = [10 * t - 1.0 + 0.05, 5 * t - 0.02]
    sol = optimize.root(eqs, x0, method="hybr", tol=1e-14)
    if not sol.success:
        raise NoSolution(sol.message)
    m = build(sol.x)
    if abs(m.deriv(np.array(1j))) > tol or not check_univalent(m):
        raise NoSolution("root-finder did not reach a univalent cusp map")
    return m


def perturb_coefficient(m, power, delta, w0=1j):
    """Shift the coefficient of w^power by delta and restore f'(w0) = 0.

    The w^{-1} (or w^3 for interior maps) coefficient absorbs the correction,
    so the perturbed map keeps a cusp at f(w0) but loses any tuning.
    """
    pw = list(m.powers)
    c = np.array(m.coeffs, dtype=complex)
    c[pw.index(power)] += delta
    fix = -1 if m.exterior else 3
    j = pw.index(fix)
    c[j] = 0.0
    rest = DiskMap(tuple(pw), tuple(c), m.exterior, m.symmetry).deriv(np.array(w0))
    c[j] = -rest / (fix * w0 ** (fix - 1))
    return DiskMap(tuple(pw), tuple(c), m.exterior, m.symmetry)


# ----------------------------------------------------------------------------
# half-plane charts

@dataclass
class HalfPlaneChart:
    """Local chart lambda -> p + rot * Phi(lambda) near a cusp.

    coeffs : normalized Taylor coefficients c_0..c_8 of Phi (c_0 = 0,
      c_2 = orientation/2)
    rot : unimodular rotation; lam_scale : real scale kappa; the exact chart
      point is m(w(kappa * lambda)).
    orientation : +1 for Phi = lambda^2/2 + ..., -1 for -lambda^2/2 + ...
    radius : radius of validity in normalized lambda
    """
    p: complex
    coeffs: np.ndarray
    rot: complex
    lam_scale: float
    orientation: int
    radius: float
    dmap: DiskMap = None
    w0: complex = None

    def w_of(self, lam):
        lam = self.lam_scale * np.asarray(lam, dtype=complex)
        if self.dmap.exterior:
            return self.w0 * (1 - 1j * lam) / (1 + 1j * lam)
        return self.w0 * (1 + 1j * lam) / (1 - 1j * lam)

    def point(self, lam):
        """Exact image Phi(lambda) in droplet coordinates."""
        return self.dmap(self.w_of(lam))

    def deriv(self, lam):
        """d/dlambda of point(lambda)."""
        lam = np.asarray(lam, dtype=complex)
        k = self.lam_scale
        s = 1 if self.dmap.exterior else -1
        dw = self.w0 * (-2j * s) / (1 + 1j * s * k * lam) ** 2 * k
        return self.dmap.deriv(self.w_of(lam)) * dw

    def taylor(self, lam, order=8):
        lam = np.asarray(lam, dtype=complex)
        return self.p + self.rot * sum(self.coeffs[k] * lam ** k
                                       for k in range(order + 1))

    def to_dict(self):
        return {"p": [self.p.real, self.p.imag],
                "coeffs": [[c.real, c.imag] for c in self.coeffs],
                "rot": [self.rot.real, self.rot.imag], "lam_scale": self.lam_scale,
                "orientation": self.orientation, "radius": self.radius,
                "w0": [self.w0.real, self.w0.imag] if self.w0 is not None else None}


@dataclass(frozen=True)
class CuspClass:
    nu: int
    b: float
    a: tuple = ()


def halfplane_chart(m, w0, orientation=None, order=8, samples=256, check=True):
    """Taylor data of Phi(lambda) = m(Mobius(lambda)) at a critical point w0.

    The Mobius map sends the upper half-plane onto |w| > 1 for exterior maps
    (Phi maps into U) and onto |w| < 1 for interior maps (Phi maps into the
    droplet).  Coefficients come from trapezoid contour integrals on the
    circle of half the validity radius.
    """
    w0 = complex(w0)
    if check and abs(m.deriv(np.array(w0))) > 1e-8 * max(1.0, abs(m.coeffs[0])):
        raise NotACusp("f'(w0) = %.3e" % abs(m.deriv(np.array(w0))))
    if orientation is None:
        orientation = -1 if m.exterior else 1
    # the Mobius map has its pole at lambda = -+ i, so the validity radius is 1
    rad = 1.0
    rc = 0.5 * rad
    th = 2 * np.pi * np.arange(samples) / samples
    lam = rc * np.exp(1j * th)
    if m.exterior:
        w = w0 * (1 - 1j * lam) / (1 + 1j * lam)
    else:
        w = w0 * (1 + 1j * lam) / (1 - 1j * lam)
    c = np.fft.fft(m(w)) / samples / rc ** np.arange(samples)
    c = c[:order + 1]
    p = complex(c[0])
    c2 = c[2]
    if abs(c2) == 0:
        raise NotACusp("second derivative vanishes")
    alpha = np.angle(c2) + (0.0 if orientation > 0 else np.pi)
    kappa = 1.0 / np.sqrt(2 * abs(c2))
    rot = np.exp(1j * alpha)
    cn = np.array([c[k] * kappa ** k / rot for k in range(order + 1)])
    cn[0] = 0.0
    return HalfPlaneChart(p, cn, complex(rot), float(kappa), int(orientation),
                          rad / kappa, m, w0)


def chart_from_coeffs(coeffs, orientation=1):
    """Formal chart from given normalized coefficients (for synthetic tests)."""
    c = np.zeros(9, dtype=complex)
    c[:len(coeffs)] = coeffs
    return HalfPlaneChart(0j, c, 1 + 0j, 1.0, orientation, np.inf)


def classify_cusp(chart, rel_tol=1e-7):
    """(nu, b): nu is the first index with a non-real coefficient of Phi.

    With Phi' = s(lambda + a_2 lambda^2 + ... + (a_{nu-1} + i b) lambda^{nu-1}),
    b = s * nu * Im(c_nu) and a_j = s * (j + 1) * Re(c_{j+1}).
    """
    c = np.asarray(chart.coeffs) * chart.orientation
    if abs(abs(c[1])) > 1e-6 or abs(c[2] - 0.5) > 1e-6:
        raise Unclassifiable("chart is not normalized as +-lambda^2/2")
    scale = np.max(np.abs(c))
    for k in range(3, len(c)):
        if abs(c[k].imag) > rel_tol * scale:
            a = tuple(float((j + 1) * c[j + 1].real) for j in range(2, k - 1))
            return CuspClass(k, float(k * c[k].imag), a)
    raise Unclassifiable("all coefficients real up to order %d" % (len(c) - 1))


def cusp_boundary_exponent(m, w0, u_range=(1e-4, 1e-3), samples=400):
    """Log-log slope of the half-width v against the axial distance u near a cusp.

    The cusp axis is the common tangent of the two arcs at f(w0); v ~ u^(nu/2).
    Independent of the Taylor-coefficient route.
    """
    p = complex(m(np.array(w0)))
    t0 = np.angle(w0)
    # axis direction from points a little away on both arcs
    d = 1e-3
    za, zb = m(np.exp(1j * (t0 + d))), m(np.exp(1j * (t0 - d)))
    axis = (za + zb) / 2 - p
    axis /= abs(axis)

    def arc_point(sgn, u):
        def f(s):
            return np.real((m(np.exp(1j * (t0 + sgn * s))) - p) / axis) - u
        hi = 1e-3
        while f(hi) < 0:
            hi *= 2
        s = optimize.brentq(f, 0.0, hi, xtol=1e-16, rtol=1e-15)
        return m(np.exp(1j * (t0 + sgn * s)))

    us = np.geomspace(u_range[0], u_range[1], 12)
    v = []
    for u in us:
        v.append(abs(np.imag((arc_point(1, u) - arc_point(-1, u)) / axis)) / 2)
    slope = np.polyfit(np.log(us), np.log(v), 1)[0]
    return float(slope)


# ----------------------------------------------------------------------------
# harmonic moments and Hele-Shaw evolution

def harmonic_moments(m, kmax=8, samples=256, tol=1e-10, max_samples=1 << 16):
    """t_k = (1/(2 pi i k)) contour integral of conj(z) z^{-k} dz over the boundary."""
    prev = None
    n = samples
    while n <= max_samples:
        th = 2 * np.pi * np.arange(n) / n
        w = np.exp(1j * th)
        z = m(w)
        dz = m.deriv(w) * 1j * w
        t = np.array([np.sum(np.conj(z) * z ** (-k) * dz) * (2 * np.pi / n) / (2j * np.pi * k)
                      for k in range(1, kmax + 1)])
        if prev is not None and np.max(np.abs(t - prev)) < tol:
            return t
        prev = t
        n *= 2
    raise QuadratureFailure("harmonic moments did not converge")


def map_area(m):
    """Lebesgue area of the droplet (closed form for Laurent maps)."""
    s = _area_factor(m.powers, m.coeffs)
    return float(np.pi * s)


def potential_from_map(m, kmax=8, margin=1.0, kappa=10.0, tol=1e-12):
    """Harmonic-moment potential whose droplet is the image of the map.

    Requires an exterior map (finitely many nonzero t_k) of area pi.  The
    guard ellipse has semi-axes equal to the droplet extents plus margin.
    """
    if not m.exterior:
        raise NoSolution("interior maps have infinitely many exterior moments")
    t = harmonic_moments(m, kmax)
    tk = {k: complex(np.real_if_close(v)) for k, v in zip(range(1, kmax + 1), t)
          if abs(v) > tol}
    _, z = boundary_curve(m, 4096, check=False)
    ax = float(np.max(np.abs(z.real))) + margin
    by = float(np.max(np.abs(z.imag))) + margin
    return harmonic_moment(tk, guard_axes=(ax, by), kappa=kappa)


def hele_shaw_family(m, s, kmax=8, step=0.05):
    """Map with the same exterior moments as m and area multiplied by s.

    The moment map folds at a critical (cusped) map, so Newton started at m
    stalls; the branch is followed instead by continuation in the area from
    a small near-circular droplet up to s.
    """
    if s == 1:
        return m
    if not m.exterior or not 0 < s <= 1:
        raise NoSolution("Hele-Shaw continuation needs an exterior map and 0 < s <= 1")
    t0 = harmonic_moments(m, kmax)
    K = [k for k in range(1, kmax + 1) if abs(t0[k - 1]) > 1e-12]
    A0 = map_area(m)
    pw = m.powers
    npw = len(pw)
    if 2 * len(K) + 1 != 2 * npw - 1:
        raise NoSolution("moment system is not square in this family")

    def unpack(x):
        c = np.zeros(npw, dtype=complex)
        c[0] = x[0]
        c[1:] = x[1:npw] + 1j * x[npw:]
        return DiskMap(pw, tuple(c), m.exterior, m.symmetry)

    def eqs(x, target):
        mm = unpack(x)
        try:
            t = harmonic_moments(mm, kmax, samples=512, tol=1e-13)
        except QuadratureFailure:
            return [1e3] * (2 * len(K) + 1)
        r = [map_area(mm) / A0 - target]
        for k in K:
            r += [t[k - 1].real - t0[k - 1].real, t[k - 1].imag - t0[k - 1].imag]
        return r

    s0 = min(step, s)
    x = np.zeros(2 * npw - 1)
    x[0] = np.sqrt(s0 * A0 / np.pi)
    for target in np.append(np.arange(s0, s, step), s):
        x = optimize.root(eqs, x, args=(target,), method="hybr", tol=1e-15).x
    res = np.max(np.abs(eqs(x, s)))
    if res > 1e-10:
        raise NoSolution("moment system residual %.2e" % res)
    out = unpack(x)
    if not check_univalent(out):
        raise NoSolution("Hele-Shaw map is not univalent")
    return out


# ----------------------------------------------------------------------------
# droplet built from a map

def droplet_from_map(m, samples=1 << 16):
    """Droplet whose boundary is m(unit circle), with cusps flagged at critical points."""
    _, z = boundary_curve(m, samples)
    sp = []
    for w0 in cusp_points(m):
        p = complex(m(np.array(w0)))
        ch = halfplane_chart(m, w0)
        try:
            nu = classify_cusp(ch).nu
        except Unclassifiable:
            nu = None
        axis = ch.rot * ch.orientation
        sp.append({"location": p, "kind": "cusp", "nu": nu, "w0": w0,
                   "tangent": complex(axis)})
    return Droplet([z[:-1]], sp, source="disk-map")


# ----------------------------------------------------------------------------
# obstacle function for exterior-map droplets

class ConformalObstacle:
    """Exact obstacle function of an exterior-map droplet.

    In U = m(|w| > 1), Q_check(m(w)) = log|w|^2 + h(w) with h the bounded
    harmonic extension of Q o m from |w| = 1 (Fourier multipliers R^{-|k|}).
    """

    def __init__(self, m, P, samples=1024):
        if not m.exterior:
            raise NoSolution("conformal obstacle needs an exterior map")
        self.m = m
        self.P = P
        th = 2 * np.pi * np.arange(samples) / samples
        self.q = np.fft.fft(P(m(np.exp(1j * th)))) / samples
        self.k = np.fft.fftfreq(samples, 1.0 / samples)
        self.samples = samples
        _, z = boundary_curve(m, 1 << 14, check=False)
        self.droplet = Droplet([z[:-1]])
        # polar table in the w-plane for Newton starts
        R = np.geomspace(1.0, 60.0, 160)
        T = 2 * np.pi * np.arange(720) / 720
        W = (R[:, None] * np.exp(1j * T[None, :])).ravel()
        self._W = W
        Z = m(W)
        self._tree = cKDTree(np.column_stack([Z.real, Z.imag]))

    def qcheck_w(self, w):
        """Q_check at m(w) for |w| >= 1."""
        w = np.asarray(w, dtype=complex)
        r = np.abs(w)
        phase = np.exp(1j * np.multiply.outer(np.angle(w), self.k))
        mult = np.power.outer(r, -np.abs(self.k))
        h = np.real(np.sum(self.q * mult * phase, axis=-1))
        return np.log(r * r) + h

    def gap_w(self, w):
        w = np.asarray(w, dtype=complex)
        return self.P(self.m(w)) - self.qcheck_w(w)

    def invert(self, z, iters=60):
        """w with m(w) = z, |w| >= 1 (z in the closure of U)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        _, idx = self._tree.query(np.column_stack([z.real, z.imag]))
        w = self._W[idx]
        for _ in range(iters):
            dw = (self.m(w) - z) / self.m.deriv(w)
            w = w - dw
            if np.all(np.abs(dw) < 1e-15 * np.abs(w)):
                break
        return w

    def qcheck(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.array(self.P(z), dtype=float)
        ext = ~self.droplet.contains(z)
        if np.any(ext):
            w = self.invert(z[ext])
            w = np.where(np.abs(w) < 1, w / np.abs(w), w)
            out[ext] = self.qcheck_w(w)
        return out

    def gap(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.P(z) - self.qcheck(z)


# ----------------------------------------------------------------------------
# the gap function M and its expansions

def m_function(chart, field, lam):
    """M(lambda) = (Q - Q_check)(Phi(lambda)) for lambda in the upper half-plane."""
    lam = np.asarray(lam, dtype=complex)
    if isinstance(field, ConformalObstacle) and field.m is chart.dmap:
        return field.gap_w(chart.w_of(lam))
    return field.gap(chart.point(lam))


def laplacian_pullback(chart, P, lam):
    """Delta Q_Phi = Delta Q(Phi) |Phi'|^2 (chain rule)."""
    lam = np.asarray(lam, dtype=complex)
    return P.laplacian(chart.point(lam)) * np.abs(chart.deriv(lam)) ** 2


def m_expansion(chart, P, sigma, tau, order=4, step=1e-3):
    """Partial sum of M = 2 D tau^2 + (4/3!) D_tau tau^3 + (4/4!)(D_tautau - D_sigsig) tau^4.

    D = Delta Q_Phi evaluated at the real point sigma; derivatives by
    central differences with the given step.
    """
    def D(s, t):
        return float(laplacian_pullback(chart, P, np.array(s + 1j * t)))
    h = step
    val = 2 * D(sigma, 0.0) * tau ** 2
    if order >= 3:
        dt = (D(sigma, h) - D(sigma, -h)) / (2 * h)
        val += 4.0 / 6.0 * dt * tau ** 3
    if order >= 4:
        dtt = (D(sigma, h) - 2 * D(sigma, 0.0) + D(sigma, -h)) / h ** 2
        dss = (D(sigma + h, 0.0) - 2 * D(sigma, 0.0) + D(sigma - h, 0.0)) / h ** 2
        val += 4.0 / 24.0 * (dtt - dss) * tau ** 4
    return val


def cusp_gap_leading(P, chart, sigma, tau):
    """Leading term 2 Delta Q(p) tau^2 sigma^2 of M at a cusp."""
    return 2.0 * float(P.laplacian(np.array(chart.p))) * tau ** 2 * sigma ** 2


def poisson_integral(f, sigma, tau, L):
    """Poisson integral of f over the truncated line [-L, L] at sigma + i tau."""
    def ker(t):
        return f(t) * tau / (np.pi * ((t - sigma) ** 2 + tau ** 2))
    val, err = integrate.quad(ker, -L, L, points=[sigma], limit=400,
                              epsabs=1e-14, epsrel=1e-13)
    return val


def poisson_expansion(f, df, d2f, sigma, tau, L):
    """f(sigma) + I1 tau - f''(sigma) tau^2 / 2 for the truncated line.

    I1 is the first-order line-integral correction, including the end-point
    terms from truncating the line at +-L.
    """
    def r(t):
        d = t - sigma
        if abs(d) < 1e-6:
            return 0.5 * d2f(sigma)
        return (f(t) - f(sigma) - df(sigma) * d) / d ** 2
    body, _ = integrate.quad(r, -L, L, points=[sigma], limit=400, epsabs=1e-14)
    I1 = (body - f(sigma) * (1 / (L - sigma) + 1 / (L + sigma))
          + df(sigma) * np.log((L - sigma) / (L + sigma))) / np.pi
    return f(sigma) + I1 * tau - 0.5 * d2f(sigma) * tau ** 2


# ----------------------------------------------------------------------------
# boundary normals and moving points

@dataclass
class MovingPoint:
    n: int
    T: float
    kind: str
    location: complex
    theta: float
    scale: float
    singular: complex = None
    tangency: tuple = ()
    distance: float = 0.0

    def to_dict(self):
        return {"n": self.n, "T": self.T, "kind": self.kind,
                "location": [self.location.real, self.location.imag],
                "theta": self.theta, "scale": self.scale,
                "distance": self.distance,
                "singular": None if self.singular is None
                else [self.singular.real, self.singular.imag]}


def frame(p, theta, scale, n=0, T=0.0, kind="fixed"):
    """Microscope frame z = e^{-i theta} scale (zeta - p) at a fixed point."""
    return MovingPoint(int(n), float(T), kind, complex(p), float(theta), float(scale), complex(p))


def normal_angle(d, point, exclude=2.0):
    """Outward normal angle at a boundary point from a 5-point quadratic fit."""
    point = complex(point)
    h = d.resolution
    for sp in d.singular_points:
        if abs(sp["location"] - point) < exclude * h:
            raise AtSingularPoint("normal undefined at a singular point")
    _, gi = d.nearest_vertex(point)
    j, i = d.locate(gi)
    b = d.boundaries[j]
    idx = (np.arange(i - 2, i + 3)) % len(b)
    pts = b[idx]
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
    s -= s[2]
    cx = np.polyfit(s, pts.real, 2)
    cy = np.polyfit(s, pts.imag, 2)
    # parameter of the projection of point onto the fitted curve (near s = 0)
    t = complex(cx[1], cy[1])
    nrm = -1j * t / abs(t)
    probe = point + nrm * 1e-3 * h
    if d.contains(probe)[0]:
        nrm = -nrm
    return float(np.angle(nrm))


def _offset_candidates(d, rho):
    """Inner offset points b + rho * nu for every boundary vertex."""
    pts, bases = [], []
    for j in range(len(d.boundaries)):
        nu = d.inward_normals(j)
        pts.append(d.boundaries[j] + rho * nu)
        bases.append(d.boundaries[j])
    return np.concatenate(pts), np.concatenate(bases)


def _valid(d, o, rho):
    """Offset points inside S whose distance to the whole boundary is still rho."""
    dist, _ = d._tree.query(np.column_stack([o.real, o.imag]))
    tol = 1e-6 * rho + d.resolution ** 2 / rho
    ok = dist >= rho - tol
    if np.any(ok):
        ok[ok] = d.contains(o[ok])
    return ok


def _closest_valid(d, cand, rho, p, mask=None):
    dist = np.abs(cand - p)
    order = np.argsort(dist)
    if mask is not None:
        order = order[mask[order]]
    # test in blocks of increasing distance
    for start in range(0, len(order), 2048):
        blk = order[start:start + 2048]
        ok = _valid(d, cand[blk], rho)
        if np.any(ok):
            return int(blk[np.argmax(ok)])
    return None


def moving_point(d, P, p, n, T, kind="cusp_inner", dq=None):
    """Point at boundary distance T / sqrt(n Delta Q(p)) closest to p.

    kind: 'regular' (inner normal from a regular boundary point p),
    'cusp_inner' (p_n), 'cusp_tangency' (q_n), 'double_prime' (p'_n),
    'double_second' (p''_n).
    """
    p = complex(p)
    if dq is None:
        dq = float(P.laplacian(np.array(p)))
    scale = float(np.sqrt(n * dq))
    rho = T / scale
    if rho <= 2 * d.resolution:
        raise Unreachable("prescribed distance below twice the boundary resolution")
    if kind == "regular":
        th = normal_angle(d, p)
        loc = p - rho * np.exp(1j * th)
        return MovingPoint(n, T, kind, complex(loc), th, scale, p, (p,), float(d.distance(loc)[0]))
    cand, base = _offset_candidates(d, rho)
    k1 = _closest_valid(d, cand, rho, p)
    if k1 is None:
        raise Unreachable("prescribed distance exceeds the local inradius")
    o1 = cand[k1]
    if kind in ("double_prime", "double_second"):
        tang = None
        for sp in d.singular_points:
            if abs(sp["location"] - p) < 4 * d.resolution + 1e-12 and "tangent" in sp:
                tang = sp["tangent"]
        if tang is None:
            u = (o1 - p) / abs(o1 - p)
            tang = 1j * u
        # p' lies on the side of the tangency axis that tang points to
        side1 = np.real((o1 - p) * np.conj(tang))
        if abs(side1) <= 2 * d.resolution:
            # a single disk on the axis serves both labels
            o2 = o1
        else:
            mask = np.real((cand - p) * np.conj(tang)) * side1 < 0
            k2 = _closest_valid(d, cand, rho, p, mask)
            if k2 is None:
                raise Unreachable("second moving point not found")
            o2 = cand[k2]
        prime, second = (o1, o2) if side1 >= 0 else (o2, o1)
        loc = prime if kind == "double_prime" else second
    else:
        loc = o1
    theta = float(np.angle(p - loc) - np.pi / 2)
    # tangency points: boundary vertices at distance rho from loc
    dd = np.abs(d._verts - loc)
    near = d._verts[dd <= dd.min() + 2 * d.resolution + 1e-9 * rho]
    rel = (near - loc) * np.exp(-1j * theta)
    tang = ()
    if len(near):
        left = near[np.argmin(rel.real)]
        right = near[np.argmax(rel.real)]
        tang = (complex(right), complex(left))
    if kind == "cusp_tangency":
        if not tang:
            raise Unreachable("no tangency point")
        loc = tang[0]
    dist = float(d.distance(loc)[0])
    return MovingPoint(n, T, kind, complex(loc), theta, scale, p, tang, dist)
