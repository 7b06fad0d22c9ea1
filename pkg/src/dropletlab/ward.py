"""Berezin kernel, Cauchy transform, Ward residual and related identities.

Convention: Delta = d dbar (a quarter of the usual Laplacian), dA = d^2 z / pi.
Polar quadrature about z removes the 1/(z - w) singularity exactly:
with w = z + rho e^{i phi}, dA(w) / (z - w) = -e^{-i phi} d rho d phi / pi.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateDiagonal
from .limits import ProfileFunction, edge_profile

R_FLOOR = 1e-8


def laplacian_5pt(F, h):
    """d dbar by the five-point stencil (a quarter of the standard one).

    F is sampled on a grid with rows along y; the result drops one cell
    on each side.
    """
    F = np.asarray(F)
    return (F[1:-1, 2:] + F[1:-1, :-2] + F[2:, 1:-1] + F[:-2, 1:-1]
            - 4.0 * F[1:-1, 1:-1]) / (4.0 * h * h)


def dbar_centered(F, h):
    """dbar = (d/dx + i d/dy) / 2 by centred differences, dropping one cell per side."""
    F = np.asarray(F)
    fx = (F[1:-1, 2:] - F[1:-1, :-2]) / (2 * h)
    fy = (F[2:, 1:-1] - F[:-2, 1:-1]) / (2 * h)
    return 0.5 * (fx + 1j * fy)


def grid_points(xlim, ylim, h, pad=0):
    """Lattice x, y coordinates with spacing h, extended by pad cells per side."""
    nx = int(round((xlim[1] - xlim[0]) / h))
    ny = int(round((ylim[1] - ylim[0]) / h))
    x = xlim[0] + h * np.arange(-pad, nx + 1 + pad)
    y = ylim[0] + h * np.arange(-pad, ny + 1 + pad)
    return x, y


def berezin(K, z, w, floor=R_FLOOR):
    """B(z, w) = |K(z, w)|^2 / R(z)."""
    Rz = K.R(np.asarray(z, dtype=complex))
    if np.any(Rz < floor):
        raise DegenerateDiagonal("R(z) below floor %.1e" % floor)
    return np.abs(K.K(z, w)) ** 2 / Rz


@dataclass(frozen=True)
class PolarRule:
    """Gauss-Legendre panels of width dr in rho, trapezoid in phi."""
    rho_c: float = 8.0
    dr: float = 0.2
    order: int = 8
    n_theta: int = 256

    def nodes(self):
        gx, gw = np.polynomial.legendre.leggauss(self.order)
        m = max(int(np.ceil(self.rho_c / self.dr)), 1)
        e = np.linspace(0.0, self.rho_c, m + 1)
        mid = 0.5 * (e[1:] + e[:-1])
        half = 0.5 * (e[1:] - e[:-1])
        r = (mid[:, None] + half[:, None] * gx).ravel()
        wr = (half[:, None] * gw).ravel()
        ph = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        return r, wr, ph, 2 * np.pi / self.n_theta

    def coarser(self):
        return PolarRule(self.rho_c, 2 * self.dr, self.order, max(self.n_theta // 2, 8))

    def truncated(self):
        return PolarRule(self.rho_c / 2, self.dr, self.order, self.n_theta)

    def to_dict(self):
        return {"rho_c": self.rho_c, "dr": self.dr, "order": self.order, "n_theta": self.n_theta}


def _psi_sq_polar(K, z, r, ph):
    """|Psi(z, z + rho e^{i phi})|^2 on the polar tensor grid."""
    w = z + r[:, None] * np.exp(1j * ph)[None, :]
    return np.abs(K.Psi(np.full(w.shape, z), w)) ** 2


def _polar_integrals(K, z, rule, floor=R_FLOOR):
    """(C(z), mass integral) for one point z by the polar rule."""
    r, wr, ph, dph = rule.nodes()
    Rz = float(K.R(np.asarray(z, dtype=complex)))
    g = np.exp(-r * r)[:, None] * _psi_sq_polar(K, z, r, ph)
    radial_c = wr @ (g @ np.exp(-1j * ph)) * dph
    mass = (wr * r) @ g.sum(axis=1) * dph / np.pi
    C = -radial_c / np.pi / Rz if Rz >= floor else np.nan
    return C, mass, Rz


def _unique_x(K, x, rule, floor):
    """C for translation-invariant kernels, which depends on Re z only."""
    xs = np.unique(np.asarray(x, dtype=float))
    vals = np.empty(xs.shape, dtype=complex)
    for i, xx in enumerate(xs):
        C, _, Rz = _polar_integrals(K, complex(xx), rule, floor)
        vals[i] = C
    return xs, vals


def cauchy_transform(K, z, rho_c=8.0, h=0.2, n_theta=256, order=8, floor=R_FLOOR,
                     error=True):
    """C(z) = int B(z, w) / (z - w) dA(w) by polar quadrature truncated at rho_c.

    Returns (C, info). info['quad_error'] is the change under a rule with
    doubled panel width and halved angular count (a bound for the
    spectrally convergent rule, floored at 1e-13); info['tail'] is the
    change when the cutoff is halved.
    """
    z = complex(z)
    Rz = float(K.R(z))
    if Rz < floor:
        raise DegenerateDiagonal("R(z) below floor %.1e" % floor)
    rule = PolarRule(rho_c, h, order, n_theta)
    C, _, _ = _polar_integrals(K, z, rule, floor)
    info = {"rule": rule.to_dict(), "R": Rz}
    if error:
        Cc, _, _ = _polar_integrals(K, z, rule.coarser(), floor)
        Ct, _, _ = _polar_integrals(K, z, rule.truncated(), floor)
        info["quad_error"] = max(abs(C - Cc), 1e-13)
        info["tail"] = abs(C - Ct)
    return complex(C), info


@dataclass
class WardReport:
    kernel: str
    x: np.ndarray
    y: np.ndarray
    h: float
    rule: dict
    C: np.ndarray = None
    residual: np.ndarray = None
    sup_residual: float = None
    skipped: int = 0
    mass_one: dict = field(default_factory=dict)
    min_log_laplacian: float = None
    one_eighth: float = None

    def to_dict(self):
        d = {"kernel": self.kernel, "h": self.h, "rule": self.rule,
             "xlim": [float(self.x[0]), float(self.x[-1])],
             "ylim": [float(self.y[0]), float(self.y[-1])],
             "sup_residual": self.sup_residual, "skipped_cells": self.skipped,
             "R_floor": R_FLOOR}
        if self.mass_one:
            d["mass_one"] = self.mass_one
        if self.min_log_laplacian is not None:
            d["min_log_laplacian"] = self.min_log_laplacian
        if self.one_eighth is not None:
            d["one_eighth"] = self.one_eighth
        return d


def cauchy_field(K, x, y, rule, floor=R_FLOOR):
    """C on the lattice x (columns) by y (rows); NaN where R < floor."""
    X, Y = np.meshgrid(x, y)
    if K.translation_invariant:
        xs, vals = _unique_x(K, x, rule, floor)
        row = vals[np.searchsorted(xs, x)]
        return np.broadcast_to(row, X.shape).copy()
    C = np.empty(X.shape, dtype=complex)
    for idx in np.ndindex(X.shape):
        C[idx] = _polar_integrals(K, complex(X[idx], Y[idx]), rule, floor)[0]
    return C


def ward_residual(K, xlim=(-3.0, 3.0), ylim=(-3.0, 3.0), h=0.05, rho_c=8.0,
                  dr=0.2, n_theta=256, order=8, floor=R_FLOOR, jobs=1):
    """dbar C - (R - 1 - Delta log R) on a lattice; sup norm over cells with R >= floor.

    C is sampled on the lattice extended by one cell so that the centred
    differences are defined on every requested cell.
    """
    rule = PolarRule(rho_c, dr, order, n_theta)
    x, y = grid_points(xlim, ylim, h, pad=1)
    X, Y = np.meshgrid(x, y)
    Z = X + 1j * Y
    R = K.R(Z)
    C = cauchy_field(K, x, y, rule, floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        logR = np.log(np.where(R >= floor, R, np.nan))
    res = dbar_centered(C, h) - (R[1:-1, 1:-1] - 1.0 - laplacian_5pt(logR, h))
    ok = np.isfinite(res)
    sup = float(np.max(np.abs(res[ok]))) if np.any(ok) else float("nan")
    return WardReport(K.name, x[1:-1], y[1:-1], h, rule.to_dict(), C[1:-1, 1:-1],
                      res, sup, int(np.count_nonzero(~ok)))


def mass_one_defect(K, z, rho_c=8.0, dr=0.2, n_theta=256, order=8):
    """Psi(z, z) - int e^{-|z - w|^2} |Psi(z, w)|^2 dA(w), truncated at rho_c.

    The truncated integral underestimates the full one, so the reported
    defect is an upper bound for the exact defect; 'tail' estimates the
    missing mass as the change when the cutoff is halved.
    """
    z = complex(z)
    rule = PolarRule(rho_c, dr, order, n_theta)
    _, m, Rz = _polar_integrals(K, z, rule)
    _, mh, _ = _polar_integrals(K, z, rule.truncated())
    return {"z": [z.real, z.imag], "defect": float(Rz - m), "mass": float(m),
            "psi_diag": float(Rz), "tail": float(abs(m - mh)), "rule": rule.to_dict()}


def log_subharmonicity(K, xlim=(-2.0, 2.0), ylim=(-2.0, 2.0), h=0.05, floor=R_FLOOR):
    """min over the lattice of the discrete Delta log L(z, z); cells with R < floor skipped."""
    x, y = grid_points(xlim, ylim, h, pad=1)
    X, Y = np.meshgrid(x, y)
    Z = X + 1j * Y
    R = K.R(Z)
    with np.errstate(divide="ignore", invalid="ignore"):
        logL = np.abs(Z) ** 2 + np.log(np.where(R >= floor, R, np.nan))
    lap = laplacian_5pt(logL, h)
    ok = np.isfinite(lap)
    return {"min": float(np.min(lap[ok])) if np.any(ok) else float("nan"),
            "field": lap, "skipped": int(np.count_nonzero(~ok)), "h": h,
            "xlim": list(xlim), "ylim": list(ylim)}


def one_eighth(R=edge_profile, X=8.0):
    """int_{-X}^{X} t (R(t) - 1_(-inf,0)(t)) dt with a tail estimate over X < |t| < 2X.

    For the erfc edge profile this equals 1/8; the sign convention makes
    the integral positive for profiles that spill mass into t > 0.
    """
    def g(t):
        return t * (float(np.real(R(t))) - (1.0 if t < 0 else 0.0))

    kw = {"epsabs": 1e-15, "epsrel": 1e-13, "limit": 500}
    val = integrate.quad(g, -X, 0.0, **kw)[0] + integrate.quad(g, 0.0, X, **kw)[0]
    tail = abs(integrate.quad(g, X, 2 * X, **kw)[0]) + abs(integrate.quad(g, -2 * X, -X, **kw)[0])
    return val, tail


def gaussian_representation_fit(xi, phi, f):
    """sup over the samples of |Phi - gamma * f| for a step profile f."""
    if not isinstance(f, ProfileFunction):
        raise TypeError("candidate f must be a ProfileFunction")
    xi = np.asarray(xi, dtype=float)
    return float(np.max(np.abs(np.asarray(phi) - np.real(f(xi)))))


def fit_interval(xi, phi, T=None, resolution=None):
    """Best-fit interval I = (c - s/2, c + s/2) with Phi ~ gamma * 1_I.

    Least squares in (c, s); reports the sup residual and whether I lies in
    [-2T, 2T] up to the given resolution.
    """
    from .limits import interval_profile
    xi = np.asarray(xi, dtype=float)
    phi = np.asarray(phi, dtype=float)

    def res(p):
        c, s = p
        return np.real(interval_profile(a=c - abs(s) / 2, b=c + abs(s) / 2)(xi)) - phi

    s0 = max(float(np.trapezoid(np.clip(phi, 0, 1), xi)), 0.1)
    c0 = float(np.trapezoid(xi * np.clip(phi, 0, 1), xi)) / s0
    sol = optimize.least_squares(res, [c0, s0])
    c, s = float(sol.x[0]), abs(float(sol.x[1]))
    out = {"center": c, "s": s, "interval": [c - s / 2, c + s / 2],
           "sup_residual": float(np.max(np.abs(res(sol.x))))}
    if T is not None:
        tol = resolution if resolution is not None else 0.0
        out["contained"] = bool(c - s / 2 >= -2 * T - tol and c + s / 2 <= 2 * T + tol)
    return out
