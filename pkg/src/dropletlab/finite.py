"""Finite-n correlation kernels from weighted planar orthonormal polynomials.

The orthonormal system for e^{-nQ} dA is generated by the Arnoldi process:
multiply the last vector by z, orthogonalize against all previous ones
(modified Gram-Schmidt, two passes) in the discrete inner product of a
polar tensor quadrature.  The Hessenberg coefficients give a recurrence
that evaluates psi_j = p_j e^{-nQ/2} anywhere without forming monomials.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioned
from .limits import decay_bound_check

MAX_N = 64


@dataclass(frozen=True)
class Quadrature:
    """Gauss-Legendre in r on [0, radius] times trapezoid in angle (dA = d^2 z / pi)."""
    radius: float
    n_r: int
    n_theta: int
    center: complex = 0j

    def nodes(self):
        gx, gw = np.polynomial.legendre.leggauss(self.n_r)
        r = 0.5 * self.radius * (gx + 1.0)
        wr = 0.5 * self.radius * gw
        th = 2 * np.pi * (np.arange(self.n_theta) + 0.5) / self.n_theta
        z = self.center + (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        w = ((wr * r)[:, None] * np.full(self.n_theta, 2.0 / self.n_theta)[None, :]).ravel()
        return z, w

    def refined(self):
        return Quadrature(self.radius, 2 * self.n_r, 2 * self.n_theta, self.center)

    def to_dict(self):
        return {"radius": self.radius, "n_r": self.n_r, "n_theta": self.n_theta,
                "center": [self.center.real, self.center.imag]}


def default_quadrature(P, n):
    """Disk covering the guard region with node counts scaled to degree 2n + 8."""
    if P.family == "ginibre":
        radius = 1.0 + np.sqrt(60.0 / n)
    elif P.family == "pointcharge":
        radius = np.sqrt(1.0 + P.c) + np.sqrt(60.0 / n)
    else:
        radius = P.extent + 0.55
    deg = 2 * n + 8
    n_r = max(64, int(1.25 * deg) + 32)
    n_theta = max(128, 4 * deg + 64)
    if P.family == "harmonic":
        n_r, n_theta = max(n_r, 160), max(n_theta, 768)
    return Quadrature(float(radius), int(n_r), int(n_theta))


def _log_weight(P, n, z):
    q = np.asarray(P(z), dtype=float)
    return -n * q


@dataclass
class WeightedBasis:
    P: object
    n: int
    quad: Quadrature
    H: np.ndarray
    norm0: float
    residual: float
    discrete_residual: float
    info: dict = field(default_factory=dict)

    def psi(self, z):
        """Matrix psi_j(z) = p_j(z) e^{-nQ(z)/2}, shape z.shape + (n,)."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        lw = _log_weight(self.P, self.n, flat)
        out = np.zeros((flat.size, self.n), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            out[:, 0] = np.exp(0.5 * lw) / self.norm0
        out[~np.isfinite(lw), 0] = 0.0
        H = self.H
        for j in range(self.n - 1):
            v = flat * out[:, j] - out[:, :j + 1] @ H[:j + 1, j]
            out[:, j + 1] = v / H[j + 1, j]
        return out.reshape(z.shape + (self.n,))

    def gram(self, quad):
        z, w = quad.nodes()
        Y = self.psi(z) * np.sqrt(w)[:, None]
        return Y.conj().T @ Y


def build_basis(P, n, quad=None, check=True, tol=1e-8):
    """Orthonormal psi_0..psi_{n-1} for e^{-nQ} dA by Arnoldi on the quadrature.

    residual is max|G - I| for the Gram matrix evaluated on an independent
    quadrature with twice the nodes in each direction; IllConditioned is
    raised when it exceeds tol.
    """
    if n > MAX_N:
        raise ValueError("n above configured maximum %d" % MAX_N)
    quad = quad or default_quadrature(P, n)
    z, w = quad.nodes()
    lw = _log_weight(P, n, z)
    sw = np.where(np.isfinite(lw), np.sqrt(w) * np.exp(0.5 * lw), 0.0)
    V = np.zeros((z.size, n), dtype=complex)
    H = np.zeros((n, n), dtype=complex)
    norm0 = float(np.linalg.norm(sw))
    V[:, 0] = sw / norm0
    for j in range(n - 1):
        v = z * V[:, j]
        for _ in range(2):
            c = V[:, :j + 1].conj().T @ v
            v = v - V[:, :j + 1] @ c
            H[:j + 1, j] += c
        hn = np.linalg.norm(v)
        H[j + 1, j] = hn
        V[:, j + 1] = v / hn
    G = V.conj().T @ V
    disc = float(np.max(np.abs(G - np.eye(n))))
    basis = WeightedBasis(P, n, quad, H, norm0, np.nan, disc)
    if check:
        Gr = basis.gram(quad.refined())
        basis.residual = float(np.max(np.abs(Gr - np.eye(n))))
        if basis.residual > tol:
            e = IllConditioned("orthogonality residual %.2e above %.0e" % (basis.residual, tol),
                               basis.residual)
            e.basis = basis
            raise e
    basis.info = {"quadrature": quad.to_dict(), "residual": basis.residual,
                  "discrete_residual": disc, "n": n}
    return basis


def monomial_norms(P, n, jmax, quad=None):
    """Squared norms int |z|^{2j} e^{-nQ} dA for j = 0..jmax by the quadrature."""
    quad = quad or default_quadrature(P, n)
    z, w = quad.nodes()
    ww = w * np.exp(_log_weight(P, n, z))
    a = np.abs(z) ** 2
    return np.array([np.sum(ww * a ** j) for j in range(jmax + 1)])


class FiniteKernel:
    """bfK_n(zeta, eta) = sum_j psi_j(zeta) conj(psi_j(eta))."""

    def __init__(self, basis):
        self.basis = basis
        self.n = basis.n
        self.P = basis.P

    def K(self, zeta, eta):
        a = self.basis.psi(zeta)
        b = self.basis.psi(eta)
        return np.sum(a * b.conj(), axis=-1)

    def matrix(self, zeta, eta):
        a = self.basis.psi(np.ravel(zeta))
        b = self.basis.psi(np.ravel(eta))
        return a @ b.conj().T

    def R(self, zeta):
        return np.sum(np.abs(self.basis.psi(zeta)) ** 2, axis=-1)

    def trace(self, quad=None):
        quad = quad or self.basis.quad.refined()
        z, w = quad.nodes()
        return float(np.sum(w * self.R(z)))


def finite_kernel(P, n, quad=None, check=True):
    return FiniteKernel(build_basis(P, n, quad, check))


def ginibre_kernel_oracle(n, z, w):
    """n e^{-n(|z|^2 + |w|^2)/2} sum_{j<n} (n z conj w)^j / j!."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    x = n * z * np.conj(w)
    # accumulate e^{-pref} (x)^j / j! with the prefactor folded into the first term
    pref = -0.5 * n * (np.abs(z) ** 2 + np.abs(w) ** 2)
    term = np.exp(pref).astype(complex)
    tot = term.copy()
    for j in range(1, n):
        term = term * x / j
        tot = tot + term
    return n * tot


class GinibreKernel:
    """Closed-form finite-n Ginibre kernel with the FiniteKernel interface."""

    def __init__(self, n):
        self.n = n
        from .model import ginibre
        self.P = ginibre()

    def K(self, zeta, eta):
        return ginibre_kernel_oracle(self.n, zeta, eta)

    def matrix(self, zeta, eta):
        return ginibre_kernel_oracle(self.n, np.ravel(zeta)[:, None], np.ravel(eta)[None, :])

    def R(self, zeta):
        return np.real(ginibre_kernel_oracle(self.n, zeta, zeta))


class RescaledKernel:
    """K_n(z, w) = c(z) bfK_n(zeta, eta) conj(c(w)) / (n Delta Q(p)).

    zeta = loc + e^{i theta} z / scale, scale = sqrt(n Delta Q(p)).  The
    unimodular gauge c(z) = |K(z, 0)| / K(z, 0) makes K_n(z, 0) >= 0 for
    every z, in particular at the reference point z0 = 1.
    """

    def __init__(self, kernel, location, theta, scale, gauge=True, tag=""):
        self.kernel = kernel
        self.location = complex(location)
        self.theta = float(theta)
        self.scale = float(scale)
        self.gauge = gauge
        self.tag = tag

    @classmethod
    def from_moving_point(cls, kernel, mp, gauge=True, tag=""):
        return cls(kernel, mp.location, mp.theta, mp.scale, gauge, tag or mp.kind)

    def to_zeta(self, z):
        return self.location + np.exp(1j * self.theta) * np.asarray(z, dtype=complex) / self.scale

    def _cocycle(self, z):
        k0 = self.kernel.K(self.to_zeta(z), np.full(np.shape(z), self.location))
        a = np.abs(k0)
        return np.where(a > 0, a / np.where(a > 0, k0, 1), 1.0)

    def K(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        v = self.kernel.K(self.to_zeta(z), self.to_zeta(w)) / self.scale ** 2
        if self.gauge:
            v = v * self._cocycle(z) * np.conj(self._cocycle(w))
        return v

    def R(self, z):
        return np.real(self.kernel.R(self.to_zeta(z))) / self.scale ** 2


def rescale_kernel(kernel, mp, gauge=True):
    return RescaledKernel.from_moving_point(kernel, mp, gauge)


def fixed_frame(kernel, p, theta, dq=1.0):
    """Rescaling at a fixed point p (no moving-point geometry)."""
    return RescaledKernel(kernel, p, theta, np.sqrt(kernel.n * dq), tag="fixed")


def profile(rk, x):
    """(x, R_n(x)) along the real microscope axis."""
    x = np.asarray(x, dtype=float)
    return x, rk.R(x + 0j)


def decay_fit(x, R, mode="fixed", T=0.0, window=None):
    """Smallest C with R_n <= C * bound over the sampled window.

    fixed : bound e^{-2x^2} on the exterior side x in [0.5, 3]
    moving : bound e^{-2(|x| - T)^2} on T <= |x| <= T + 3
    """
    x = np.asarray(x, dtype=float)
    R = np.asarray(R, dtype=float)
    if mode == "fixed":
        lo, hi = window or (0.5, 3.0)
        sel = (x >= lo) & (x <= hi)
        if not np.any(sel):
            return {"C": 0.0, "window": [lo, hi], "samples": 0}
        C = float(np.max(np.maximum(R[sel], 0.0) * np.exp(2 * x[sel] ** 2)))
        return {"C": C, "window": [lo, hi], "samples": int(np.count_nonzero(sel)), "mode": mode}
    width = window or 3.0
    C, k = decay_bound_check(x, R, T, width)
    return {"C": C, "window": [T, T + width], "samples": k, "mode": mode, "T": T}


def min_det3(kernel, pts):
    """Smallest 3x3 determinant det K(z_i, z_j) over the given triples."""
    out = np.inf
    for tri in pts:
        M = kernel.matrix(tri, tri)
        out = min(out, float(np.real(np.linalg.det(M))))
    return out
