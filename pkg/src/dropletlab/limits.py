"""Closed-form candidate limit kernels and one-point profiles.

Every translation-invariant kernel here has the form
K(z, w) = G(z, w) Phi(z + conj(w)) with G the Ginibre kernel and
Phi = gamma * f a Gaussian smoothing of a step function 0 <= f <= 1.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import QuadratureFailure

SQRT2 = np.sqrt(2.0)


def complex_erf(z):
    """Entire error function (scipy's Faddeeva-based implementation)."""
    z = np.asarray(z)
    if np.any(np.abs(z) > 30):
        raise OverflowError("complex_erf is validated for |z| <= 30")
    return special.erf(z)


def _erf_diff(u, v):
    """erf(u) - erf(v) without cancellation when u, v lie in the same half-plane."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    out = special.erf(u) - special.erf(v)
    pos = (u.real > 0) & (v.real > 0)
    neg = (u.real < 0) & (v.real < 0)
    if np.any(pos):
        out = np.where(pos, special.erfc(v) - special.erfc(u), out)
    if np.any(neg):
        out = np.where(neg, special.erfc(-u) - special.erfc(-v), out)
    return out


def _step_conv(breaks, values, z):
    """gamma * f at z for f = values[k] on [breaks[k], breaks[k+1])."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for k, c in enumerate(values):
        if c == 0:
            continue
        a, b = breaks[k], breaks[k + 1]
        # gamma * 1_(a,b) (z) = 1/2 [erf((z - a)/sqrt2) - erf((z - b)/sqrt2)]
        if np.isinf(a) and np.isinf(b):
            out = out + c
        elif np.isinf(a):
            out = out + c * 0.5 * special.erfc((z - b) / SQRT2)
        elif np.isinf(b):
            out = out + c * 0.5 * special.erfc((a - z) / SQRT2)
        else:
            out = out + c * 0.5 * _erf_diff((z - a) / SQRT2, (z - b) / SQRT2)
    return out


@dataclass(frozen=True)
class ProfileFunction:
    """Phi = gamma * f with f a step function given by breakpoints and values.

    breaks : increasing, may start at -inf and end at +inf
    values : len(breaks) - 1 numbers in [0, 1]
    """
    breaks: tuple
    values: tuple
    variant: str = "custom"

    def __post_init__(self):
        if len(self.values) != len(self.breaks) - 1:
            raise ValueError("need one value per step")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breakpoints must increase")
        if any(v < 0 or v > 1 for v in self.values):
            raise ValueError("step values must lie in [0, 1]")

    def __call__(self, z):
        return _step_conv(self.breaks, self.values, z)

    def f(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for k, c in enumerate(self.values):
            out = np.where((t >= self.breaks[k]) & (t < self.breaks[k + 1]), c, out)
        return out

    @property
    def symmetric(self):
        b = np.asarray(self.breaks)
        return bool(np.allclose(b, -b[::-1]) and np.allclose(self.values, self.values[::-1]))

    def to_dict(self):
        enc = [None if np.isinf(b) else float(b) for b in self.breaks]
        return {"variant": self.variant, "breaks": enc, "values": [float(v) for v in self.values]}


def heaviside_profile():
    """f = 1 on (-inf, 0): the regular free-boundary edge."""
    return ProfileFunction((-np.inf, 0.0), (1.0,), "heaviside")


def interval_profile(s=None, a=None, b=None):
    """f = 1_I with I = (-s/2, s/2), or I = (a, b) when both ends are given."""
    if s is not None:
        a, b = -s / 2.0, s / 2.0
    return ProfileFunction((float(a), float(b)), (1.0,), "interval")


def step_profile(breaks, values):
    return ProfileFunction(tuple(float(b) for b in breaks), tuple(float(v) for v in values))


def profile_phi(s, z):
    """Phi_s(z) = 1/2 [erf((z + s/2)/sqrt2) - erf((z - s/2)/sqrt2)]."""
    if s > 40:
        raise ValueError("s beyond validated range")
    return interval_profile(s)(z)


def ginibre_G(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.exp(z * np.conj(w) - 0.5 * np.abs(z) ** 2 - 0.5 * np.abs(w) ** 2)


def edge_profile(x):
    """(gamma * 1_(-inf,0))(2x) = erfc(sqrt2 x) / 2."""
    return 0.5 * special.erfc(SQRT2 * np.asarray(x, dtype=float))


def hard_edge_F(T, t):
    """F_T = gamma * 1_(-2T, 2T)."""
    t = np.asarray(t, dtype=float)
    return np.real(_erf_diff((t + 2 * T) / SQRT2, (t - 2 * T) / SQRT2)) * 0.5


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _hard_edge_H_panels(T, z, panels):
    edges = np.linspace(-2 * T, 2 * T, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wt = (half[:, None] * _GL_W[None, :]).ravel() / hard_edge_F(T, t)
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i0 in range(0, flat.size, 256):
        zz = flat[i0:i0 + 256, None]
        out[i0:i0 + 256] = np.exp(-0.5 * (zz - t[None, :]) ** 2) @ wt
    return (out / np.sqrt(2 * np.pi)).reshape(z.shape)


def hard_edge_H(T, z, rtol=1e-11, max_panels=1 << 12):
    """H_T(z) = (2 pi)^(-1/2) int_{-2T}^{2T} e^{-(z - t)^2 / 2} / F_T(t) dt.

    Composite 16-point Gauss-Legendre, panel count doubled until two
    successive values agree to rtol.
    """
    if T > 20:
        raise ValueError("T beyond validated range")
    panels = max(4, int(np.ceil(4 * T)))
    prev = _hard_edge_H_panels(T, z, panels)
    while panels < max_panels:
        panels *= 2
        cur = _hard_edge_H_panels(T, z, panels)
        err = np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300))
        if err <= rtol:
            return cur
        prev = cur
    raise QuadratureFailure("hard-edge quadrature did not self-converge")


def hard_edge_R(T, z):
    """R_T^h(z) = H_T(2 Re z) 1_(-T, T)(Re z)."""
    x = np.real(np.asarray(z, dtype=complex))
    inside = np.abs(x) < T
    out = np.zeros(x.shape)
    if np.any(inside):
        out[inside] = np.real(hard_edge_H(T, 2 * x[inside]))
    return out


class LimitKernel:
    """K(z, w) = G(z, w) Psi(z, w) with Psi(z, w) = Phi(z + conj w).

    variant 'ginibre' : Phi = 1
    variant 'ti' : Phi a ProfileFunction or any entire callable
    variant 'hardedge' : Phi = H_T, with indicators of the strip |Re| < T
    """

    def __init__(self, variant="ginibre", phi=None, T=None, name=None):
        if variant not in ("ginibre", "ti", "hardedge"):
            raise ValueError("unknown kernel variant %r" % variant)
        if variant == "ti" and phi is None:
            raise ValueError("translation-invariant kernel needs a profile")
        if variant == "hardedge" and T is None:
            raise ValueError("hard-edge kernel needs T")
        self.variant = variant
        self.phi = phi
        self.T = T
        self.name = name or variant

    @property
    def translation_invariant(self):
        return self.variant in ("ginibre", "ti")

    def Phi(self, xi):
        xi = np.asarray(xi, dtype=complex)
        if self.variant == "ginibre":
            return np.ones(xi.shape, dtype=complex)
        if self.variant == "hardedge":
            return hard_edge_H(self.T, xi)
        return np.asarray(self.phi(xi), dtype=complex)

    def _strip(self, z):
        if self.variant != "hardedge":
            return 1.0
        return (np.abs(np.real(z)) < self.T).astype(float)

    def Psi(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        return self.Phi(z + np.conj(w)) * self._strip(z) * self._strip(w)

    def K(self, z, w):
        return ginibre_G(z, w) * self.Psi(z, w)

    def R(self, z):
        z = np.asarray(z, dtype=complex)
        return np.real(self.Phi(2 * z.real + 0j)) * self._strip(z)

    def L(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        return np.exp(z * np.conj(w)) * self.Psi(z, w)

    def log_L_diag(self, z):
        """log L(z, z) = |z|^2 + log Psi(z, z), free of overflow."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            return np.abs(z) ** 2 + np.log(self.R(z))

    def to_dict(self):
        d = {"variant": self.variant, "name": self.name}
        if self.T is not None:
            d["T"] = self.T
        if isinstance(self.phi, ProfileFunction):
            d["profile"] = self.phi.to_dict()
        return d


def ginibre_kernel():
    return LimitKernel("ginibre", name="ginibre")


def ti_kernel_obj(s):
    return LimitKernel("ti", interval_profile(s), name="K_s(s=%g)" % s)


def edge_kernel():
    return LimitKernel("ti", heaviside_profile(), name="erfc-edge")


def hard_edge_kernel(T):
    return LimitKernel("hardedge", T=T, name="hard-edge(T=%g)" % T)


def ti_kernel(s, z, w):
    """K_s(z, w) = G(z, w) Phi_s(z + conj w)."""
    return ti_kernel_obj(s).K(z, w)


def decay_bound_check(x, R, T=0.0, window=3.0, side="both"):
    """Least C with R(x) <= C exp(-2 (|x| - T)^2) for T <= |x| <= T + window.

    side selects the samples: 'both', 'positive' (x >= T) or 'negative'.
    Returns (C, number of samples used).
    """
    x = np.asarray(x, dtype=float)
    R = np.asarray(R, dtype=float)
    ax = np.abs(x)
    sel = (ax >= T) & (ax <= T + window)
    if side == "positive":
        sel &= x >= 0
    elif side == "negative":
        sel &= x <= 0
    if not np.any(sel):
        return 0.0, 0
    d = ax[sel] - T
    C = float(np.max(np.maximum(R[sel], 0.0) * np.exp(2.0 * d * d)))
    return C, int(np.count_nonzero(sel))
