"""External potentials Q and their Laplacians.

Conventions: the Laplacian is Delta = d dbar, one quarter of the usual
Laplacian, and area measure is dA = d^2 z / pi.  Three parametric families
are shipped (Ginibre, harmonic-moment, point-charge insertion); the
harmonic-moment family carries a smooth quartic guard that restores growth
far away from the droplet without touching Q near it.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRegion

FAMILIES = ("ginibre", "harmonic", "pointcharge")


@dataclass(frozen=True)
class Guard:
    """Penalty kappa * ((e - 1)_+)^4 * (1 + |z|^2)^2 with e the elliptical radius.

    e = sqrt((x/ax)^2 + (y/by)^2).  With ax = by = rho the onset is the circle
    |z| = rho.  The fourth-order contact keeps Q three times differentiable;
    the (1 + |z|^2)^2 factor lets the guard dominate the polynomial part of
    the harmonic-moment field up to degree 6.
    """
    ax: float
    by: float
    kappa: float = 10.0

    def ellip(self, z):
        z = np.asarray(z, dtype=complex)
        return np.sqrt((z.real / self.ax) ** 2 + (z.imag / self.by) ** 2)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        e = np.maximum(self.ellip(z) - 1.0, 0.0)
        return self.kappa * e ** 4 * (1.0 + np.abs(z) ** 2) ** 2

    def inside(self, z):
        return self.ellip(z) <= 1.0


@dataclass(frozen=True)
class Potential:
    """A member of one of the shipped potential families.

    family : 'ginibre', 'harmonic' or 'pointcharge'
    tk : {k: t_k} harmonic moments (harmonic family)
    c, a : charge and location (point-charge family)
    guard_radius : radius rho_g; Q is unmodified for |z| < rho_g
    guard : optional Guard (harmonic family only)
    """
    family: str
    tk: dict = field(default_factory=dict)
    c: float = 0.0
    a: complex = 0j
    guard_radius: float = 2.0
    guard: Guard = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError("unknown potential family %r" % self.family)

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.tk.items())), self.c,
                     self.a, self.guard_radius, self.guard))

    # evaluation
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        q = np.abs(z) ** 2
        if self.family == "harmonic":
            poly = np.zeros_like(z)
            for k, t in self.tk.items():
                poly = poly + t * z ** k
            q = q - 2.0 * poly.real
            if self.guard is not None:
                q = q + self.guard(z)
        elif self.family == "pointcharge":
            with np.errstate(divide="ignore"):
                q = q - 2.0 * self.c * np.log(np.abs(z - self.a))
        return q

    def in_region(self, z):
        """True where z lies in the region on which Delta Q = 1 is claimed."""
        z = np.asarray(z, dtype=complex)
        if self.guard is not None:
            ok = self.guard.inside(z)
        else:
            ok = np.abs(z) <= self.guard_radius
        if self.family == "pointcharge":
            ok = ok & (z != self.a)
        return ok

    def laplacian(self, z):
        z = np.asarray(z, dtype=complex)
        if not np.all(self.in_region(z)):
            raise OutOfRegion("Laplacian requested outside the analytic region")
        return np.ones(z.shape)

    @property
    def symmetry(self):
        if self.family == "ginibre":
            return "rotation"
        if self.family == "harmonic":
            ks = [k for k, t in self.tk.items() if t != 0]
            if not ks:
                return "rotation"
            return "rotation/%d" % int(np.gcd.reduce(ks))
        return "conjugation" if np.imag(self.a) == 0 else "none"

    @property
    def extent(self):
        """Radius of a disk outside which the weight e^{-nQ} is negligible."""
        if self.guard is not None:
            return max(self.guard.ax, self.guard.by)
        return self.guard_radius

    def to_dict(self):
        d = {"family": self.family, "guard_radius": self.guard_radius}
        if self.family == "harmonic":
            d["tk"] = {str(k): [float(np.real(t)), float(np.imag(t))]
                       for k, t in sorted(self.tk.items())}
            if self.guard is not None:
                d["guard"] = {"ax": self.guard.ax, "by": self.guard.by,
                              "kappa": self.guard.kappa}
        if self.family == "pointcharge":
            d["c"] = self.c
            d["a"] = [float(np.real(self.a)), float(np.imag(self.a))]
        return d

    @classmethod
    def from_dict(cls, d):
        fam = d["family"]
        kw = {"guard_radius": float(d.get("guard_radius", 2.0))}
        if fam == "harmonic":
            kw["tk"] = {int(k): complex(v[0], v[1]) if isinstance(v, (list, tuple))
                        else complex(v) for k, v in d.get("tk", {}).items()}
            g = d.get("guard")
            if g is not None:
                kw["guard"] = Guard(float(g["ax"]), float(g["by"]),
                                    float(g.get("kappa", 10.0)))
        if fam == "pointcharge":
            a = d.get("a", 0.0)
            kw["c"] = float(d["c"])
            kw["a"] = complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
        return cls(fam, **kw)

    def core_params(self):
        """Flat parameter vector for the compiled Metropolis kernel."""
        if self.family == "ginibre":
            return 0, np.zeros(1)
        if self.family == "pointcharge":
            return 2, np.array([self.c, np.real(self.a), np.imag(self.a)])
        ks = sorted(self.tk)
        p = [len(ks)]
        for k in ks:
            t = complex(self.tk[k])
            p += [k, t.real, t.imag]
        if self.guard is None:
            p += [0.0, 1.0, 1.0]
        else:
            p += [self.guard.kappa, self.guard.ax, self.guard.by]
        return 1, np.array(p, dtype=float)


def ginibre():
    return Potential("ginibre", guard_radius=2.0)


def harmonic_moment(tk, guard_axes=None, guard_radius=2.0, kappa=10.0):
    """Q = |z|^2 - 2 Re sum t_k z^k, guarded outside an ellipse or disk.

    guard_axes : (ax, by) semi-axes of the guard ellipse; defaults to the
    disk of radius guard_radius.
    """
    tk = {int(k): complex(v) for k, v in tk.items()}
    if guard_axes is None:
        guard_axes = (guard_radius, guard_radius)
    ax, by = float(guard_axes[0]), float(guard_axes[1])
    return Potential("harmonic", tk=tk, guard_radius=max(ax, by),
                     guard=Guard(ax, by, float(kappa)))


def point_charge(c, a, guard_radius=None):
    """Q = |z|^2 + 2c log 1/|z - a|; droplet lies in |z| <= sqrt(1 + c)."""
    if guard_radius is None:
        guard_radius = np.sqrt(1.0 + c) + 1.0
    return Potential("pointcharge", c=float(c), a=complex(a),
                     guard_radius=float(guard_radius))


def eval_potential(P, z):
    """Q(z); +inf exactly at the declared logarithmic singularity."""
    return P(z)


def eval_laplacian(P, z):
    """Delta Q(z) with Delta = d dbar; raises OutOfRegion outside the region."""
    return P.laplacian(z)


def fd_laplacian(P, z, h=1e-3):
    """Five-point stencil for d dbar (a quarter of the standard stencil)."""
    z = np.asarray(z, dtype=complex)
    s = P(z + h) + P(z - h) + P(z + 1j * h) + P(z - 1j * h) - 4.0 * P(z)
    return s / (4.0 * h * h)


def growth_report(P, radii, samples=4096):
    """min over |z| = r of Q(z)/log|z|^2 for each radius r (radii > 1)."""
    th = 2 * np.pi * np.arange(samples) / samples
    out = []
    for r in radii:
        z = r * np.exp(1j * th)
        out.append(float(np.min(P(z) / np.log(r * r))))
    return {"radii": [float(r) for r in radii], "min_ratio": out,
            "ok": bool(all(v > 1.0 for v in out))}
