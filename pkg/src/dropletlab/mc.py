"""Metropolis sampler for the Boltzmann-Gibbs law e^{-H_n} of n planar charges.

H_n = sum_{j != k} log 1/|z_j - z_k| + n sum_j Q(z_j), the determinantal
temperature.  Single-site Gaussian proposals; the hot loop runs in the
compiled core (or its pure-Python twin) with all randomness drawn here so
that both backends produce the same chain for the same seed.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._backend import get_impl
from .errors import Collision, InsufficientSamples


def hamiltonian(P, pts):
    """Energy over ordered pairs plus n times the external field."""
    z = np.asarray(pts, dtype=complex).ravel()
    n = z.size
    d = np.abs(z[:, None] - z[None, :])
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0):
        raise Collision("two points coincide")
    return float(-np.sum(np.log(d[off])) + n * np.sum(P(z)))


@dataclass
class GibbsChain:
    n: int
    P: object
    seed: int
    scale: float = 0.3
    x: np.ndarray = None
    y: np.ndarray = None
    proposed: int = 0
    accepted: int = 0
    backend: str = None
    tuned: bool = False
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        if self.x is None:
            # start inside the unit disk, which holds the bulk of every shipped droplet
            r = np.sqrt(self.rng.random(self.n))
            t = 2 * np.pi * self.rng.random(self.n)
            self.x = np.ascontiguousarray(r * np.cos(t))
            self.y = np.ascontiguousarray(r * np.sin(t))
        self._impl = get_impl(self.backend)
        self._fam, self._par = self.P.core_params()
        self._par = np.ascontiguousarray(self._par, dtype=float)

    @property
    def state(self):
        return self.x + 1j * self.y

    @property
    def acceptance(self):
        return self.accepted / self.proposed if self.proposed else float("nan")

    def _draw(self, steps):
        site = self.rng.integers(0, self.n, size=steps).astype(np.int64)
        d = self.rng.standard_normal((2, steps)) * self.scale
        logu = np.log(self.rng.random(steps))
        return site, np.ascontiguousarray(d[0]), np.ascontiguousarray(d[1]), logu

    def run(self, steps, record_every=0):
        """Advance the chain; returns recorded states (rows) if record_every > 0."""
        site, dx, dy, logu = self._draw(steps)
        nrec = steps // record_every if record_every > 0 else 0
        rx = np.zeros((max(nrec, 1), self.n))
        ry = np.zeros((max(nrec, 1), self.n))
        acc = self._impl.mh_run(self.x, self.y, self._fam, self._par, float(self.n),
                                site, dx, dy, logu, int(record_every), rx, ry)
        self.proposed += steps
        self.accepted += int(acc)
        if nrec:
            return rx[:nrec] + 1j * ry[:nrec]
        return None

    def to_dict(self):
        return {"n": self.n, "seed": self.seed, "scale": self.scale,
                "proposed": self.proposed, "accepted": self.accepted,
                "state": [[float(a), float(b)] for a, b in zip(self.x, self.y)],
                "potential": self.P.to_dict()}


def mh_step(chain):
    """One single-site proposal accepted with probability min(1, e^{-dH})."""
    chain.run(1)
    return chain


def burn_in(chain, steps, target=(0.3, 0.5), round_steps=2000, max_rounds=200):
    """Tune the proposal scale into the target acceptance band, then run steps frozen."""
    lo, hi = target
    for _ in range(max_rounds):
        a0, p0 = chain.accepted, chain.proposed
        chain.run(round_steps)
        rate = (chain.accepted - a0) / (chain.proposed - p0)
        chain.history.append((chain.scale, rate))
        if lo <= rate <= hi:
            break
        chain.scale *= float(np.exp(2.0 * (rate - 0.5 * (lo + hi))))
    chain.tuned = True
    if steps > 0:
        chain.run(steps)
    chain.accepted = chain.proposed = 0
    return chain


@dataclass
class Frame:
    """Microscope z = e^{-i theta} scale (zeta - location)."""
    location: complex = 0j
    theta: float = 0.0
    scale: float = 1.0

    def __call__(self, zeta):
        return np.exp(-1j * self.theta) * self.scale * (np.asarray(zeta) - self.location)


@dataclass
class FieldEstimate:
    kind: str
    edges: tuple
    density: np.ndarray
    se: np.ndarray
    counts: np.ndarray
    samples: int
    batches: int
    frame: Frame
    acceptance: float

    def rows(self):
        out = []
        if self.kind == "radial":
            e = self.edges[0]
            for i in range(len(e) - 1):
                out.append((0.5 * (e[i] + e[i + 1]), self.density[i], self.se[i], int(self.counts[i])))
        else:
            xe, ye = self.edges
            for i in range(len(ye) - 1):
                for j in range(len(xe) - 1):
                    out.append((0.5 * (xe[j] + xe[j + 1]), 0.5 * (ye[i] + ye[i + 1]),
                                self.density[i, j], self.se[i, j], int(self.counts[i, j])))
        return out


def _bin(zs, kind, edges):
    if kind == "radial":
        c, _ = np.histogram(np.abs(zs), bins=edges[0])
        area = np.diff(edges[0] ** 2)
    else:
        c, _, _ = np.histogram2d(zs.imag, zs.real, bins=[edges[1], edges[0]])
        area = np.outer(np.diff(edges[1]), np.diff(edges[0])) / np.pi
    return c, area


def estimate_density(chain, frame=None, bins=("radial", np.linspace(0, 4, 11)),
                     burn=10000, samples=100000, record_every=None, batches=50,
                     min_burn=1000):
    """Histogram of rescaled points; density per unit dA of the microscope plane.

    bins : ('radial', edges) or ('grid', xedges, yedges) in microscope units.
    Standard errors come from batch means over contiguous blocks.
    """
    if burn < min_burn:
        raise InsufficientSamples("burn-in below configured minimum %d" % min_burn)
    if samples <= 0:
        raise InsufficientSamples("empty sample set")
    if batches < 20:
        raise InsufficientSamples("at least 20 batches are required")
    frame = frame or Frame(0j, 0.0, float(np.sqrt(chain.n)))
    record_every = record_every or chain.n
    if not chain.tuned:
        burn_in(chain, burn)
    else:
        chain.run(burn)
    kind = bins[0]
    edges = tuple(np.asarray(b, dtype=float) for b in bins[1:])
    nrec = samples
    per = nrec // batches
    if per == 0:
        raise InsufficientSamples("fewer samples than batches")
    bm = []
    total = None
    for b in range(batches):
        rec = chain.run(per * record_every, record_every)
        zs = frame(rec.ravel())
        c, area = _bin(zs, kind, edges)
        total = c if total is None else total + c
        bm.append(c / (per * area))
    bm = np.array(bm)
    dens = bm.mean(axis=0)
    se = bm.std(axis=0, ddof=1) / np.sqrt(batches)
    if np.any(total < 10):
        raise InsufficientSamples("a reported bin has fewer than 10 counts")
    return FieldEstimate(kind, edges, dens, se, total, per * batches, batches, frame,
                         chain.acceptance)


def ginibre_radial_oracle(n, edges):
    """Exact R_n averaged over annuli of the microscope plane z = sqrt(n) zeta.

    The expected count in r1 < |zeta| < r2 is
    sum_{j<n} [P(j+1, n r2^2) - P(j+1, n r1^2)] with P the regularized
    lower incomplete gamma function.
    """
    e = np.asarray(edges, dtype=float)
    u = e ** 2  # n |zeta|^2 = |z|^2 in microscope units
    j = np.arange(1, n + 1)[:, None]
    cnt = special.gammainc(j, u[None, :]).sum(axis=0)
    return np.diff(cnt) / np.diff(u)


def mean_square_radius(rec):
    """Sum over particles of |zeta|^2 for each recorded state."""
    return np.sum(np.abs(rec) ** 2, axis=-1)
